#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "saod/datamodel.hpp"

namespace saod {

inline constexpr std::size_t kUnmatched = std::numeric_limits<std::size_t>::max();

/// Default TP validation threshold for LRP / LaECE evaluation.
inline constexpr double kDefaultTau = 0.10;

struct DetectionOutcome {
  bool true_positive = false;
  std::size_t gt_index = kUnmatched;  // into the ground-truth span, TPs only
  double iou = 0.0;                   // IoU with the matched ground truth
};

/// Result of greedy matching for a single class.
struct MatchAssignment {
  double tau = kDefaultTau;
  std::vector<DetectionOutcome> outcomes;  // aligned with the input detections
  std::vector<std::size_t> rank_order;     // detection indices, descending score
  std::vector<bool> gt_matched;            // aligned with the input ground truths
  std::size_t num_tp = 0;
  std::size_t num_fp = 0;
  std::size_t num_fn = 0;

  std::size_t num_gt() const { return gt_matched.size(); }
  std::size_t num_detections() const { return outcomes.size(); }

  /// TP(1)/FP(0) labels in rank order.
  std::vector<int> ranked_labels() const;
};

/// Stable descending-score order; equal scores keep input order.
std::vector<std::size_t> rank_by_score(std::span<const double> scores);

void validate_tau(double tau);

/// COCO-style greedy assignment. Detections are visited by descending score
/// (ties by input order); a detection becomes TP when some unassigned
/// ground truth in the same image has IoU strictly above tau, taking the
/// largest IoU and, on exact IoU ties, the lowest ground-truth index.
MatchAssignment match_class(std::span<const Detection> detections,
                            std::span<const GroundTruth> ground_truths, double tau);

/// Per-class matching over a whole dataset.
struct ClassMatch {
  ClassId class_id = 1;
  std::vector<Detection> detections;          // class detections, input order
  std::vector<std::size_t> detection_indices; // positions in the DetectionSet
  std::vector<GroundTruth> ground_truths;     // class ground truths, input order
  MatchAssignment assignment;
};

/// One entry per declared class, in class-id order.
std::vector<ClassMatch> match_dataset(const DetectionSet& detections,
                                      const GroundTruthSet& ground_truths, double tau);

}  // namespace saod
