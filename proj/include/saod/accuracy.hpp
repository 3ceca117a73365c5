#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "saod/datamodel.hpp"
#include "saod/matching.hpp"

namespace saod {

/// Precision/recall per rank plus the monotone interpolated precision.
/// The curve is implicitly extended with (recall 0, interpolated[0]) and
/// (recall.back(), precision 0).
struct PRCurve {
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> interpolated;
  std::size_t num_gt = 0;

  bool empty() const { return precision.empty(); }
};

/// labels: TP(1)/FP(0) sorted by descending score.
PRCurve pr_curve(std::span<const int> labels, std::size_t num_gt);

enum class ApMode {
  AllPoints,  // exact area under the interpolated step curve
  Coco101,    // 101 recall samples, for cross-checking against COCO tooling
};

double average_precision(const PRCurve& curve, ApMode mode = ApMode::AllPoints);

/// AP of one matched class. Zero when the class has detections or ground
/// truths but no TP.
double class_average_precision(const MatchAssignment& assignment,
                               ApMode mode = ApMode::AllPoints);

/// The ten IoU thresholds 0.50, 0.55, ..., 0.95.
std::array<double, 10> coco_thresholds();

struct ApResult {
  double ap = 0.0;                      // class mean
  std::map<ClassId, double> per_class;  // classes with any GT or detection
};

/// Class-mean AP at a single tau.
ApResult mean_average_precision(const DetectionSet& detections,
                                const GroundTruthSet& ground_truths, double tau,
                                ApMode mode = ApMode::AllPoints);

struct CocoApResult {
  double ap = 0.0;
  std::array<double, 10> per_threshold{};
  std::map<ClassId, double> per_class;  // averaged over the ten thresholds
};

CocoApResult coco_ap(const DetectionSet& detections, const GroundTruthSet& ground_truths,
                     ApMode mode = ApMode::AllPoints);

struct LrpResult {
  double lrp = 1.0;
  double lrp_loc = 1.0;  // mean (1 - IoU) over TPs; 1 when there is no TP
  double lrp_fp = 0.0;   // 1 - precision; 0 when there is no detection
  double lrp_fn = 0.0;   // 1 - recall; 0 when there is no ground truth
  std::size_t num_tp = 0;
  std::size_t num_fp = 0;
  std::size_t num_fn = 0;
};

/// LRP error of one matched class. Throws DegenerateInstance when the class
/// has neither detections nor ground truths.
LrpResult lrp(const MatchAssignment& assignment);

struct DatasetLrp {
  double lrp = 1.0;
  double lrp_loc = 1.0;
  double lrp_fp = 0.0;
  double lrp_fn = 0.0;
  std::map<ClassId, LrpResult> per_class;  // non-degenerate classes only
};

/// Counts pooled dataset-wide per class, then averaged over classes with
/// equal weight. With no scorable class at all the result is lrp = 1.
DatasetLrp dataset_lrp(const DetectionSet& detections, const GroundTruthSet& ground_truths,
                       double tau);

/// Per-class score threshold minimising pooled class LRP. Candidates are the
/// distinct detection scores and +inf ("keep none"); ties go to the larger
/// threshold. Detections are kept when score >= threshold.
std::map<ClassId, double> lrp_optimal_thresholds(const DetectionSet& detections,
                                                 const GroundTruthSet& ground_truths,
                                                 double tau);

}  // namespace saod
