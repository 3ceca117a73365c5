#include "saod/matching.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <unordered_map>

namespace saod {

std::vector<int> MatchAssignment::ranked_labels() const {
  std::vector<int> labels;
  labels.reserve(rank_order.size());
  for (std::size_t i : rank_order) labels.push_back(outcomes[i].true_positive ? 1 : 0);
  return labels;
}

std::vector<std::size_t> rank_by_score(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

void validate_tau(double tau) {
  // tau = 0 is admitted so that "any overlap" matching can be expressed.
  if (!(tau >= 0.0 && tau < 1.0)) {
    throw Error(ErrorCode::InvalidTau, "tau must lie in [0, 1), got " + std::to_string(tau));
  }
}

MatchAssignment match_class(std::span<const Detection> detections,
                            std::span<const GroundTruth> ground_truths, double tau) {
  validate_tau(tau);
  MatchAssignment result;
  result.tau = tau;
  result.outcomes.assign(detections.size(), DetectionOutcome{});
  result.gt_matched.assign(ground_truths.size(), false);

  std::vector<double> scores;
  scores.reserve(detections.size());
  for (const auto& d : detections) scores.push_back(d.score);
  result.rank_order = rank_by_score(scores);

  std::unordered_map<ImageId, std::vector<std::size_t>> gts_by_image;
  for (std::size_t g = 0; g < ground_truths.size(); ++g) {
    gts_by_image[ground_truths[g].image_id].push_back(g);
  }

  for (std::size_t det : result.rank_order) {
    auto it = gts_by_image.find(detections[det].image_id);
    if (it == gts_by_image.end()) continue;
    std::size_t best = kUnmatched;
    double best_iou = tau;
    for (std::size_t g : it->second) {
      if (result.gt_matched[g]) continue;
      const double overlap = iou(detections[det].box, ground_truths[g].box);
      // Strict comparison: IoU must exceed tau, and the first (lowest-index)
      // ground truth wins exact IoU ties.
      if (overlap > best_iou) {
        best_iou = overlap;
        best = g;
      }
    }
    if (best != kUnmatched) {
      result.gt_matched[best] = true;
      result.outcomes[det] = DetectionOutcome{true, best, best_iou};
      ++result.num_tp;
    }
  }
  result.num_fp = detections.size() - result.num_tp;
  result.num_fn = ground_truths.size() - result.num_tp;
  return result;
}

std::vector<ClassMatch> match_dataset(const DetectionSet& detections,
                                      const GroundTruthSet& ground_truths, double tau) {
  validate_tau(tau);
  const int k = detections.universe().num_classes;
  if (ground_truths.universe().num_classes != k) {
    throw Error(ErrorCode::InvalidArgument, "detections and ground truths disagree on K");
  }
  std::vector<ClassMatch> matches;
  matches.reserve(static_cast<std::size_t>(k));
  for (ClassId c = 1; c <= k; ++c) {
    ClassMatch m;
    m.class_id = c;
    m.detection_indices = detections.indices_for_class(c);
    for (std::size_t i : m.detection_indices) m.detections.push_back(detections[i]);
    for (std::size_t i : ground_truths.indices_for_class(c)) {
      m.ground_truths.push_back(ground_truths.annotations()[i]);
    }
    m.assignment = match_class(m.detections, m.ground_truths, tau);
    matches.push_back(std::move(m));
  }
  return matches;
}

}  // namespace saod
