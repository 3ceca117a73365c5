#include "saod/accuracy.hpp"

#include <algorithm>
#include <limits>

namespace saod {

PRCurve pr_curve(std::span<const int> labels, std::size_t num_gt) {
  if (labels.empty() && num_gt == 0) {
    throw Error(ErrorCode::EmptyCurve, "no detections and no ground truths");
  }
  PRCurve curve;
  curve.num_gt = num_gt;
  const std::size_t n = labels.size();
  curve.precision.resize(n);
  curve.recall.resize(n);
  curve.interpolated.resize(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += labels[i] != 0 ? 1 : 0;
    curve.precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    curve.recall[i] = num_gt == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(num_gt);
  }
  // max{Pr_j : Re_j >= Re_i}: a suffix maximum, then shared across each
  // run of equal recall.
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    running = std::max(running, curve.precision[i]);
    curve.interpolated[i] = running;
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (curve.recall[i] == curve.recall[i - 1]) curve.interpolated[i] = curve.interpolated[i - 1];
  }
  return curve;
}

double average_precision(const PRCurve& curve, ApMode mode) {
  if (curve.empty()) return 0.0;
  if (mode == ApMode::Coco101) {
    double sum = 0.0;
    std::size_t pos = 0;
    for (int s = 0; s <= 100; ++s) {
      const double r = s / 100.0;
      while (pos < curve.recall.size() && curve.recall[pos] < r) ++pos;
      if (pos < curve.recall.size()) sum += curve.interpolated[pos];
    }
    return sum / 101.0;
  }
  double area = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < curve.recall.size(); ++i) {
    area += (curve.recall[i] - prev_recall) * curve.interpolated[i];
    prev_recall = curve.recall[i];
  }
  return area;
}

double class_average_precision(const MatchAssignment& assignment, ApMode mode) {
  const auto labels = assignment.ranked_labels();
  return average_precision(pr_curve(labels, assignment.num_gt()), mode);
}

std::array<double, 10> coco_thresholds() {
  std::array<double, 10> taus{};
  for (std::size_t i = 0; i < taus.size(); ++i) taus[i] = 0.50 + 0.05 * static_cast<double>(i);
  return taus;
}

ApResult mean_average_precision(const DetectionSet& detections,
                                const GroundTruthSet& ground_truths, double tau, ApMode mode) {
  ApResult result;
  double sum = 0.0;
  for (const auto& m : match_dataset(detections, ground_truths, tau)) {
    if (m.detections.empty() && m.ground_truths.empty()) continue;
    const double ap = class_average_precision(m.assignment, mode);
    result.per_class[m.class_id] = ap;
    sum += ap;
  }
  result.ap = result.per_class.empty() ? 0.0 : sum / static_cast<double>(result.per_class.size());
  return result;
}

CocoApResult coco_ap(const DetectionSet& detections, const GroundTruthSet& ground_truths,
                     ApMode mode) {
  CocoApResult result;
  const auto taus = coco_thresholds();
  std::map<ClassId, double> class_sums;
  for (std::size_t t = 0; t < taus.size(); ++t) {
    const ApResult at_tau = mean_average_precision(detections, ground_truths, taus[t], mode);
    result.per_threshold[t] = at_tau.ap;
    for (const auto& [c, ap] : at_tau.per_class) class_sums[c] += ap;
  }
  double total = 0.0;
  for (double v : result.per_threshold) total += v;
  result.ap = total / static_cast<double>(taus.size());
  for (const auto& [c, sum] : class_sums) {
    result.per_class[c] = sum / static_cast<double>(taus.size());
  }
  return result;
}

LrpResult lrp(const MatchAssignment& assignment) {
  const std::size_t tp = assignment.num_tp;
  const std::size_t fp = assignment.num_fp;
  const std::size_t fn = assignment.num_fn;
  const std::size_t total = tp + fp + fn;
  if (total == 0) {
    throw Error(ErrorCode::DegenerateInstance, "LRP undefined without detections or ground truths");
  }
  double loc_error = 0.0;  // sum of (1 - IoU)
  for (const auto& o : assignment.outcomes) {
    if (o.true_positive) loc_error += 1.0 - o.iou;
  }
  const double tau = assignment.tau;
  LrpResult r;
  r.num_tp = tp;
  r.num_fp = fp;
  r.num_fn = fn;
  // 1 - lq = (1 - IoU) / (1 - tau)
  r.lrp = (static_cast<double>(fp + fn) + loc_error / (1.0 - tau)) / static_cast<double>(total);
  r.lrp_loc = tp == 0 ? 1.0 : loc_error / static_cast<double>(tp);
  r.lrp_fp = tp + fp == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(tp + fp);
  r.lrp_fn = tp + fn == 0 ? 0.0 : static_cast<double>(fn) / static_cast<double>(tp + fn);
  return r;
}

DatasetLrp dataset_lrp(const DetectionSet& detections, const GroundTruthSet& ground_truths,
                       double tau) {
  DatasetLrp result;
  double lrp_sum = 0.0, loc_sum = 0.0, fp_sum = 0.0, fn_sum = 0.0;
  for (const auto& m : match_dataset(detections, ground_truths, tau)) {
    if (m.detections.empty() && m.ground_truths.empty()) continue;
    const LrpResult r = lrp(m.assignment);
    result.per_class[m.class_id] = r;
    lrp_sum += r.lrp;
    loc_sum += r.lrp_loc;
    fp_sum += r.lrp_fp;
    fn_sum += r.lrp_fn;
  }
  if (!result.per_class.empty()) {
    const double n = static_cast<double>(result.per_class.size());
    result.lrp = lrp_sum / n;
    result.lrp_loc = loc_sum / n;
    result.lrp_fp = fp_sum / n;
    result.lrp_fn = fn_sum / n;
  }
  return result;
}

std::map<ClassId, double> lrp_optimal_thresholds(const DetectionSet& detections,
                                                 const GroundTruthSet& ground_truths,
                                                 double tau) {
  constexpr double kKeepNone = std::numeric_limits<double>::infinity();
  std::map<ClassId, double> thresholds;
  for (const auto& m : match_dataset(detections, ground_truths, tau)) {
    const auto& a = m.assignment;
    const std::size_t num_gt = a.num_gt();
    // Keeping nothing: FN-only LRP (1) when GTs exist, otherwise nothing to
    // get wrong.
    double best_threshold = kKeepNone;
    double best_lrp = num_gt > 0 ? 1.0 : 0.0;

    // Greedy matching of a score prefix is unaffected by lower-scored
    // detections, so one matching pass serves every candidate threshold.
    std::size_t tp = 0, fp = 0;
    double loc_error = 0.0;
    const auto& order = a.rank_order;
    for (std::size_t pos = 0; pos < order.size();) {
      const double score = m.detections[order[pos]].score;
      // Absorb every detection tied at this score.
      while (pos < order.size() && m.detections[order[pos]].score == score) {
        const auto& o = a.outcomes[order[pos]];
        if (o.true_positive) {
          ++tp;
          loc_error += 1.0 - o.iou;
        } else {
          ++fp;
        }
        ++pos;
      }
      const std::size_t fn = num_gt - tp;
      const double value =
          (static_cast<double>(fp + fn) + loc_error / (1.0 - tau)) /
          static_cast<double>(tp + fp + fn);
      if (value < best_lrp) {
        best_lrp = value;
        best_threshold = score;
      }
    }
    thresholds[m.class_id] = best_threshold;
  }
  return thresholds;
}

}  // namespace saod
