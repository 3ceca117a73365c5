#include "saod/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace saod::testkit {
namespace {

double overlap(const BoundingBox& a, const BoundingBox& b) {
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  const double inter = w * h;
  const double area_a = (a.x_max - a.x_min) * (a.y_max - a.y_min);
  const double area_b = (b.x_max - b.x_min) * (b.y_max - b.y_min);
  if (area_a <= 0.0 || area_b <= 0.0) return 0.0;
  return inter / (area_a + area_b - inter);
}

struct ClassSlice {
  std::vector<Detection> dets;
  std::vector<GroundTruth> gts;
};

std::vector<ClassSlice> slices(const DetectionSet& detections, const GroundTruthSet& ground_truths) {
  std::vector<ClassSlice> out(static_cast<std::size_t>(ground_truths.universe().num_classes));
  for (const auto& d : detections.detections()) out[d.class_id - 1].dets.push_back(d);
  for (const auto& g : ground_truths.annotations()) out[g.class_id - 1].gts.push_back(g);
  return out;
}

// Visiting order: highest score first, earliest input first among equals.
std::vector<std::size_t> visit_order(const std::vector<Detection>& dets) {
  std::vector<std::size_t> order;
  std::vector<bool> taken(dets.size(), false);
  for (std::size_t round = 0; round < dets.size(); ++round) {
    std::size_t best = dets.size();
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (taken[i]) continue;
      if (best == dets.size() || dets[i].score > dets[best].score) best = i;
    }
    taken[best] = true;
    order.push_back(best);
  }
  return order;
}

}  // namespace

OracleMatch brute_force_match(const std::vector<Detection>& detections,
                              const std::vector<GroundTruth>& ground_truths, double tau) {
  OracleMatch m;
  m.true_positive.assign(detections.size(), false);
  m.iou.assign(detections.size(), 0.0);
  m.num_gt = ground_truths.size();
  std::vector<bool> used(ground_truths.size(), false);
  for (std::size_t i : visit_order(detections)) {
    std::size_t best = ground_truths.size();
    double best_iou = 0.0;
    for (std::size_t g = 0; g < ground_truths.size(); ++g) {
      if (used[g] || ground_truths[g].image_id != detections[i].image_id) continue;
      const double v = overlap(detections[i].box, ground_truths[g].box);
      if (v > tau && (best == ground_truths.size() || v > best_iou)) {
        best = g;
        best_iou = v;
      }
    }
    if (best != ground_truths.size()) {
      used[best] = true;
      m.true_positive[i] = true;
      m.iou[i] = best_iou;
    }
  }
  return m;
}

double brute_force_ap(const DetectionSet& detections, const GroundTruthSet& ground_truths,
                      double tau) {
  double total = 0.0;
  int classes = 0;
  for (const auto& s : slices(detections, ground_truths)) {
    if (s.dets.empty() && s.gts.empty()) continue;
    ++classes;
    if (s.gts.empty() || s.dets.empty()) continue;
    const OracleMatch m = brute_force_match(s.dets, s.gts, tau);
    std::vector<double> pr, re;
    double tp = 0.0;
    for (std::size_t i : visit_order(s.dets)) {
      if (m.true_positive[i]) tp += 1.0;
      pr.push_back(tp / static_cast<double>(pr.size() + 1));
      re.push_back(tp / static_cast<double>(s.gts.size()));
    }
    const std::set<double> levels(re.begin(), re.end());
    double area = 0.0, previous = 0.0;
    for (double r : levels) {
      double height = 0.0;
      for (std::size_t i = 0; i < pr.size(); ++i) {
        if (re[i] >= r) height = std::max(height, pr[i]);
      }
      area += (r - previous) * height;
      previous = r;
    }
    total += area;
  }
  return classes == 0 ? 0.0 : total / classes;
}

double brute_force_lrp(const DetectionSet& detections, const GroundTruthSet& ground_truths,
                       double tau) {
  double total = 0.0;
  int classes = 0;
  for (const auto& s : slices(detections, ground_truths)) {
    if (s.dets.empty() && s.gts.empty()) continue;
    ++classes;
    const OracleMatch m = brute_force_match(s.dets, s.gts, tau);
    double tp = 0.0, fp = 0.0, loc = 0.0;
    for (std::size_t i = 0; i < s.dets.size(); ++i) {
      if (m.true_positive[i]) {
        tp += 1.0;
        const double lq = (m.iou[i] - tau) / (1.0 - tau);
        loc += 1.0 - lq;
      } else {
        fp += 1.0;
      }
    }
    const double fn = static_cast<double>(s.gts.size()) - tp;
    total += (fp + fn + loc) / (tp + fp + fn);
  }
  return classes == 0 ? 1.0 : total / classes;
}

double brute_force_laece(const DetectionSet& detections, const GroundTruthSet& ground_truths,
                         double tau, int bins) {
  double total = 0.0;
  int classes = 0;
  for (const auto& s : slices(detections, ground_truths)) {
    if (s.dets.empty()) continue;
    ++classes;
    const OracleMatch m = brute_force_match(s.dets, s.gts, tau);
    double error = 0.0;
    for (int j = 0; j < bins; ++j) {
      const double lo = static_cast<double>(j) / bins;
      const double hi = static_cast<double>(j + 1) / bins;
      double n = 0.0, conf = 0.0, tp = 0.0, iou_sum = 0.0;
      for (std::size_t i = 0; i < s.dets.size(); ++i) {
        const double p = s.dets[i].score;
        const bool inside = p >= lo && (j == bins - 1 ? p <= hi : p < hi);
        if (!inside) continue;
        n += 1.0;
        conf += p;
        if (m.true_positive[i]) {
          tp += 1.0;
          iou_sum += m.iou[i];
        }
      }
      if (n == 0.0) continue;
      const double precision = tp / n;
      const double mean_iou = tp == 0.0 ? 0.0 : iou_sum / tp;
      error += n / static_cast<double>(s.dets.size()) * std::abs(conf / n - precision * mean_iou);
    }
    total += error;
  }
  return classes == 0 ? 0.0 : total / classes;
}

}  // namespace saod::testkit
