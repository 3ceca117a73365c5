#include "saod/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "saod/harmonic_mean.hpp"

namespace saod {

double uncertainty_score(double score) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw Error(ErrorCode::ScoreOutOfRange, "score outside [0, 1]");
  }
  return 1.0 - score;
}

double entropy_from_probabilities(std::span<const double> probabilities) {
  double h = 0.0;
  for (double p : probabilities) {
    if (!std::isfinite(p) || p < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "probabilities must be finite and non-negative");
    }
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

namespace {

void require_finite(std::span<const double> logits) {
  if (logits.empty()) throw Error(ErrorCode::InvalidArgument, "empty logit vector");
  for (double s : logits) {
    if (!std::isfinite(s)) throw Error(ErrorCode::NonFiniteLogit, "logits must be finite");
  }
}

}  // namespace

double entropy_from_logits(std::span<const double> logits, EntropyMode mode, int num_classes) {
  require_finite(logits);
  const auto k = static_cast<std::size_t>(num_classes);
  if (logits.size() != k && logits.size() != k + 1) {
    throw Error(ErrorCode::InvalidArgument, "expected K or K+1 logits");
  }
  if (mode == EntropyMode::SigmoidAsCategorical) logits = logits.first(k);

  // Log-sum-exp form: H = lse - sum p_j s_j.
  const double peak = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double s : logits) z += std::exp(s - peak);
  const double lse = peak + std::log(z);
  double h = 0.0;
  for (double s : logits) {
    const double p = std::exp(s - lse);
    h += p * (lse - s);
  }
  return std::max(h, 0.0);
}

double dempster_shafer(std::span<const double> logits) {
  require_finite(logits);
  const double n = static_cast<double>(logits.size());
  double evidence = 0.0;
  for (double s : logits) evidence += std::exp(s);
  return n / (n + evidence);
}

double loc_uncertainty(const std::array<double, 4>& covariance_diag, LocUncertaintyKind kind) {
  for (double v : covariance_diag) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::CovarianceNotPositive, "covariance entries must be positive");
    }
  }
  switch (kind) {
    case LocUncertaintyKind::Determinant:
      return covariance_diag[0] * covariance_diag[1] * covariance_diag[2] * covariance_diag[3];
    case LocUncertaintyKind::Trace:
      return covariance_diag[0] + covariance_diag[1] + covariance_diag[2] + covariance_diag[3];
    case LocUncertaintyKind::GaussianEntropy: {
      double log_det = 0.0;
      for (double v : covariance_diag) log_det += std::log(v);
      return 2.0 + 2.0 * std::log(2.0 * std::numbers::pi) + 0.5 * log_det;
    }
  }
  return 0.0;
}

double combine_cls_loc(double u_cls, double u_loc, const NormalizationBounds& cls_bounds,
                       const NormalizationBounds& loc_bounds) {
  if (!(cls_bounds.max > cls_bounds.min) || !(loc_bounds.max > loc_bounds.min)) {
    throw Error(ErrorCode::DegenerateBounds, "normalisation bounds need max > min");
  }
  const double cls = (u_cls - cls_bounds.min) / (cls_bounds.max - cls_bounds.min);
  const double loc = (u_loc - loc_bounds.min) / (loc_bounds.max - loc_bounds.min);
  return 4.0 * cls + loc;
}

AggregationStrategy AggregationStrategy::parse(const std::string& text) {
  if (text == "sum") return {Kind::Sum, 0};
  if (text == "mean") return {Kind::Mean, 0};
  if (text == "min") return {Kind::Min, 0};
  if (text.starts_with("top_")) {
    const std::string digits = text.substr(4);
    if (!digits.empty() && std::all_of(digits.begin(), digits.end(), ::isdigit)) {
      const auto m = static_cast<std::size_t>(std::stoul(digits));
      if (m >= 1) return top(m);
    }
  }
  throw Error(ErrorCode::ConfigError, "unknown aggregation '" + text + "'");
}

std::string AggregationStrategy::to_string() const {
  switch (kind) {
    case Kind::Sum: return "sum";
    case Kind::Mean: return "mean";
    case Kind::Min: return "min";
    case Kind::TopM: return "top_" + std::to_string(m);
  }
  return "top_3";
}

ImageUncertainty aggregate(std::span<const double> values, const AggregationStrategy& strategy) {
  if (values.empty()) return ImageUncertainty{};
  for (double v : values) {
    if (!(v >= 0.0)) throw Error(ErrorCode::InvalidArgument, "uncertainties must be >= 0");
  }
  using Kind = AggregationStrategy::Kind;
  double result = 0.0;
  switch (strategy.kind) {
    case Kind::Sum:
      result = std::accumulate(values.begin(), values.end(), 0.0);
      break;
    case Kind::Mean:
      result = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
      break;
    case Kind::Min:
      result = *std::min_element(values.begin(), values.end());
      break;
    case Kind::TopM: {
      if (strategy.m == 0) throw Error(ErrorCode::InvalidArgument, "top_m needs m >= 1");
      std::vector<double> sorted(values.begin(), values.end());
      const std::size_t m = std::min(strategy.m, sorted.size());
      std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m), sorted.end());
      result = std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m), 0.0) /
               static_cast<double>(m);
      break;
    }
  }
  return ImageUncertainty{result, false};
}

double auroc(std::span<const double> id_uncertainties, std::span<const double> ood_uncertainties) {
  if (id_uncertainties.empty() || ood_uncertainties.empty()) {
    throw Error(ErrorCode::EmptySplit, "AUROC needs both ID and OOD values");
  }
  struct Item {
    double value;
    bool ood;
  };
  std::vector<Item> pooled;
  pooled.reserve(id_uncertainties.size() + ood_uncertainties.size());
  for (double v : id_uncertainties) pooled.push_back({v, false});
  for (double v : ood_uncertainties) pooled.push_back({v, true});
  std::sort(pooled.begin(), pooled.end(),
            [](const Item& a, const Item& b) { return a.value < b.value; });

  // Mann-Whitney: sum of (1-based, tie-averaged) ranks of the OOD values.
  double ood_rank_sum = 0.0;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    std::size_t ood_in_run = 0;
    while (j < pooled.size() && pooled[j].value == pooled[i].value) {
      ood_in_run += pooled[j].ood ? 1 : 0;
      ++j;
    }
    const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
    ood_rank_sum += mean_rank * static_cast<double>(ood_in_run);
    i = j;
  }
  const double n_id = static_cast<double>(id_uncertainties.size());
  const double n_ood = static_cast<double>(ood_uncertainties.size());
  const double u = ood_rank_sum - n_ood * (n_ood + 1.0) / 2.0;
  return u / (n_id * n_ood);
}

namespace {

std::size_t count_below(const std::vector<double>& sorted, double threshold) {
  return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), threshold) -
                                  sorted.begin());
}

OodDecisionStats stats_from_sorted(const std::vector<double>& id, const std::vector<double>& ood,
                                   double threshold) {
  OodDecisionStats s;
  s.threshold = threshold;
  s.tpr = static_cast<double>(count_below(id, threshold)) / static_cast<double>(id.size());
  s.tnr = 1.0 - static_cast<double>(count_below(ood, threshold)) / static_cast<double>(ood.size());
  s.ba = harmonic_mean({s.tpr, s.tnr});
  return s;
}

}  // namespace

OodDecisionStats ood_decision_stats(std::span<const double> id_uncertainties,
                                    std::span<const double> ood_uncertainties, double threshold) {
  if (id_uncertainties.empty() || ood_uncertainties.empty()) {
    throw Error(ErrorCode::EmptySplit, "decision stats need both ID and OOD values");
  }
  std::vector<double> id(id_uncertainties.begin(), id_uncertainties.end());
  std::vector<double> ood(ood_uncertainties.begin(), ood_uncertainties.end());
  std::sort(id.begin(), id.end());
  std::sort(ood.begin(), ood.end());
  return stats_from_sorted(id, ood, threshold);
}

OodDecisionStats select_threshold_ba(std::span<const double> id_uncertainties,
                                     std::span<const double> ood_uncertainties) {
  if (id_uncertainties.empty() || ood_uncertainties.empty()) {
    throw Error(ErrorCode::EmptySplit, "threshold selection needs both ID and OOD values");
  }
  std::vector<double> id(id_uncertainties.begin(), id_uncertainties.end());
  std::vector<double> ood(ood_uncertainties.begin(), ood_uncertainties.end());
  std::sort(id.begin(), id.end());
  std::sort(ood.begin(), ood.end());

  std::vector<double> pooled(id);
  pooled.insert(pooled.end(), ood.begin(), ood.end());
  std::sort(pooled.begin(), pooled.end());
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> candidates{-kInf};
  for (std::size_t i = 0; i + 1 < pooled.size(); ++i) {
    double mid = pooled[i] + 0.5 * (pooled[i + 1] - pooled[i]);
    // Adjacent doubles: fall back to the upper value so the lower one is
    // still accepted.
    if (!(mid > pooled[i])) mid = pooled[i + 1];
    candidates.push_back(mid);
  }
  candidates.push_back(kInf);

  OodDecisionStats best = stats_from_sorted(id, ood, candidates.front());
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const OodDecisionStats s = stats_from_sorted(id, ood, candidates[i]);
    if (s.ba >= best.ba) best = s;
  }
  best.degenerate = best.ba == 0.0;
  return best;
}

double threshold_at_tpr(std::span<const double> id_uncertainties, double target_tpr) {
  if (id_uncertainties.empty()) throw Error(ErrorCode::EmptySplit, "no ID uncertainties");
  if (!(target_tpr >= 0.0 && target_tpr <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "target TPR outside [0, 1]");
  }
  std::vector<double> sorted(id_uncertainties.begin(), id_uncertainties.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  // Guard against 0.95 * 20 landing a hair above 19.
  auto needed = static_cast<std::size_t>(std::ceil(target_tpr * n - 1e-9));
  needed = std::min(needed, sorted.size());
  if (needed == 0) return -std::numeric_limits<double>::infinity();
  return std::nextafter(sorted[needed - 1], std::numeric_limits<double>::infinity());
}

}  // namespace saod
