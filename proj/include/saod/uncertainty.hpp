#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "saod/datamodel.hpp"

namespace saod {

/// Image-level uncertainty assigned to an image without detections. Large
/// enough that the image is always rejected.
inline constexpr double kEmptyImageUncertainty = 1e12;

// Detection-level estimators ------------------------------------------------

/// 1 - confidence.
double uncertainty_score(double score);
inline double uncertainty_score(const Detection& d) { return uncertainty_score(d.score); }

/// Shannon entropy in nats of a probability vector.
double entropy_from_probabilities(std::span<const double> probabilities);

enum class EntropyMode {
  Softmax,               // softmax over every logit (K+1 for softmax heads)
  SigmoidAsCategorical,  // softmax over the K class logits of a sigmoid head
};

/// Entropy of softmax(logits). In SigmoidAsCategorical mode a trailing
/// background logit (K+1 entries) is dropped first.
double entropy_from_logits(std::span<const double> logits, EntropyMode mode, int num_classes);

/// Dempster-Shafer uncertainty n / (n + sum exp(s_j)), n = logits.size().
double dempster_shafer(std::span<const double> logits);

enum class LocUncertaintyKind { Determinant, Trace, GaussianEntropy };

/// Uncertainty of a diagonal box covariance (4 variances).
double loc_uncertainty(const std::array<double, 4>& covariance_diag, LocUncertaintyKind kind);

struct NormalizationBounds {
  double min = 0.0;
  double max = 1.0;
};

/// 4 * norm(u_cls) + norm(u_loc), each normalised by validation min/max.
double combine_cls_loc(double u_cls, double u_loc, const NormalizationBounds& cls_bounds,
                       const NormalizationBounds& loc_bounds);

// Image-level aggregation ----------------------------------------------------

struct AggregationStrategy {
  enum class Kind { Sum, Mean, TopM, Min };
  Kind kind = Kind::TopM;
  std::size_t m = 3;  // TopM only

  static AggregationStrategy top(std::size_t m) { return {Kind::TopM, m}; }
  static AggregationStrategy parse(const std::string& text);  // sum|mean|min|top_<m>
  std::string to_string() const;

  friend bool operator==(const AggregationStrategy&, const AggregationStrategy&) = default;
};

struct ImageUncertainty {
  double value = kEmptyImageUncertainty;
  bool sentinel = true;  // set when there were no detections
};

/// top_m averages the m smallest values (all of them when fewer than m).
ImageUncertainty aggregate(std::span<const double> values, const AggregationStrategy& strategy);

// OOD decisions --------------------------------------------------------------

/// P(id < ood) over all pairs, ties counting one half.
double auroc(std::span<const double> id_uncertainties, std::span<const double> ood_uncertainties);

struct OodDecisionStats {
  double tpr = 0.0;  // ID images accepted
  double tnr = 0.0;  // OOD images rejected
  double ba = 0.0;   // harmonic mean of tpr and tnr
  double threshold = 0.0;
  bool degenerate = false;  // no threshold separates anything
};

/// Accept when uncertainty < threshold.
OodDecisionStats ood_decision_stats(std::span<const double> id_uncertainties,
                                    std::span<const double> ood_uncertainties, double threshold);

/// Threshold maximising BA over midpoints between consecutive distinct pooled
/// values plus +-inf; ties go to the larger threshold.
OodDecisionStats select_threshold_ba(std::span<const double> id_uncertainties,
                                     std::span<const double> ood_uncertainties);

/// Smallest threshold accepting at least target_tpr of the ID values.
double threshold_at_tpr(std::span<const double> id_uncertainties, double target_tpr = 0.95);

}  // namespace saod
