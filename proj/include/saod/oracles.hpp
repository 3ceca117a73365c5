#pragma once

#include <cstddef>
#include <vector>

#include "saod/datamodel.hpp"

// Slow, literal reference evaluators used only to cross-check the
// production code. They share no matching or binning code with it.
namespace saod::testkit {

struct OracleMatch {
  std::vector<bool> true_positive;  // per input detection
  std::vector<double> iou;          // IoU with the matched object, 0 for FPs
  std::size_t num_gt = 0;
};

/// Greedy matching for one class by repeated arg-max over unvisited detections.
OracleMatch brute_force_match(const std::vector<Detection>& detections,
                              const std::vector<GroundTruth>& ground_truths, double tau);

/// Per-class AP with precision interpolated as max{Pr_i : Re_i >= r},
/// averaged over classes that have objects or detections.
double brute_force_ap(const DetectionSet& detections, const GroundTruthSet& ground_truths,
                      double tau);

/// Class-mean LRP from the raw error definition.
double brute_force_lrp(const DetectionSet& detections, const GroundTruthSet& ground_truths,
                       double tau);

/// Class-mean LaECE with bins checked by interval membership.
double brute_force_laece(const DetectionSet& detections, const GroundTruthSet& ground_truths,
                         double tau, int bins = 25);

}  // namespace saod::testkit
