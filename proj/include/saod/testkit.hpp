#pragma once

#include <cstddef>
#include <cstdint>

#include "saod/datamodel.hpp"

namespace saod::testkit {

/// SplitMix64 evaluated at seed + counter. Streams are reproducible across
/// platforms and languages given the seed alone.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

enum class ConfidenceModel { Calibrated, Overconfident, Underconfident };

struct SyntheticSpec {
  std::uint64_t seed = 0;
  int num_classes = 3;
  std::size_t num_images = 40;       // ID test images
  std::size_t num_val_images = 0;    // VAL images (plus masked pseudo-OOD detections)
  std::size_t num_corrupt_images = 0;  // per severity level 1, 3, 5
  std::size_t num_ood_images = 0;
  std::size_t gts_per_image = 3;
  double tp_rate = 0.8;   // chance each object is detected
  double iou_min = 0.5;   // TP IoUs drawn uniformly from [iou_min, iou_max]
  double iou_max = 0.95;
  double fp_rate = 0.5;   // chance of a false positive per object slot
  double fp_score_max = 0.01;  // base FP scores drawn from [0, fp_score_max)
  ConfidenceModel confidence = ConfidenceModel::Calibrated;
  double delta = 0.2;     // shift for over/under-confident scores
  double ood_uncertainty_shift = 0.5;  // OOD scores drawn from [0, 1 - shift)
  std::size_t dets_per_ood_image = 3;
  double corruption_drop = 0.1;  // tp_rate shrinks by this much per severity step
};

struct SyntheticBundle {
  GroundTruthSet ground_truths;        // all images, tagged with their split
  DetectionSet detections;             // detections on every image
  DetectionSet pseudo_ood_detections;  // detections on the masked VAL images
};

/// Deterministic under spec.seed. In calibrated mode every TP score equals
/// its IoU and FP scores stay below 0.01, so LaECE < 0.01 by construction.
SyntheticBundle generate(const SyntheticSpec& spec);

/// Pads every image of `images` to `per_image_target` detections with
/// score-0, one-pixel boxes placed to the right of all of the image's
/// objects (so they never match), classes drawn uniformly from the seeded
/// PRNG. Existing detections keep their order; dummies are appended.
DetectionSet inject_dummies(const DetectionSet& detections, const GroundTruthSet& images,
                            std::size_t per_image_target, std::uint64_t seed);

}  // namespace saod::testkit
