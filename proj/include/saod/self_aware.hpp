#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "saod/accuracy.hpp"
#include "saod/calibration.hpp"
#include "saod/datamodel.hpp"
#include "saod/uncertainty.hpp"

namespace saod {

/// Everything a detector needs to act self-aware: the image-level
/// acceptance threshold, per-class score thresholds and calibrators.
struct SelfAwareConfig {
  double image_threshold = 0.0;                     // accept iff G(X) < threshold
  std::map<ClassId, double> detection_thresholds;  // keep iff score >= threshold
  CalibratorModel calibrator;
  AggregationStrategy aggregation = AggregationStrategy::top(3);

  nlohmann::json to_json() const;
  static SelfAwareConfig from_json(const nlohmann::json& doc);

  friend bool operator==(const SelfAwareConfig&, const SelfAwareConfig&) = default;
};

/// Aggregated 1 - score over the image's detections (sentinel when empty).
ImageUncertainty image_uncertainty(std::span<const Detection> image_detections,
                                   const AggregationStrategy& strategy);

struct InferenceResult {
  bool accepted = false;
  double uncertainty = kEmptyImageUncertainty;
  std::vector<Detection> detections;  // thresholded, calibrated; empty if rejected
};

/// Accept/reject one image, then threshold and calibrate its detections.
/// A supplied uncertainty overrides the one aggregated from the detections.
InferenceResult self_aware_inference(const SelfAwareConfig& config,
                                     std::span<const Detection> image_detections,
                                     std::optional<double> uncertainty_override = std::nullopt);

using ImageOutputs = std::map<ImageId, InferenceResult>;

/// Runs self_aware_inference on every image of `images`.
ImageOutputs run_inference(const SelfAwareConfig& config, const GroundTruthSet& images,
                           const DetectionSet& detections,
                           const std::map<ImageId, double>* uncertainty_override = nullptr);

struct QualityResult {
  double idq = 0.0;
  double laece = 0.0;
  double lrp = 1.0;
  LaeceResult laece_detail;
  DatasetLrp lrp_detail;
  std::size_t num_images = 0;    // images in the evaluation pool
  std::size_t num_accepted = 0;
};

/// Harmonic mean of (1 - LRP) and (1 - LaECE) over the images of
/// `ground_truths`. Rejected images contribute no detections, so their
/// objects count as false negatives.
QualityResult idq(const ImageOutputs& outputs, const GroundTruthSet& ground_truths, double tau,
                  int bins = kDefaultBins);

/// IDQ over corrupted images: severity 1 and 3 behave like ID, rejected
/// severity-5 images leave the pool, accepted ones are scored normally.
QualityResult idq_t(const ImageOutputs& outputs, const GroundTruthSet& corrupted, double tau,
                    int bins = kDefaultBins);

/// Harmonic mean of BA, IDQ and IDQ_T.
double daq(double ba, double idq_value, double idq_t_value);

struct SplitAcceptance {
  std::size_t images = 0;
  std::size_t accepted = 0;
  double rate() const { return images == 0 ? 0.0 : static_cast<double>(accepted) / images; }
};

struct ClassBreakdown {
  std::optional<double> lrp_id;
  std::optional<double> laece_id;
  std::optional<double> lrp_t;
  std::optional<double> laece_t;
};

struct SaodReport {
  double daq = 0.0;
  double ba = 0.0;
  double tpr = 0.0;
  double tnr = 0.0;
  double idq = 0.0;
  double laece_id = 0.0;
  double lrp_id = 1.0;
  double idq_t = 0.0;
  double laece_t = 0.0;
  double lrp_t = 1.0;
  std::map<std::string, SplitAcceptance> acceptance;  // ID, CORRUPT_1/3/5, OOD
  std::map<ClassId, ClassBreakdown> per_class;

  nlohmann::json to_json() const;
  /// Fixed-width table, columns DAQ BA IDQ LaECE LRP IDQ_T LaECE_T LRP_T (in %).
  std::string to_table() const;
};

/// Throws SplitOverlap when a detection belongs to an image outside `split`.
void require_split(const DetectionSet& detections, const GroundTruthSet& ground_truths,
                   SplitTag split);

/// Full evaluation over the ID, CORRUPT and OOD images of `ground_truths`.
/// `uncertainty_override`, when given, must cover every test image.
SaodReport evaluate_saod(const SelfAwareConfig& config, const GroundTruthSet& ground_truths,
                         const DetectionSet& detections, double tau, int bins = kDefaultBins,
                         const std::map<ImageId, double>* uncertainty_override = nullptr);

enum class ImageThresholdMethod {
  PseudoOod,  // maximise BA between object-bearing and masked validation images
  TprAt95,    // accept 95% of the object-bearing validation images
};

struct MakeSelfAwareOptions {
  double tau = kDefaultTau;
  int bins = kDefaultBins;
  AggregationStrategy aggregation = AggregationStrategy::top(3);
  CalibratorKind calibrator = CalibratorKind::LinearRegression;
  ImageThresholdMethod threshold_method = ImageThresholdMethod::PseudoOod;
};

struct SelfAwareFit {
  SelfAwareConfig config;
  OodDecisionStats pseudo_stats;  // decision quality on the pseudo sets at the chosen threshold
  std::size_t num_positive_images = 0;
  std::size_t num_pseudo_ood_images = 0;
};

/// Validation-time procedure: image threshold from pseudo ID/OOD sets,
/// LRP-optimal class thresholds, then per-class calibrators trained on the
/// thresholded detections. `pseudo_ood_detections` are the detections on
/// the validation images with their objects masked out.
SelfAwareFit make_self_aware(const GroundTruthSet& validation, const DetectionSet& detections,
                             const DetectionSet& pseudo_ood_detections,
                             const MakeSelfAwareOptions& options = {});

}  // namespace saod
