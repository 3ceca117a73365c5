#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "saod/datamodel.hpp"
#include "saod/matching.hpp"

namespace saod {

inline constexpr int kDefaultBins = 25;

/// Bin of a confidence score among `bins` equal intervals of [0, 1].
/// Intervals are half-open except the last, which also holds 1.0.
std::size_t bin_index(double score, int bins);

/// One matched detection as seen by the calibration metrics.
struct CalibrationSample {
  double score = 0.0;
  bool true_positive = false;
  double iou = 0.0;  // meaningful for TPs only
};

struct BinStats {
  int bins = kDefaultBins;
  std::size_t total = 0;
  std::vector<std::size_t> count;
  std::vector<std::size_t> tp_count;
  std::vector<double> mean_confidence;
  std::vector<double> precision;
  std::vector<double> mean_iou;  // 0 for bins without TPs

  bool empty(std::size_t j) const { return count[j] == 0; }
  /// precision x mean TP IoU; 0 for TP-free bins.
  double performance(std::size_t j) const { return precision[j] * mean_iou[j]; }
};

BinStats bin_statistics(std::span<const CalibrationSample> samples, int bins = kDefaultBins);

/// Samples for every detection of a matched class, in input order.
std::vector<CalibrationSample> calibration_samples(std::span<const Detection> detections,
                                                   const MatchAssignment& assignment);

/// Localisation-aware calibration error of one class:
///   sum_j |D_j|/|D| * |mean_conf_j - precision_j * mean_iou_j|
/// Throws NoDetections for an empty class.
double laece_class(std::span<const CalibrationSample> samples, int bins = kDefaultBins);

struct LaeceResult {
  double laece = 0.0;                   // 0 when no class has detections
  std::map<ClassId, double> per_class;  // classes with detections only
};

LaeceResult laece(const DetectionSet& detections, const GroundTruthSet& ground_truths, double tau,
                  int bins = kDefaultBins);

/// Per-detection calibration target: IoU with the matched ground truth for
/// TPs, 0 for FPs. Aligned with the assignment's detection order.
std::vector<double> calibration_targets(const MatchAssignment& assignment);

struct CalibrationPair {
  double score = 0.0;
  double target = 0.0;
};

using CalibrationPairs = std::map<ClassId, std::vector<CalibrationPair>>;

/// (score, target) pairs per class from matching detections against ground truths.
CalibrationPairs calibration_pairs(const DetectionSet& detections,
                                   const GroundTruthSet& ground_truths, double tau);

enum class CalibratorKind { HistogramBinning, LinearRegression, IsotonicRegression };

std::string to_string(CalibratorKind kind);
CalibratorKind calibrator_kind_from_string(const std::string& text);

struct IdentityMap {
  friend bool operator==(const IdentityMap&, const IdentityMap&) = default;
};

/// Per-bin mean target; bins that saw no training pair pass scores through.
struct HistogramBinningMap {
  std::vector<std::optional<double>> bin_values;
  friend bool operator==(const HistogramBinningMap&, const HistogramBinningMap&) = default;
};

struct LinearMap {
  double slope = 1.0;
  double intercept = 0.0;
  friend bool operator==(const LinearMap&, const LinearMap&) = default;
};

/// Non-decreasing piecewise-linear map through the PAVA knots, constant
/// beyond the outermost knots.
struct IsotonicMap {
  std::vector<double> knots_x;
  std::vector<double> knots_y;
  friend bool operator==(const IsotonicMap&, const IsotonicMap&) = default;
};

using ClassCalibrator = std::variant<IdentityMap, HistogramBinningMap, LinearMap, IsotonicMap>;

/// Evaluates a class map, clamped to [0, 1].
double evaluate(const ClassCalibrator& calibrator, double score);

HistogramBinningMap fit_histogram_binning(std::span<const CalibrationPair> pairs,
                                          int bins = kDefaultBins);
LinearMap fit_linear_regression(std::span<const CalibrationPair> pairs);
IsotonicMap fit_isotonic_regression(std::span<const CalibrationPair> pairs);

class CalibratorModel {
 public:
  CalibratorModel() = default;
  CalibratorModel(CalibratorKind kind, int bins, std::map<ClassId, ClassCalibrator> classes)
      : kind_(kind), bins_(bins), classes_(std::move(classes)) {}

  /// Identity map for every class of the universe.
  static CalibratorModel identity(const ClassUniverse& universe,
                                  CalibratorKind kind = CalibratorKind::LinearRegression);

  CalibratorKind kind() const { return kind_; }
  int bins() const { return bins_; }
  const std::map<ClassId, ClassCalibrator>& classes() const { return classes_; }
  bool covers(ClassId c) const { return classes_.contains(c); }

  /// Calibrated score; throws MissingClassModel for an unknown class.
  double calibrate(ClassId c, double score) const;

  nlohmann::json to_json() const;
  static CalibratorModel from_json(const nlohmann::json& doc);

  friend bool operator==(const CalibratorModel&, const CalibratorModel&) = default;

 private:
  CalibratorKind kind_ = CalibratorKind::LinearRegression;
  int bins_ = kDefaultBins;
  std::map<ClassId, ClassCalibrator> classes_;
};

/// Fits one map per class of the universe; classes without pairs fall back
/// to identity.
CalibratorModel fit_calibrator(CalibratorKind kind, const CalibrationPairs& pairs,
                               const ClassUniverse& universe, int bins = kDefaultBins);

/// Replaces every score by its calibrated value; order and boxes untouched.
DetectionSet apply_calibrator(const CalibratorModel& model, const DetectionSet& detections);

struct ReliabilityBin {
  double low = 0.0;
  double high = 0.0;
  double mean_confidence = 0.0;   // class average over non-empty class bins
  double mean_performance = 0.0;  // class average of precision x mean IoU
  std::size_t num_classes = 0;    // 0 means no bar
};

struct ReliabilityDiagram {
  std::vector<ReliabilityBin> bins;

  /// Columns: bin_low,bin_high,mean_conf,mean_perf,n_classes. Empty bins
  /// leave the two mean columns blank.
  std::string to_csv() const;
};

ReliabilityDiagram reliability_diagram(const DetectionSet& detections,
                                       const GroundTruthSet& ground_truths, double tau,
                                       int bins = kDefaultBins);

}  // namespace saod
