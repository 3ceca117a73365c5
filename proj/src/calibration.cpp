#include "saod/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "saod/io.hpp"

namespace saod {

std::size_t bin_index(double score, int bins) {
  if (bins < 1) throw Error(ErrorCode::InvalidArgument, "bin count must be >= 1");
  const auto j = static_cast<long long>(std::floor(score * bins));
  return static_cast<std::size_t>(std::clamp<long long>(j, 0, bins - 1));
}

BinStats bin_statistics(std::span<const CalibrationSample> samples, int bins) {
  const auto nb = static_cast<std::size_t>(bins);
  BinStats s;
  s.bins = bins;
  s.total = samples.size();
  s.count.assign(nb, 0);
  s.tp_count.assign(nb, 0);
  s.mean_confidence.assign(nb, 0.0);
  s.precision.assign(nb, 0.0);
  s.mean_iou.assign(nb, 0.0);
  for (const auto& x : samples) {
    const std::size_t j = bin_index(x.score, bins);
    ++s.count[j];
    s.mean_confidence[j] += x.score;
    if (x.true_positive) {
      ++s.tp_count[j];
      s.mean_iou[j] += x.iou;
    }
  }
  for (std::size_t j = 0; j < nb; ++j) {
    if (s.count[j] == 0) continue;
    s.mean_confidence[j] /= static_cast<double>(s.count[j]);
    s.precision[j] = static_cast<double>(s.tp_count[j]) / static_cast<double>(s.count[j]);
    if (s.tp_count[j] > 0) s.mean_iou[j] /= static_cast<double>(s.tp_count[j]);
  }
  return s;
}

std::vector<CalibrationSample> calibration_samples(std::span<const Detection> detections,
                                                   const MatchAssignment& assignment) {
  if (detections.size() != assignment.outcomes.size()) {
    throw Error(ErrorCode::InvalidArgument, "assignment does not match the detections");
  }
  std::vector<CalibrationSample> samples;
  samples.reserve(detections.size());
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const auto& o = assignment.outcomes[i];
    samples.push_back({detections[i].score, o.true_positive, o.true_positive ? o.iou : 0.0});
  }
  return samples;
}

double laece_class(std::span<const CalibrationSample> samples, int bins) {
  if (samples.empty()) throw Error(ErrorCode::NoDetections, "class has no detections");
  const BinStats s = bin_statistics(samples, bins);
  double error = 0.0;
  for (std::size_t j = 0; j < s.count.size(); ++j) {
    if (s.empty(j)) continue;
    const double weight = static_cast<double>(s.count[j]) / static_cast<double>(s.total);
    error += weight * std::abs(s.mean_confidence[j] - s.performance(j));
  }
  return error;
}

LaeceResult laece(const DetectionSet& detections, const GroundTruthSet& ground_truths, double tau,
                  int bins) {
  LaeceResult result;
  double sum = 0.0;
  for (const auto& m : match_dataset(detections, ground_truths, tau)) {
    if (m.detections.empty()) continue;
    const auto samples = calibration_samples(m.detections, m.assignment);
    const double e = laece_class(samples, bins);
    result.per_class[m.class_id] = e;
    sum += e;
  }
  if (!result.per_class.empty()) result.laece = sum / static_cast<double>(result.per_class.size());
  return result;
}

std::vector<double> calibration_targets(const MatchAssignment& assignment) {
  std::vector<double> targets;
  targets.reserve(assignment.outcomes.size());
  for (const auto& o : assignment.outcomes) targets.push_back(o.true_positive ? o.iou : 0.0);
  return targets;
}

CalibrationPairs calibration_pairs(const DetectionSet& detections,
                                   const GroundTruthSet& ground_truths, double tau) {
  CalibrationPairs pairs;
  for (const auto& m : match_dataset(detections, ground_truths, tau)) {
    if (m.detections.empty()) continue;
    const auto targets = calibration_targets(m.assignment);
    auto& out = pairs[m.class_id];
    for (std::size_t i = 0; i < targets.size(); ++i) {
      out.push_back({m.detections[i].score, targets[i]});
    }
  }
  return pairs;
}

std::string to_string(CalibratorKind kind) {
  switch (kind) {
    case CalibratorKind::HistogramBinning: return "HB";
    case CalibratorKind::LinearRegression: return "LR";
    case CalibratorKind::IsotonicRegression: return "IR";
  }
  return "LR";
}

CalibratorKind calibrator_kind_from_string(const std::string& text) {
  if (text == "HB") return CalibratorKind::HistogramBinning;
  if (text == "LR") return CalibratorKind::LinearRegression;
  if (text == "IR") return CalibratorKind::IsotonicRegression;
  throw Error(ErrorCode::ConfigError, "unknown calibrator kind '" + text + "'");
}

namespace {

double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

struct Evaluator {
  double score;
  double operator()(const IdentityMap&) const { return score; }
  double operator()(const HistogramBinningMap& m) const {
    const auto& value = m.bin_values[bin_index(score, static_cast<int>(m.bin_values.size()))];
    return value ? *value : score;
  }
  double operator()(const LinearMap& m) const { return m.slope * score + m.intercept; }
  double operator()(const IsotonicMap& m) const {
    const auto& xs = m.knots_x;
    const auto& ys = m.knots_y;
    if (xs.empty()) return score;
    if (score <= xs.front()) return ys.front();
    if (score >= xs.back()) return ys.back();
    const auto hi = static_cast<std::size_t>(
        std::upper_bound(xs.begin(), xs.end(), score) - xs.begin());
    const std::size_t lo = hi - 1;
    const double t = (score - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + t * (ys[hi] - ys[lo]);
  }
};

}  // namespace

double evaluate(const ClassCalibrator& calibrator, double score) {
  return clamp_unit(std::visit(Evaluator{score}, calibrator));
}

HistogramBinningMap fit_histogram_binning(std::span<const CalibrationPair> pairs, int bins) {
  const auto nb = static_cast<std::size_t>(bins);
  std::vector<double> sums(nb, 0.0);
  std::vector<std::size_t> counts(nb, 0);
  for (const auto& p : pairs) {
    const std::size_t j = bin_index(p.score, bins);
    sums[j] += p.target;
    ++counts[j];
  }
  HistogramBinningMap m;
  m.bin_values.resize(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    if (counts[j] > 0) m.bin_values[j] = sums[j] / static_cast<double>(counts[j]);
  }
  return m;
}

LinearMap fit_linear_regression(std::span<const CalibrationPair> pairs) {
  if (pairs.empty()) return LinearMap{};
  const double n = static_cast<double>(pairs.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& p : pairs) {
    mean_x += p.score;
    mean_y += p.target;
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : pairs) {
    sxx += (p.score - mean_x) * (p.score - mean_x);
    sxy += (p.score - mean_x) * (p.target - mean_y);
  }
  // All scores equal: the best affine fit is the constant mean target.
  if (sxx == 0.0) return LinearMap{0.0, mean_y};
  const double slope = sxy / sxx;
  return LinearMap{slope, mean_y - slope * mean_x};
}

IsotonicMap fit_isotonic_regression(std::span<const CalibrationPair> pairs) {
  if (pairs.empty()) return IsotonicMap{};
  std::vector<CalibrationPair> sorted(pairs.begin(), pairs.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const CalibrationPair& a, const CalibrationPair& b) { return a.score < b.score; });

  struct Block {
    double x_first;
    double x_last;
    double sum;
    double weight;
    double value() const { return sum / weight; }
  };
  std::vector<Block> blocks;
  // Equal scores are pooled before PAVA so every distinct x gets one value.
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) sum += sorted[j++].target;
    blocks.push_back({sorted[i].score, sorted[i].score, sum, static_cast<double>(j - i)});
    // Pool adjacent violators.
    while (blocks.size() > 1 && blocks[blocks.size() - 2].value() > blocks.back().value()) {
      Block top = blocks.back();
      blocks.pop_back();
      blocks.back().x_last = top.x_last;
      blocks.back().sum += top.sum;
      blocks.back().weight += top.weight;
    }
    i = j;
  }
  IsotonicMap m;
  for (const auto& b : blocks) {
    const double y = clamp_unit(b.value());
    m.knots_x.push_back(b.x_first);
    m.knots_y.push_back(y);
    if (b.x_last != b.x_first) {
      m.knots_x.push_back(b.x_last);
      m.knots_y.push_back(y);
    }
  }
  return m;
}

CalibratorModel CalibratorModel::identity(const ClassUniverse& universe, CalibratorKind kind) {
  std::map<ClassId, ClassCalibrator> classes;
  for (ClassId c = 1; c <= universe.num_classes; ++c) classes.emplace(c, IdentityMap{});
  return CalibratorModel(kind, kDefaultBins, std::move(classes));
}

double CalibratorModel::calibrate(ClassId c, double score) const {
  auto it = classes_.find(c);
  if (it == classes_.end()) {
    throw Error(ErrorCode::MissingClassModel, "no calibrator for class " + std::to_string(c));
  }
  return evaluate(it->second, score);
}

namespace {

struct ToJson {
  nlohmann::json operator()(const IdentityMap&) const { return {{"identity", true}}; }
  nlohmann::json operator()(const HistogramBinningMap& m) const {
    nlohmann::json values = nlohmann::json::array();
    for (const auto& v : m.bin_values) values.push_back(v ? nlohmann::json(*v) : nlohmann::json());
    return {{"bins", values}};
  }
  nlohmann::json operator()(const LinearMap& m) const {
    return {{"slope", m.slope}, {"intercept", m.intercept}};
  }
  nlohmann::json operator()(const IsotonicMap& m) const {
    return {{"x", m.knots_x}, {"y", m.knots_y}};
  }
};

ClassCalibrator class_from_json(CalibratorKind kind, const nlohmann::json& entry) {
  try {
    if (entry.value("identity", false)) return IdentityMap{};
    switch (kind) {
      case CalibratorKind::HistogramBinning: {
        HistogramBinningMap m;
        for (const auto& v : entry.at("bins")) {
          m.bin_values.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
        }
        if (m.bin_values.empty()) throw Error(ErrorCode::MalformedFile, "HB map without bins");
        return m;
      }
      case CalibratorKind::LinearRegression:
        return LinearMap{entry.at("slope").get<double>(), entry.at("intercept").get<double>()};
      case CalibratorKind::IsotonicRegression: {
        IsotonicMap m{entry.at("x").get<std::vector<double>>(), entry.at("y").get<std::vector<double>>()};
        if (m.knots_x.size() != m.knots_y.size()) {
          throw Error(ErrorCode::MalformedFile, "IR knots must pair up");
        }
        return m;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("calibrator entry: ") + e.what());
  }
  return IdentityMap{};
}

}  // namespace

nlohmann::json CalibratorModel::to_json() const {
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [c, cal] : classes_) classes[std::to_string(c)] = std::visit(ToJson{}, cal);
  return {{"kind", to_string(kind_)}, {"bins", bins_}, {"classes", classes}};
}

CalibratorModel CalibratorModel::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("kind") || !doc.contains("classes")) {
    throw Error(ErrorCode::MalformedFile, "calibrator model needs 'kind' and 'classes'");
  }
  const CalibratorKind kind = calibrator_kind_from_string(doc.at("kind").get<std::string>());
  const int bins = doc.value("bins", kDefaultBins);
  std::map<ClassId, ClassCalibrator> classes;
  for (const auto& [key, entry] : doc.at("classes").items()) {
    classes.emplace(std::stoi(key), class_from_json(kind, entry));
  }
  return CalibratorModel(kind, bins, std::move(classes));
}

CalibratorModel fit_calibrator(CalibratorKind kind, const CalibrationPairs& pairs,
                               const ClassUniverse& universe, int bins) {
  std::map<ClassId, ClassCalibrator> classes;
  for (ClassId c = 1; c <= universe.num_classes; ++c) {
    auto it = pairs.find(c);
    if (it == pairs.end() || it->second.empty()) {
      classes.emplace(c, IdentityMap{});
      continue;
    }
    switch (kind) {
      case CalibratorKind::HistogramBinning:
        classes.emplace(c, fit_histogram_binning(it->second, bins));
        break;
      case CalibratorKind::LinearRegression:
        classes.emplace(c, fit_linear_regression(it->second));
        break;
      case CalibratorKind::IsotonicRegression:
        classes.emplace(c, fit_isotonic_regression(it->second));
        break;
    }
  }
  return CalibratorModel(kind, bins, std::move(classes));
}

DetectionSet apply_calibrator(const CalibratorModel& model, const DetectionSet& detections) {
  std::vector<Detection> out = detections.detections();
  for (auto& d : out) d.score = model.calibrate(d.class_id, d.score);
  return DetectionSet(detections.universe(), std::move(out));
}

std::string ReliabilityDiagram::to_csv() const {
  std::ostringstream out;
  out << "bin_low,bin_high,mean_conf,mean_perf,n_classes\n";
  for (const auto& b : bins) {
    out << io::format_real(b.low) << ',' << io::format_real(b.high) << ',';
    if (b.num_classes > 0) {
      out << io::format_real(b.mean_confidence) << ',' << io::format_real(b.mean_performance);
    } else {
      out << ',';
    }
    out << ',' << b.num_classes << '\n';
  }
  return out.str();
}

ReliabilityDiagram reliability_diagram(const DetectionSet& detections,
                                       const GroundTruthSet& ground_truths, double tau, int bins) {
  const auto nb = static_cast<std::size_t>(bins);
  ReliabilityDiagram diagram;
  diagram.bins.resize(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    diagram.bins[j].low = static_cast<double>(j) / bins;
    diagram.bins[j].high = static_cast<double>(j + 1) / bins;
  }
  for (const auto& m : match_dataset(detections, ground_truths, tau)) {
    if (m.detections.empty()) continue;
    const auto samples = calibration_samples(m.detections, m.assignment);
    const BinStats s = bin_statistics(samples, bins);
    for (std::size_t j = 0; j < nb; ++j) {
      if (s.empty(j)) continue;
      auto& bar = diagram.bins[j];
      bar.mean_confidence += s.mean_confidence[j];
      bar.mean_performance += s.performance(j);
      ++bar.num_classes;
    }
  }
  for (auto& bar : diagram.bins) {
    if (bar.num_classes == 0) continue;
    bar.mean_confidence /= static_cast<double>(bar.num_classes);
    bar.mean_performance /= static_cast<double>(bar.num_classes);
  }
  return diagram;
}

}  // namespace saod
