#include "saod/self_aware.hpp"

#include <cstdio>
#include <limits>
#include <sstream>

#include "saod/harmonic_mean.hpp"
#include "saod/io.hpp"

namespace saod {

using nlohmann::json;

json SelfAwareConfig::to_json() const {
  json thresholds = json::object();
  for (const auto& [c, v] : detection_thresholds) thresholds[std::to_string(c)] = io::real_to_json(v);
  return {{"image_threshold", io::real_to_json(image_threshold)},
          {"detection_thresholds", thresholds},
          {"aggregation", aggregation.to_string()},
          {"calibrator", calibrator.to_json()}};
}

SelfAwareConfig SelfAwareConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::MalformedFile, "self-aware config must be an object");
  for (const char* key : {"image_threshold", "detection_thresholds", "calibrator"}) {
    if (!doc.contains(key)) {
      throw Error(ErrorCode::MalformedFile, std::string("self-aware config lacks '") + key + "'");
    }
  }
  SelfAwareConfig config;
  config.image_threshold = io::real_from_json(doc.at("image_threshold"));
  for (const auto& [key, value] : doc.at("detection_thresholds").items()) {
    config.detection_thresholds[std::stoi(key)] = io::real_from_json(value);
  }
  config.calibrator = CalibratorModel::from_json(doc.at("calibrator"));
  if (doc.contains("aggregation")) {
    config.aggregation = AggregationStrategy::parse(doc.at("aggregation").get<std::string>());
  }
  return config;
}

ImageUncertainty image_uncertainty(std::span<const Detection> image_detections,
                                   const AggregationStrategy& strategy) {
  std::vector<double> values;
  values.reserve(image_detections.size());
  for (const auto& d : image_detections) values.push_back(uncertainty_score(d));
  return aggregate(values, strategy);
}

InferenceResult self_aware_inference(const SelfAwareConfig& config,
                                     std::span<const Detection> image_detections,
                                     std::optional<double> uncertainty_override) {
  InferenceResult result;
  result.uncertainty = uncertainty_override
                           ? *uncertainty_override
                           : image_uncertainty(image_detections, config.aggregation).value;
  // Equality rejects.
  result.accepted = result.uncertainty < config.image_threshold;
  if (!result.accepted) return result;
  for (const auto& d : image_detections) {
    auto it = config.detection_thresholds.find(d.class_id);
    if (it == config.detection_thresholds.end()) {
      throw Error(ErrorCode::MissingClassModel,
                  "no detection threshold for class " + std::to_string(d.class_id));
    }
    if (d.score >= it->second) {
      Detection kept = d;
      kept.score = config.calibrator.calibrate(d.class_id, d.score);
      result.detections.push_back(std::move(kept));
    }
  }
  return result;
}

ImageOutputs run_inference(const SelfAwareConfig& config, const GroundTruthSet& images,
                           const DetectionSet& detections,
                           const std::map<ImageId, double>* uncertainty_override) {
  ImageOutputs outputs;
  for (const auto& image : images.images()) {
    std::vector<Detection> own;
    for (std::size_t i : detections.indices_for_image(image.image_id)) own.push_back(detections[i]);
    std::optional<double> override_value;
    if (uncertainty_override != nullptr) {
      auto it = uncertainty_override->find(image.image_id);
      if (it == uncertainty_override->end()) {
        throw Error(ErrorCode::MissingDecisions,
                    "no uncertainty supplied for image " + std::to_string(image.image_id));
      }
      override_value = it->second;
    }
    outputs.emplace(image.image_id, self_aware_inference(config, own, override_value));
  }
  return outputs;
}

namespace {

QualityResult score_pool(const ImageOutputs& outputs, const GroundTruthSet& pool, double tau,
                         int bins) {
  QualityResult r;
  std::vector<Detection> kept;
  for (const auto& image : pool.images()) {
    auto it = outputs.find(image.image_id);
    if (it == outputs.end()) {
      throw Error(ErrorCode::MissingDecisions,
                  "image " + std::to_string(image.image_id) + " has no accept decision");
    }
    ++r.num_images;
    if (!it->second.accepted) continue;
    ++r.num_accepted;
    kept.insert(kept.end(), it->second.detections.begin(), it->second.detections.end());
  }
  const DetectionSet detections(pool.universe(), std::move(kept));
  r.lrp_detail = dataset_lrp(detections, pool, tau);
  r.laece_detail = laece(detections, pool, tau, bins);
  r.lrp = r.lrp_detail.lrp;
  r.laece = r.laece_detail.laece;
  r.idq = harmonic_mean({1.0 - r.lrp, 1.0 - r.laece});
  return r;
}

}  // namespace

QualityResult idq(const ImageOutputs& outputs, const GroundTruthSet& ground_truths, double tau,
                  int bins) {
  return score_pool(outputs, ground_truths, tau, bins);
}

QualityResult idq_t(const ImageOutputs& outputs, const GroundTruthSet& corrupted, double tau,
                    int bins) {
  for (const auto& image : corrupted.images()) {
    if (!image.severity) {
      throw Error(ErrorCode::MissingSeverity,
                  "corrupted image " + std::to_string(image.image_id) + " has no severity");
    }
    if (!outputs.contains(image.image_id)) {
      throw Error(ErrorCode::MissingDecisions,
                  "image " + std::to_string(image.image_id) + " has no accept decision");
    }
  }
  const GroundTruthSet pool = corrupted.filter_images([&](const ImageRecord& image) {
    return !(*image.severity == 5 && !outputs.at(image.image_id).accepted);
  });
  return score_pool(outputs, pool, tau, bins);
}

double daq(double ba, double idq_value, double idq_t_value) {
  return harmonic_mean({ba, idq_value, idq_t_value});
}

void require_split(const DetectionSet& detections, const GroundTruthSet& ground_truths,
                   SplitTag split) {
  for (const auto& d : detections.detections()) {
    const ImageRecord* image = ground_truths.find_image(d.image_id);
    if (image == nullptr) {
      throw Error(ErrorCode::MalformedFile,
                  "detection refers to unknown image " + std::to_string(d.image_id));
    }
    if (image->split != split) {
      throw Error(ErrorCode::SplitOverlap, "image " + std::to_string(d.image_id) + " is " +
                                               to_string(image->split) + ", expected " +
                                               to_string(split));
    }
  }
}

SaodReport evaluate_saod(const SelfAwareConfig& config, const GroundTruthSet& ground_truths,
                         const DetectionSet& detections, double tau, int bins,
                         const std::map<ImageId, double>* uncertainty_override) {
  for (const auto& d : detections.detections()) {
    const ImageRecord* image = ground_truths.find_image(d.image_id);
    if (image == nullptr) {
      throw Error(ErrorCode::MalformedFile,
                  "detection refers to unknown image " + std::to_string(d.image_id));
    }
    if (image->split == SplitTag::Validation) {
      throw Error(ErrorCode::SplitOverlap, "validation image " + std::to_string(d.image_id) +
                                               " inside the test bundle");
    }
  }
  const auto in_split = [&](SplitTag tag) {
    return ground_truths.filter_images([tag](const ImageRecord& r) { return r.split == tag; });
  };
  const GroundTruthSet id_set = in_split(SplitTag::InDistribution);
  const GroundTruthSet corrupt_set = in_split(SplitTag::Corrupt);
  const GroundTruthSet ood_set = in_split(SplitTag::OutOfDistribution);
  if (id_set.num_images() == 0 || corrupt_set.num_images() == 0 || ood_set.num_images() == 0) {
    throw Error(ErrorCode::EmptySplit, "ID, CORRUPT and OOD images are all required");
  }

  const GroundTruthSet test_set =
      ground_truths.filter_images([](const ImageRecord& r) { return r.split != SplitTag::Validation; });
  const ImageOutputs outputs = run_inference(config, test_set, detections, uncertainty_override);

  SaodReport report;
  std::vector<double> id_unc, ood_unc;
  for (const auto& image : test_set.images()) {
    const InferenceResult& out = outputs.at(image.image_id);
    std::string key = to_string(image.split);
    if (image.severity) key += "_" + std::to_string(*image.severity);
    auto& acc = report.acceptance[key];
    ++acc.images;
    if (out.accepted) ++acc.accepted;
    if (image.split == SplitTag::InDistribution) id_unc.push_back(out.uncertainty);
    if (image.split == SplitTag::OutOfDistribution) ood_unc.push_back(out.uncertainty);
  }
  const OodDecisionStats decisions = ood_decision_stats(id_unc, ood_unc, config.image_threshold);
  report.tpr = decisions.tpr;
  report.tnr = decisions.tnr;
  report.ba = decisions.ba;

  const QualityResult q_id = idq(outputs, id_set, tau, bins);
  const QualityResult q_t = idq_t(outputs, corrupt_set, tau, bins);
  report.idq = q_id.idq;
  report.laece_id = q_id.laece;
  report.lrp_id = q_id.lrp;
  report.idq_t = q_t.idq;
  report.laece_t = q_t.laece;
  report.lrp_t = q_t.lrp;
  report.daq = daq(report.ba, report.idq, report.idq_t);

  for (const auto& [c, r] : q_id.lrp_detail.per_class) report.per_class[c].lrp_id = r.lrp;
  for (const auto& [c, e] : q_id.laece_detail.per_class) report.per_class[c].laece_id = e;
  for (const auto& [c, r] : q_t.lrp_detail.per_class) report.per_class[c].lrp_t = r.lrp;
  for (const auto& [c, e] : q_t.laece_detail.per_class) report.per_class[c].laece_t = e;
  return report;
}

json SaodReport::to_json() const {
  json acc = json::object();
  for (const auto& [key, a] : acceptance) {
    acc[key] = {{"images", a.images}, {"accepted", a.accepted}, {"rate", a.rate()}};
  }
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(); };
  json classes = json::object();
  for (const auto& [c, b] : per_class) {
    classes[std::to_string(c)] = {{"lrp_id", opt(b.lrp_id)},
                                  {"laece_id", opt(b.laece_id)},
                                  {"lrp_t", opt(b.lrp_t)},
                                  {"laece_t", opt(b.laece_t)}};
  }
  return {{"daq", daq},         {"ba", ba},           {"tpr", tpr},         {"tnr", tnr},
          {"idq", idq},         {"laece", laece_id},  {"lrp", lrp_id},      {"idq_t", idq_t},
          {"laece_t", laece_t}, {"lrp_t", lrp_t},     {"acceptance", acc},  {"per_class", classes}};
}

std::string SaodReport::to_table() const {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%8s %8s %8s %8s %8s %8s %8s %8s\n", "DAQ", "BA", "IDQ",
                "LaECE", "LRP", "IDQ_T", "LaECE_T", "LRP_T");
  out << line;
  std::snprintf(line, sizeof(line), "%8.2f %8.2f %8.2f %8.2f %8.2f %8.2f %8.2f %8.2f\n",
                100.0 * daq, 100.0 * ba, 100.0 * idq, 100.0 * laece_id, 100.0 * lrp_id,
                100.0 * idq_t, 100.0 * laece_t, 100.0 * lrp_t);
  out << line;
  return out.str();
}

namespace {

std::vector<double> uncertainties_for(const GroundTruthSet& images, const DetectionSet& detections,
                                      const AggregationStrategy& strategy) {
  std::vector<double> values;
  values.reserve(images.num_images());
  for (const auto& image : images.images()) {
    std::vector<Detection> own;
    for (std::size_t i : detections.indices_for_image(image.image_id)) own.push_back(detections[i]);
    values.push_back(image_uncertainty(own, strategy).value);
  }
  return values;
}

}  // namespace

SelfAwareFit make_self_aware(const GroundTruthSet& validation, const DetectionSet& detections,
                             const DetectionSet& pseudo_ood_detections,
                             const MakeSelfAwareOptions& options) {
  // Pseudo ID: validation images holding at least one object. Pseudo OOD:
  // every validation image, seen through the masked-image detections.
  const GroundTruthSet positives = validation.filter_images([&](const ImageRecord& image) {
    return !validation.indices_for_image(image.image_id).empty();
  });
  if (positives.num_images() == 0 || validation.num_images() == 0) {
    throw Error(ErrorCode::EmptySplit, "validation set has no image with objects");
  }

  SelfAwareFit fit;
  fit.num_positive_images = positives.num_images();
  fit.num_pseudo_ood_images = validation.num_images();
  const auto id_unc = uncertainties_for(positives, detections, options.aggregation);
  const auto ood_unc = uncertainties_for(validation, pseudo_ood_detections, options.aggregation);

  if (options.threshold_method == ImageThresholdMethod::PseudoOod) {
    fit.pseudo_stats = select_threshold_ba(id_unc, ood_unc);
  } else {
    fit.pseudo_stats = ood_decision_stats(id_unc, ood_unc, threshold_at_tpr(id_unc, 0.95));
  }

  SelfAwareConfig& config = fit.config;
  config.image_threshold = fit.pseudo_stats.threshold;
  config.aggregation = options.aggregation;

  const DetectionSet positive_dets = detections.filter(
      [&](const Detection& d) { return !positives.indices_for_image(d.image_id).empty(); });
  config.detection_thresholds = lrp_optimal_thresholds(positive_dets, positives, options.tau);

  const DetectionSet thresholded = positive_dets.filter(
      [&](const Detection& d) { return d.score >= config.detection_thresholds.at(d.class_id); });
  config.calibrator = fit_calibrator(options.calibrator,
                                     calibration_pairs(thresholded, positives, options.tau),
                                     validation.universe(), options.bins);
  return fit;
}

}  // namespace saod
