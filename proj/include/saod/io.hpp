#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "saod/datamodel.hpp"

namespace saod::io {

using nlohmann::json;

// Ground-truth file: COCO-annotation subset plus "split"/"severity" per image.
GroundTruthSet ground_truth_from_json(const json& doc);
json ground_truth_to_json(const GroundTruthSet& set);
GroundTruthSet load_ground_truth(const std::filesystem::path& path);
void save_ground_truth(const GroundTruthSet& set, const std::filesystem::path& path);

// Detection file: COCO-results array with optional raw_logits / cov_diag.
DetectionSet detections_from_json(const json& doc, const ClassUniverse& universe);
json detections_to_json(const DetectionSet& set);
DetectionSet load_detections(const std::filesystem::path& path, const ClassUniverse& universe);
void save_detections(const DetectionSet& set, const std::filesystem::path& path);

struct ImageUncertaintyEntry {
  ImageId image_id = 0;
  double uncertainty = 0.0;
  SplitTag split = SplitTag::InDistribution;

  friend bool operator==(const ImageUncertaintyEntry&, const ImageUncertaintyEntry&) = default;
};

std::vector<ImageUncertaintyEntry> uncertainties_from_json(const json& doc);
json uncertainties_to_json(const std::vector<ImageUncertaintyEntry>& entries);
std::vector<ImageUncertaintyEntry> load_uncertainties(const std::filesystem::path& path);
void save_uncertainties(const std::vector<ImageUncertaintyEntry>& entries,
                        const std::filesystem::path& path);

/// Reads and parses a JSON document, mapping failures onto FileNotFound /
/// MalformedFile.
json read_json(const std::filesystem::path& path);
void write_json(const json& doc, const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

/// Finite doubles are plain numbers; infinities are written as "inf"/"-inf".
json real_to_json(double value);
double real_from_json(const json& value);

/// Shortest text that parses back to the same double.
std::string format_real(double value);

}  // namespace saod::io
