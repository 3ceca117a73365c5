#include "saod/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace saod::io {
namespace {

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedFile, what);
}

const json& require(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    malformed(std::string("missing field '") + key + "'");
  }
  return obj.at(key);
}

double number(const json& value, const char* what) {
  if (!value.is_number()) malformed(std::string(what) + " must be a number");
  const double v = value.get<double>();
  if (!std::isfinite(v)) malformed(std::string(what) + " must be finite");
  return v;
}

std::int64_t integer(const json& value, const char* what) {
  if (!value.is_number_integer()) malformed(std::string(what) + " must be an integer");
  return value.get<std::int64_t>();
}

BoundingBox box_from_json(const json& value) {
  if (!value.is_array() || value.size() != 4) malformed("bbox must be [x, y, w, h]");
  const double w = number(value[2], "bbox width");
  const double h = number(value[3], "bbox height");
  if (w < 0.0 || h < 0.0) malformed("bbox has negative width or height");
  return BoundingBox::from_xywh(number(value[0], "bbox x"), number(value[1], "bbox y"), w, h);
}

json box_to_json(const BoundingBox& box) {
  const auto xywh = box.to_xywh();
  return json::array({xywh[0], xywh[1], xywh[2], xywh[3]});
}

ClassUniverse universe_from_categories(const json& categories) {
  if (!categories.is_array() || categories.empty()) {
    malformed("'categories' must be a non-empty array");
  }
  const int k = static_cast<int>(categories.size());
  std::vector<std::string> names(static_cast<std::size_t>(k));
  std::vector<bool> seen(static_cast<std::size_t>(k) + 1, false);
  bool all_named = true;
  for (const auto& cat : categories) {
    const auto id = integer(require(cat, "id"), "category id");
    if (id < 1 || id > k || seen[static_cast<std::size_t>(id)]) {
      malformed("category ids must be dense integers 1..K");
    }
    seen[static_cast<std::size_t>(id)] = true;
    if (cat.contains("name") && cat.at("name").is_string()) {
      names[static_cast<std::size_t>(id - 1)] = cat.at("name").get<std::string>();
    } else {
      all_named = false;
    }
  }
  if (!all_named) names.clear();
  return ClassUniverse(k, std::move(names));
}

}  // namespace

json real_to_json(double value) {
  if (std::isinf(value)) return value > 0 ? json("inf") : json("-inf");
  return json(value);
}

double real_from_json(const json& value) {
  if (value.is_string()) {
    const auto s = value.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    malformed("expected a number or \"inf\", got '" + s + "'");
  }
  if (!value.is_number()) malformed("expected a number");
  return value.get<double>();
}

std::string format_real(double value) {
  // Same shortest round-trip rendering the JSON writer uses.
  return json(value).dump();
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    malformed(path.string() + ": " + e.what());
  }
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot write " + path.string());
  out << text;
}

void write_json(const json& doc, const std::filesystem::path& path) {
  write_text(doc.dump(2) + "\n", path);
}

GroundTruthSet ground_truth_from_json(const json& doc) {
  if (!doc.is_object()) malformed("ground-truth file must be a JSON object");
  ClassUniverse universe = universe_from_categories(require(doc, "categories"));

  std::vector<ImageRecord> images;
  const json& image_list = require(doc, "images");
  if (!image_list.is_array()) malformed("'images' must be an array");
  for (const auto& entry : image_list) {
    ImageRecord image;
    image.image_id = integer(require(entry, "id"), "image id");
    image.split = entry.contains("split")
                      ? split_tag_from_string(entry.at("split").get<std::string>())
                      : SplitTag::InDistribution;
    if (entry.contains("severity") && !entry.at("severity").is_null()) {
      image.severity = static_cast<int>(integer(entry.at("severity"), "severity"));
    }
    if (entry.contains("width")) image.width = static_cast<int>(integer(entry.at("width"), "width"));
    if (entry.contains("height")) {
      image.height = static_cast<int>(integer(entry.at("height"), "height"));
    }
    if ((image.width && *image.width <= 0) || (image.height && *image.height <= 0)) {
      malformed("image width/height must be positive");
    }
    images.push_back(image);
  }

  std::vector<GroundTruth> annotations;
  const json& ann_list = require(doc, "annotations");
  if (!ann_list.is_array()) malformed("'annotations' must be an array");
  for (const auto& entry : ann_list) {
    GroundTruth gt;
    gt.image_id = integer(require(entry, "image_id"), "image_id");
    gt.class_id = static_cast<ClassId>(integer(require(entry, "category_id"), "category_id"));
    gt.box = box_from_json(require(entry, "bbox"));
    annotations.push_back(gt);
  }
  return GroundTruthSet(std::move(universe), std::move(images), std::move(annotations));
}

json ground_truth_to_json(const GroundTruthSet& set) {
  json categories = json::array();
  const auto& universe = set.universe();
  for (int c = 1; c <= universe.num_classes; ++c) {
    json cat = {{"id", c}};
    if (!universe.names.empty()) cat["name"] = universe.names[static_cast<std::size_t>(c - 1)];
    categories.push_back(cat);
  }
  json images = json::array();
  for (const auto& image : set.images()) {
    json entry = {{"id", image.image_id}, {"split", to_string(image.split)}};
    if (image.severity) entry["severity"] = *image.severity;
    if (image.width) entry["width"] = *image.width;
    if (image.height) entry["height"] = *image.height;
    images.push_back(entry);
  }
  json annotations = json::array();
  for (const auto& gt : set.annotations()) {
    annotations.push_back(
        {{"image_id", gt.image_id}, {"category_id", gt.class_id}, {"bbox", box_to_json(gt.box)}});
  }
  return {{"categories", categories}, {"images", images}, {"annotations", annotations}};
}

GroundTruthSet load_ground_truth(const std::filesystem::path& path) {
  return ground_truth_from_json(read_json(path));
}

void save_ground_truth(const GroundTruthSet& set, const std::filesystem::path& path) {
  write_json(ground_truth_to_json(set), path);
}

DetectionSet detections_from_json(const json& doc, const ClassUniverse& universe) {
  if (!doc.is_array()) malformed("detection file must be a JSON array");
  std::vector<Detection> detections;
  detections.reserve(doc.size());
  for (const auto& entry : doc) {
    Detection d;
    d.image_id = integer(require(entry, "image_id"), "image_id");
    d.class_id = static_cast<ClassId>(integer(require(entry, "category_id"), "category_id"));
    d.box = box_from_json(require(entry, "bbox"));
    const json& score = require(entry, "score");
    if (!score.is_number()) malformed("score must be a number");
    d.score = score.get<double>();
    if (entry.contains("raw_logits") && !entry.at("raw_logits").is_null()) {
      const json& logits = entry.at("raw_logits");
      if (!logits.is_array()) malformed("raw_logits must be an array");
      std::vector<double> values;
      for (const auto& v : logits) {
        if (!v.is_number()) malformed("raw_logits entries must be numbers");
        values.push_back(v.get<double>());
      }
      const auto k = static_cast<std::size_t>(universe.num_classes);
      if (values.size() != k && values.size() != k + 1) {
        malformed("raw_logits must have K or K+1 entries");
      }
      d.raw_logits = std::move(values);
    }
    if (entry.contains("cov_diag") && !entry.at("cov_diag").is_null()) {
      const json& cov = entry.at("cov_diag");
      if (!cov.is_array() || cov.size() != 4) malformed("cov_diag must hold 4 variances");
      std::array<double, 4> values{};
      for (std::size_t i = 0; i < 4; ++i) {
        if (!cov[i].is_number()) malformed("cov_diag entries must be numbers");
        values[i] = cov[i].get<double>();
      }
      d.covariance_diag = values;
    }
    detections.push_back(std::move(d));
  }
  return DetectionSet(universe, std::move(detections));
}

json detections_to_json(const DetectionSet& set) {
  json out = json::array();
  for (const auto& d : set.detections()) {
    json entry = {{"image_id", d.image_id},
                  {"category_id", d.class_id},
                  {"bbox", box_to_json(d.box)},
                  {"score", d.score}};
    if (d.raw_logits) entry["raw_logits"] = *d.raw_logits;
    if (d.covariance_diag) {
      const auto& c = *d.covariance_diag;
      entry["cov_diag"] = json::array({c[0], c[1], c[2], c[3]});
    }
    out.push_back(std::move(entry));
  }
  return out;
}

DetectionSet load_detections(const std::filesystem::path& path, const ClassUniverse& universe) {
  return detections_from_json(read_json(path), universe);
}

void save_detections(const DetectionSet& set, const std::filesystem::path& path) {
  write_json(detections_to_json(set), path);
}

std::vector<ImageUncertaintyEntry> uncertainties_from_json(const json& doc) {
  if (!doc.is_array()) malformed("uncertainty dump must be a JSON array");
  std::vector<ImageUncertaintyEntry> entries;
  for (const auto& item : doc) {
    ImageUncertaintyEntry e;
    e.image_id = integer(require(item, "image_id"), "image_id");
    e.uncertainty = real_from_json(require(item, "uncertainty"));
    e.split = split_tag_from_string(require(item, "split").get<std::string>());
    entries.push_back(e);
  }
  return entries;
}

json uncertainties_to_json(const std::vector<ImageUncertaintyEntry>& entries) {
  json out = json::array();
  for (const auto& e : entries) {
    out.push_back({{"image_id", e.image_id},
                   {"uncertainty", real_to_json(e.uncertainty)},
                   {"split", to_string(e.split)}});
  }
  return out;
}

std::vector<ImageUncertaintyEntry> load_uncertainties(const std::filesystem::path& path) {
  return uncertainties_from_json(read_json(path));
}

void save_uncertainties(const std::vector<ImageUncertaintyEntry>& entries,
                        const std::filesystem::path& path) {
  write_json(uncertainties_to_json(entries), path);
}

}  // namespace saod::io
