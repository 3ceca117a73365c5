#include "saod/datamodel.hpp"

#include <algorithm>
#include <unordered_set>

namespace saod {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::DuplicateImageId: return "DuplicateImageId";
    case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::CovarianceNotPositive: return "CovarianceNotPositive";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::InvalidTau: return "InvalidTau";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyCurve: return "EmptyCurve";
    case ErrorCode::DegenerateInstance: return "DegenerateInstance";
    case ErrorCode::NoDetections: return "NoDetections";
    case ErrorCode::MissingClassModel: return "MissingClassModel";
    case ErrorCode::NonFiniteLogit: return "NonFiniteLogit";
    case ErrorCode::DegenerateBounds: return "DegenerateBounds";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::MissingSeverity: return "MissingSeverity";
    case ErrorCode::SplitOverlap: return "SplitOverlap";
    case ErrorCode::MissingDecisions: return "MissingDecisions";
    case ErrorCode::InfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

BoundingBox BoundingBox::from_xywh(double x, double y, double width, double height) {
  return BoundingBox{x, y, x + width, y + height};
}

std::array<double, 4> BoundingBox::to_xywh() const {
  return {x_min, y_min, width(), height()};
}

BoundingBox BoundingBox::translated(double dx, double dy) const {
  return BoundingBox{x_min + dx, y_min + dy, x_max + dx, y_max + dy};
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double area_a = a.area();
  const double area_b = b.area();
  if (area_a <= 0.0 || area_b <= 0.0) return 0.0;
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = area_a + area_b - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::string to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::InDistribution: return "ID";
    case SplitTag::Corrupt: return "CORRUPT";
    case SplitTag::OutOfDistribution: return "OOD";
    case SplitTag::Validation: return "VAL";
  }
  return "ID";
}

SplitTag split_tag_from_string(const std::string& text) {
  if (text == "ID") return SplitTag::InDistribution;
  if (text == "CORRUPT") return SplitTag::Corrupt;
  if (text == "OOD") return SplitTag::OutOfDistribution;
  if (text == "VAL") return SplitTag::Validation;
  throw Error(ErrorCode::MalformedFile, "unknown split tag '" + text + "'");
}

ClassUniverse::ClassUniverse(int k, std::vector<std::string> labels)
    : num_classes(k), names(std::move(labels)) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "class universe needs K >= 1");
  if (!names.empty() && static_cast<int>(names.size()) != k) {
    throw Error(ErrorCode::InvalidArgument, "class names must have K entries");
  }
}

std::string ClassUniverse::name(ClassId c) const {
  if (!names.empty() && contains(c)) return names[static_cast<std::size_t>(c - 1)];
  return std::to_string(c);
}

namespace {
const std::vector<std::size_t> kNoIndices;
}

GroundTruthSet::GroundTruthSet(ClassUniverse universe, std::vector<ImageRecord> images,
                               std::vector<GroundTruth> annotations)
    : universe_(std::move(universe)),
      images_(std::move(images)),
      annotations_(std::move(annotations)),
      by_class_(static_cast<std::size_t>(universe_.num_classes) + 1) {
  for (std::size_t i = 0; i < images_.size(); ++i) {
    const auto& image = images_[i];
    if (!image_index_.emplace(image.image_id, i).second) {
      throw Error(ErrorCode::DuplicateImageId,
                  "image id " + std::to_string(image.image_id) + " listed twice");
    }
    if ((image.split == SplitTag::Corrupt) != image.severity.has_value()) {
      throw Error(ErrorCode::MalformedFile,
                  "image " + std::to_string(image.image_id) +
                      ": severity must be present exactly for CORRUPT images");
    }
    if (image.severity && *image.severity != 1 && *image.severity != 3 &&
        *image.severity != 5) {
      throw Error(ErrorCode::MalformedFile, "severity must be one of 1, 3, 5");
    }
  }
  for (std::size_t i = 0; i < annotations_.size(); ++i) {
    const auto& gt = annotations_[i];
    if (!universe_.contains(gt.class_id)) {
      throw Error(ErrorCode::UnknownClass,
                  "ground truth class " + std::to_string(gt.class_id) + " not declared");
    }
    if (!gt.box.valid() || gt.box.area() <= 0.0) {
      throw Error(ErrorCode::MalformedFile, "ground truth boxes must have positive area");
    }
    if (!image_index_.contains(gt.image_id)) {
      throw Error(ErrorCode::MalformedFile,
                  "annotation refers to unknown image " + std::to_string(gt.image_id));
    }
    by_class_[static_cast<std::size_t>(gt.class_id)].push_back(i);
    by_image_[gt.image_id].push_back(i);
  }
}

const ImageRecord* GroundTruthSet::find_image(ImageId id) const {
  auto it = image_index_.find(id);
  return it == image_index_.end() ? nullptr : &images_[it->second];
}

const std::vector<std::size_t>& GroundTruthSet::indices_for_class(ClassId c) const {
  if (!universe_.contains(c)) return kNoIndices;
  return by_class_[static_cast<std::size_t>(c)];
}

const std::vector<std::size_t>& GroundTruthSet::indices_for_image(ImageId id) const {
  auto it = by_image_.find(id);
  return it == by_image_.end() ? kNoIndices : it->second;
}

DetectionSet::DetectionSet(ClassUniverse universe, std::vector<Detection> detections)
    : universe_(std::move(universe)),
      detections_(std::move(detections)),
      by_class_(static_cast<std::size_t>(universe_.num_classes) + 1) {
  for (std::size_t i = 0; i < detections_.size(); ++i) {
    const auto& d = detections_[i];
    if (!universe_.contains(d.class_id)) {
      throw Error(ErrorCode::UnknownClass,
                  "detection class " + std::to_string(d.class_id) + " not declared");
    }
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw Error(ErrorCode::ScoreOutOfRange,
                  "detection score " + std::to_string(d.score) + " outside [0, 1]");
    }
    if (!d.box.valid()) {
      throw Error(ErrorCode::MalformedFile, "detection box has negative extent");
    }
    if (d.covariance_diag) {
      for (double v : *d.covariance_diag) {
        if (!(v > 0.0)) {
          throw Error(ErrorCode::CovarianceNotPositive,
                      "covariance diagonal entries must be positive");
        }
      }
    }
    by_class_[static_cast<std::size_t>(d.class_id)].push_back(i);
    by_image_[d.image_id].push_back(i);
  }
}

const std::vector<std::size_t>& DetectionSet::indices_for_class(ClassId c) const {
  if (!universe_.contains(c)) return kNoIndices;
  return by_class_[static_cast<std::size_t>(c)];
}

const std::vector<std::size_t>& DetectionSet::indices_for_image(ImageId id) const {
  auto it = by_image_.find(id);
  return it == by_image_.end() ? kNoIndices : it->second;
}

std::vector<ImageId> DetectionSet::image_ids() const {
  std::vector<ImageId> ids;
  std::unordered_set<ImageId> seen;
  for (const auto& d : detections_) {
    if (seen.insert(d.image_id).second) ids.push_back(d.image_id);
  }
  return ids;
}

DetectionSet concat(const std::vector<const DetectionSet*>& parts) {
  if (parts.empty()) return DetectionSet();
  std::vector<Detection> all;
  for (const DetectionSet* part : parts) {
    if (!(part->universe() == parts.front()->universe())) {
      throw Error(ErrorCode::InvalidArgument, "cannot merge detection sets over different classes");
    }
    all.insert(all.end(), part->detections().begin(), part->detections().end());
  }
  return DetectionSet(parts.front()->universe(), std::move(all));
}

}  // namespace saod
