#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "saod/error.hpp"

namespace saod {

using ImageId = std::int64_t;
using ClassId = int;

/// Axis-aligned box in corner form, image pixel coordinates.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  /// Builds a box from the on-disk [x, y, width, height] form.
  static BoundingBox from_xywh(double x, double y, double width, double height);

  std::array<double, 4> to_xywh() const;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool valid() const { return x_max >= x_min && y_max >= y_min; }

  BoundingBox translated(double dx, double dy) const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Intersection over union. Zero whenever the boxes are disjoint or either
/// box has zero area.
double iou(const BoundingBox& a, const BoundingBox& b);

struct GroundTruth {
  ImageId image_id = 0;
  ClassId class_id = 1;
  BoundingBox box;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct Detection {
  ImageId image_id = 0;
  ClassId class_id = 1;
  double score = 0.0;
  BoundingBox box;
  std::optional<std::vector<double>> raw_logits;
  std::optional<std::array<double, 4>> covariance_diag;

  /// True when the detection carries a predicted box covariance.
  bool probabilistic() const { return covariance_diag.has_value(); }

  friend bool operator==(const Detection&, const Detection&) = default;
};

enum class SplitTag { InDistribution, Corrupt, OutOfDistribution, Validation };

std::string to_string(SplitTag tag);
SplitTag split_tag_from_string(const std::string& text);

struct ImageRecord {
  ImageId image_id = 0;
  SplitTag split = SplitTag::InDistribution;
  std::optional<int> severity;  // present iff split == Corrupt
  std::optional<int> width;
  std::optional<int> height;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

/// Dense class ids 1..K, declared up front.
struct ClassUniverse {
  int num_classes = 1;
  std::vector<std::string> names;

  explicit ClassUniverse(int k = 1, std::vector<std::string> labels = {});

  bool contains(ClassId c) const { return c >= 1 && c <= num_classes; }
  std::string name(ClassId c) const;

  friend bool operator==(const ClassUniverse&, const ClassUniverse&) = default;
};

/// Ground truths plus the image index they refer to. Immutable once built.
class GroundTruthSet {
 public:
  GroundTruthSet() = default;
  GroundTruthSet(ClassUniverse universe, std::vector<ImageRecord> images,
                 std::vector<GroundTruth> annotations);

  const ClassUniverse& universe() const { return universe_; }
  const std::vector<ImageRecord>& images() const { return images_; }
  const std::vector<GroundTruth>& annotations() const { return annotations_; }

  std::size_t num_images() const { return images_.size(); }
  std::size_t size() const { return annotations_.size(); }

  const ImageRecord* find_image(ImageId id) const;
  bool has_image(ImageId id) const { return find_image(id) != nullptr; }

  /// Indices into annotations() for class c, in input order.
  const std::vector<std::size_t>& indices_for_class(ClassId c) const;
  /// Number of ground truths of class c.
  std::size_t count_for_class(ClassId c) const { return indices_for_class(c).size(); }
  /// Indices into annotations() for one image, in input order.
  const std::vector<std::size_t>& indices_for_image(ImageId id) const;

  /// Subset restricted to images for which keep(image) holds.
  template <typename Predicate>
  GroundTruthSet filter_images(Predicate keep) const {
    std::vector<ImageRecord> images;
    std::vector<GroundTruth> annotations;
    for (const auto& image : images_) {
      if (keep(image)) images.push_back(image);
    }
    for (const auto& gt : annotations_) {
      const ImageRecord* image = find_image(gt.image_id);
      if (image != nullptr && keep(*image)) annotations.push_back(gt);
    }
    return GroundTruthSet(universe_, std::move(images), std::move(annotations));
  }

  friend bool operator==(const GroundTruthSet& a, const GroundTruthSet& b) {
    return a.universe_ == b.universe_ && a.images_ == b.images_ &&
           a.annotations_ == b.annotations_;
  }

 private:
  ClassUniverse universe_;
  std::vector<ImageRecord> images_;
  std::vector<GroundTruth> annotations_;
  std::unordered_map<ImageId, std::size_t> image_index_;
  std::vector<std::vector<std::size_t>> by_class_;
  std::unordered_map<ImageId, std::vector<std::size_t>> by_image_;
};

/// Scored detections in input order. Input order is the final tie-breaker
/// for every sort performed downstream.
class DetectionSet {
 public:
  DetectionSet() = default;
  DetectionSet(ClassUniverse universe, std::vector<Detection> detections);

  const ClassUniverse& universe() const { return universe_; }
  const std::vector<Detection>& detections() const { return detections_; }
  std::size_t size() const { return detections_.size(); }
  bool empty() const { return detections_.empty(); }
  const Detection& operator[](std::size_t i) const { return detections_[i]; }

  const std::vector<std::size_t>& indices_for_class(ClassId c) const;
  const std::vector<std::size_t>& indices_for_image(ImageId id) const;

  /// Image ids that own at least one detection, in first-seen order.
  std::vector<ImageId> image_ids() const;

  template <typename Predicate>
  DetectionSet filter(Predicate keep) const {
    std::vector<Detection> kept;
    for (const auto& d : detections_) {
      if (keep(d)) kept.push_back(d);
    }
    return DetectionSet(universe_, std::move(kept));
  }

  friend bool operator==(const DetectionSet& a, const DetectionSet& b) {
    return a.universe_ == b.universe_ && a.detections_ == b.detections_;
  }

 private:
  ClassUniverse universe_;
  std::vector<Detection> detections_;
  std::vector<std::vector<std::size_t>> by_class_;
  std::unordered_map<ImageId, std::vector<std::size_t>> by_image_;
};

/// Concatenates detection sets sharing one class universe, preserving order.
DetectionSet concat(const std::vector<const DetectionSet*>& parts);

}  // namespace saod
