#pragma once

#include <vector>

#include "saod/datamodel.hpp"

namespace saod::test {

inline Detection det(ImageId image, ClassId c, double score, BoundingBox box) {
  Detection d;
  d.image_id = image;
  d.class_id = c;
  d.score = score;
  d.box = box;
  return d;
}

inline GroundTruth gt(ImageId image, ClassId c, BoundingBox box) { return {image, c, box}; }

// Box [x, x+w) x [0, 10) against the reference box (0,0,10,10): IoU = w/10 for w <= 10.
inline BoundingBox strip(double w) { return {0.0, 0.0, w, 10.0}; }
inline BoundingBox unit_ref() { return {0.0, 0.0, 10.0, 10.0}; }

inline std::vector<ImageRecord> id_images(std::initializer_list<ImageId> ids) {
  std::vector<ImageRecord> out;
  for (ImageId id : ids) out.push_back({id, SplitTag::InDistribution, std::nullopt, {}, {}});
  return out;
}

}  // namespace saod::test
