#include "saod/testkit.hpp"

#include <algorithm>
#include <string>

namespace saod::testkit {

std::uint64_t CounterRng::next() {
  std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * (++counter_);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double CounterRng::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::uint64_t CounterRng::below(std::uint64_t n) {
  if (n == 0) return 0;
  return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
}

namespace {

constexpr double kCell = 100.0;

void validate(const SyntheticSpec& spec) {
  const auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (spec.num_classes < 1) throw Error(ErrorCode::InfeasibleSpec, "need at least one class");
  if (!prob(spec.tp_rate) || !prob(spec.fp_rate) || !prob(spec.fp_score_max) ||
      !prob(spec.ood_uncertainty_shift) || !prob(spec.delta) || !prob(spec.corruption_drop)) {
    throw Error(ErrorCode::InfeasibleSpec, "rates and scores must lie in [0, 1]");
  }
  if (!(spec.iou_min > 0.0 && spec.iou_min <= spec.iou_max && spec.iou_max <= 1.0)) {
    throw Error(ErrorCode::InfeasibleSpec, "need 0 < iou_min <= iou_max <= 1");
  }
  if (spec.tp_rate - 5.0 * spec.corruption_drop < -1e-12 && spec.num_corrupt_images > 0) {
    throw Error(ErrorCode::InfeasibleSpec, "corruption drop exceeds the TP rate at severity 5");
  }
}

struct Builder {
  const SyntheticSpec& spec;
  CounterRng rng;
  std::vector<ImageRecord> images;
  std::vector<GroundTruth> gts;
  std::vector<Detection> dets;
  std::vector<Detection> pseudo_ood;
  ImageId next_id = 1;

  double shape_score(double base) const {
    switch (spec.confidence) {
      case ConfidenceModel::Calibrated: return base;
      case ConfidenceModel::Overconfident: return std::min(1.0, base + spec.delta);
      case ConfidenceModel::Underconfident: return std::max(0.0, base - spec.delta);
    }
    return base;
  }

  ClassId random_class() { return static_cast<ClassId>(rng.below(static_cast<std::uint64_t>(spec.num_classes))) + 1; }

  BoundingBox box_in_cell(std::size_t cell) {
    const double x = kCell * static_cast<double>(cell) + rng.uniform(5.0, 30.0);
    const double y = rng.uniform(5.0, 30.0);
    return BoundingBox{x, y, x + rng.uniform(30.0, 60.0), y + rng.uniform(30.0, 60.0)};
  }

  // An image with objects: TPs cover their object, FPs sit in cells of their own.
  void object_image(SplitTag split, std::optional<int> severity, double tp_rate) {
    const ImageId id = next_id++;
    const std::size_t slots = spec.gts_per_image;
    images.push_back({id, split, severity, static_cast<int>(kCell * 2 * std::max<std::size_t>(slots, 1)),
                      static_cast<int>(kCell)});
    for (std::size_t g = 0; g < slots; ++g) {
      GroundTruth gt{id, random_class(), box_in_cell(g)};
      gts.push_back(gt);
      if (!rng.bernoulli(tp_rate)) continue;
      const double target = rng.uniform(spec.iou_min, spec.iou_max);
      Detection d;
      d.image_id = id;
      d.class_id = gt.class_id;
      d.box = BoundingBox{gt.box.x_min, gt.box.y_min,
                          gt.box.x_min + target * gt.box.width(), gt.box.y_max};
      d.score = shape_score(iou(d.box, gt.box));
      dets.push_back(d);
    }
    for (std::size_t f = 0; f < slots; ++f) {
      if (!rng.bernoulli(spec.fp_rate)) continue;
      Detection d;
      d.image_id = id;
      d.class_id = random_class();
      d.box = box_in_cell(slots + f);
      d.score = shape_score(rng.uniform(0.0, spec.fp_score_max));
      dets.push_back(d);
    }
    if (split == SplitTag::Validation) background_detections(id, pseudo_ood);
  }

  void background_detections(ImageId id, std::vector<Detection>& out) {
    const double score_max = 1.0 - spec.ood_uncertainty_shift;
    for (std::size_t i = 0; i < spec.dets_per_ood_image; ++i) {
      Detection d;
      d.image_id = id;
      d.class_id = random_class();
      d.box = box_in_cell(i);
      d.score = rng.uniform(0.0, score_max);
      out.push_back(d);
    }
  }
};

}  // namespace

SyntheticBundle generate(const SyntheticSpec& spec) {
  validate(spec);
  Builder b{spec, CounterRng(spec.seed), {}, {}, {}, {}, 1};
  for (std::size_t i = 0; i < spec.num_val_images; ++i) {
    b.object_image(SplitTag::Validation, std::nullopt, spec.tp_rate);
  }
  for (std::size_t i = 0; i < spec.num_images; ++i) {
    b.object_image(SplitTag::InDistribution, std::nullopt, spec.tp_rate);
  }
  for (int severity : {1, 3, 5}) {
    const double rate = std::max(0.0, spec.tp_rate - spec.corruption_drop * severity);
    for (std::size_t i = 0; i < spec.num_corrupt_images; ++i) {
      b.object_image(SplitTag::Corrupt, severity, rate);
    }
  }
  for (std::size_t i = 0; i < spec.num_ood_images; ++i) {
    const ImageId id = b.next_id++;
    b.images.push_back({id, SplitTag::OutOfDistribution, std::nullopt, static_cast<int>(kCell * 4),
                        static_cast<int>(kCell)});
    b.background_detections(id, b.dets);
  }
  ClassUniverse universe(spec.num_classes);
  SyntheticBundle bundle;
  bundle.ground_truths = GroundTruthSet(universe, std::move(b.images), std::move(b.gts));
  bundle.detections = DetectionSet(universe, std::move(b.dets));
  bundle.pseudo_ood_detections = DetectionSet(universe, std::move(b.pseudo_ood));
  return bundle;
}

DetectionSet inject_dummies(const DetectionSet& detections, const GroundTruthSet& images,
                            std::size_t per_image_target, std::uint64_t seed) {
  CounterRng rng(seed);
  const int k = detections.universe().num_classes;
  std::vector<Detection> out = detections.detections();
  for (const auto& image : images.images()) {
    const std::size_t have = detections.indices_for_image(image.image_id).size();
    if (have > per_image_target) {
      throw Error(ErrorCode::InvalidArgument, "image " + std::to_string(image.image_id) +
                                                  " already exceeds the padding target");
    }
    double right = 0.0;
    for (std::size_t g : images.indices_for_image(image.image_id)) {
      right = std::max(right, images.annotations()[g].box.x_max);
    }
    for (std::size_t i = have; i < per_image_target; ++i) {
      Detection d;
      d.image_id = image.image_id;
      d.class_id = static_cast<ClassId>(rng.below(static_cast<std::uint64_t>(k))) + 1;
      d.score = 0.0;
      d.box = BoundingBox{right + 1.0, 0.0, right + 2.0, 1.0};
      out.push_back(d);
    }
  }
  return DetectionSet(detections.universe(), std::move(out));
}

}  // namespace saod::testkit
