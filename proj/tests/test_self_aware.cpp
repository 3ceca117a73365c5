#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "saod/harmonic_mean.hpp"
#include "saod/self_aware.hpp"
#include "saod/testkit.hpp"

using namespace saod;
using saod::test::det;
using saod::test::gt;
using saod::test::unit_ref;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SelfAwareConfig simple_config(const ClassUniverse& u, double image_threshold, double det_threshold) {
  SelfAwareConfig c;
  c.image_threshold = image_threshold;
  for (ClassId k = 1; k <= u.num_classes; ++k) c.detection_thresholds[k] = det_threshold;
  c.calibrator = CalibratorModel::identity(u);
  return c;
}

// Perfect detections on object-bearing images, nothing on OOD images.
testkit::SyntheticBundle oracle_bundle() {
  testkit::SyntheticSpec spec;
  spec.seed = 21;
  spec.num_images = 10;
  spec.num_val_images = 10;
  spec.num_corrupt_images = 5;
  spec.num_ood_images = 10;
  spec.tp_rate = 1.0;
  spec.fp_rate = 0.0;
  spec.iou_min = spec.iou_max = 1.0;
  spec.corruption_drop = 0.0;
  spec.dets_per_ood_image = 0;
  return testkit::generate(spec);
}

DetectionSet test_split_dets(const testkit::SyntheticBundle& b) {
  return b.detections.filter([&](const Detection& d) {
    return b.ground_truths.find_image(d.image_id)->split != SplitTag::Validation;
  });
}

}  // namespace

TEST(HarmonicMean, ReportedCompositions) {
  EXPECT_NEAR(harmonic_mean({1 - 0.749, 1 - 0.173}), 0.385, 1e-3);
  EXPECT_NEAR(harmonic_mean({1 - 0.844, 1 - 0.181}), 0.262, 1e-3);
  EXPECT_NEAR(daq(0.877, 0.385, 0.262), 0.397, 1e-3);
  EXPECT_NEAR(daq(0.858, 0.435, 0.308), 0.447, 1e-3);
  EXPECT_EQ(daq(0.0, 0.5, 0.5), 0.0);
  EXPECT_EQ(daq(0.9, 0.5, 0.0), 0.0);
  EXPECT_NEAR(harmonic_mean({0.947, 0.816}), 0.877, 1e-3);
}

TEST(Inference, RejectsEmptyImages) {
  ClassUniverse u(1);
  const auto r = self_aware_inference(simple_config(u, 0.5, 0.0), std::vector<Detection>{});
  EXPECT_FALSE(r.accepted);
  EXPECT_EQ(r.uncertainty, 1e12);
}

TEST(Inference, ThresholdsThenCalibrates) {
  ClassUniverse u(1);
  auto config = simple_config(u, 0.5, 0.5);
  const std::vector<Detection> d{det(1, 1, 0.9, unit_ref()), det(1, 1, 0.2, unit_ref())};
  auto r = self_aware_inference(config, d);
  ASSERT_TRUE(r.accepted);
  ASSERT_EQ(r.detections.size(), 1u);
  EXPECT_EQ(r.detections[0], d[0]);

  config.calibrator = CalibratorModel(CalibratorKind::LinearRegression, 25, {{1, LinearMap{0.5, 0.0}}});
  r = self_aware_inference(config, d);
  EXPECT_NEAR(r.detections[0].score, 0.45, 1e-15);

  EXPECT_FALSE(self_aware_inference(config, d, 0.5).accepted);
  EXPECT_TRUE(self_aware_inference(config, d, 0.49).accepted);

  config.detection_thresholds.clear();
  EXPECT_THROW(self_aware_inference(config, d), Error);
}

TEST(Inference, IdentityCalibratorAboveThresholdIsPassThrough) {
  ClassUniverse u(2);
  const std::vector<Detection> d{det(1, 1, 0.9, unit_ref()), det(1, 2, 0.7, unit_ref())};
  const auto r = self_aware_inference(simple_config(u, 1.0, 0.1), d);
  EXPECT_EQ(r.detections, d);
}

TEST(Idq, PerfectAndAllRejected) {
  ClassUniverse u(1);
  GroundTruthSet g(u, test::id_images({1, 2}), {gt(1, 1, unit_ref()), gt(2, 1, unit_ref())});
  DetectionSet d(u, {det(1, 1, 1.0, unit_ref()), det(2, 1, 1.0, unit_ref())});
  const auto accepted = run_inference(simple_config(u, 0.5, 0.0), g, d);
  const auto q = idq(accepted, g, 0.1);
  EXPECT_EQ(q.idq, 1.0);
  EXPECT_EQ(q.num_accepted, 2u);

  const auto rejected = run_inference(simple_config(u, 0.0, 0.0), g, d);
  const auto r = idq(rejected, g, 0.1);
  EXPECT_EQ(r.lrp, 1.0);
  EXPECT_EQ(r.idq, 0.0);
}

TEST(IdqT, SeverityFiveRejectionsLeaveThePool) {
  ClassUniverse u(1);
  std::vector<ImageRecord> images{{1, SplitTag::Corrupt, 1, {}, {}},
                                  {3, SplitTag::Corrupt, 3, {}, {}},
                                  {5, SplitTag::Corrupt, 5, {}, {}}};
  GroundTruthSet g(u, images,
                   {gt(1, 1, unit_ref()), gt(3, 1, unit_ref()), gt(5, 1, unit_ref()),
                    gt(5, 1, {20, 0, 30, 10})});
  DetectionSet d(u, {det(1, 1, 1.0, unit_ref()), det(3, 1, 1.0, unit_ref())});
  // Image 5 has no detections, so the sentinel rejects it.
  const auto outputs = run_inference(simple_config(u, 0.5, 0.0), g, d);
  const auto q = idq_t(outputs, g, 0.1);
  EXPECT_EQ(q.num_images, 2u);
  EXPECT_EQ(q.idq, 1.0);
}

TEST(IdqT, RejectedSeverityOneCountsAsMisses) {
  ClassUniverse u(1);
  std::vector<ImageRecord> images{{1, SplitTag::Corrupt, 1, {}, {}}, {2, SplitTag::Corrupt, 1, {}, {}}};
  GroundTruthSet g(u, images,
                   {gt(1, 1, unit_ref()), gt(2, 1, unit_ref()), gt(2, 1, {20, 0, 30, 10}),
                    gt(2, 1, {40, 0, 50, 10})});
  DetectionSet d(u, {det(1, 1, 1.0, unit_ref())});
  const auto outputs = run_inference(simple_config(u, 0.5, 0.0), g, d);
  const auto q = idq_t(outputs, g, 0.1);
  EXPECT_EQ(q.lrp_detail.per_class.at(1).num_fn, 3u);
  EXPECT_NEAR(q.lrp, 0.75, 1e-15);

  std::vector<ImageRecord> no_severity{{1, SplitTag::Corrupt, 1, {}, {}}};
  GroundTruthSet g2(u, no_severity, {});
  ImageOutputs fake{{1, {}}};
  EXPECT_NO_THROW(idq_t(fake, g2, 0.1));
  EXPECT_THROW(idq_t(ImageOutputs{}, g2, 0.1), Error);
}

TEST(EvaluateSaod, OracleBundleScoresOne) {
  const auto b = oracle_bundle();
  const auto dets = test_split_dets(b);
  const auto report = evaluate_saod(simple_config(b.ground_truths.universe(), 0.5, 0.0),
                                    b.ground_truths, dets, 0.1);
  EXPECT_EQ(report.ba, 1.0);
  EXPECT_EQ(report.idq, 1.0);
  EXPECT_EQ(report.idq_t, 1.0);
  EXPECT_EQ(report.daq, 1.0);
  EXPECT_EQ(report.acceptance.at("OOD").accepted, 0u);
  EXPECT_EQ(report.acceptance.at("CORRUPT_5").images, 5u);
}

TEST(EvaluateSaod, AcceptingEverythingScoresZero) {
  const auto b = oracle_bundle();
  const auto report = evaluate_saod(simple_config(b.ground_truths.universe(), kInf, 0.0),
                                    b.ground_truths, test_split_dets(b), 0.1);
  EXPECT_EQ(report.tnr, 0.0);
  EXPECT_EQ(report.ba, 0.0);
  EXPECT_EQ(report.daq, 0.0);
}

TEST(EvaluateSaod, SplitErrors) {
  const auto b = oracle_bundle();
  const auto config = simple_config(b.ground_truths.universe(), 0.5, 0.0);
  try {
    evaluate_saod(config, b.ground_truths, b.detections, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SplitOverlap);
  }
  const auto no_ood = b.ground_truths.filter_images(
      [](const ImageRecord& r) { return r.split != SplitTag::OutOfDistribution; });
  try {
    evaluate_saod(config, no_ood, test_split_dets(b), 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptySplit);
  }
  EXPECT_THROW(require_split(test_split_dets(b), b.ground_truths, SplitTag::InDistribution), Error);
}

TEST(EvaluateSaod, UncertaintyOverride) {
  const auto b = oracle_bundle();
  std::map<ImageId, double> flipped;
  for (const auto& im : b.ground_truths.images()) {
    flipped[im.image_id] = im.split == SplitTag::OutOfDistribution ? 0.0 : 1.0;
  }
  const auto report = evaluate_saod(simple_config(b.ground_truths.universe(), 0.5, 0.0),
                                    b.ground_truths, test_split_dets(b), 0.1, 25, &flipped);
  EXPECT_EQ(report.tpr, 0.0);
  EXPECT_EQ(report.tnr, 0.0);
  std::map<ImageId, double> partial{{1, 0.0}};
  EXPECT_THROW(evaluate_saod(simple_config(b.ground_truths.universe(), 0.5, 0.0), b.ground_truths,
                             test_split_dets(b), 0.1, 25, &partial),
               Error);
}

TEST(Report, JsonAndTable) {
  SaodReport r;
  r.daq = 0.397;
  r.ba = 0.877;
  r.acceptance["ID"] = {10, 9};
  r.per_class[1].lrp_id = 0.5;
  const auto j = r.to_json();
  EXPECT_EQ(j.at("daq").get<double>(), 0.397);
  EXPECT_EQ(j.at("acceptance").at("ID").at("accepted").get<int>(), 9);
  const std::string table = r.to_table();
  EXPECT_NE(table.find("DAQ"), std::string::npos);
  EXPECT_NE(table.find("39.70"), std::string::npos);
  EXPECT_NE(table.find("87.70"), std::string::npos);
}

TEST(Config, JsonRoundTripKeepsInfinity) {
  ClassUniverse u(2);
  auto c = simple_config(u, 0.37, 0.2);
  c.detection_thresholds[2] = kInf;
  c.aggregation = AggregationStrategy::parse("mean");
  const auto back = SelfAwareConfig::from_json(c.to_json());
  EXPECT_EQ(back, c);
  EXPECT_TRUE(std::isinf(back.detection_thresholds.at(2)));
}

TEST(MakeSelfAware, SeparablePseudoSetsGiveFullBalancedAccuracy) {
  const auto b = oracle_bundle();
  const auto val = b.ground_truths.filter_images(
      [](const ImageRecord& r) { return r.split == SplitTag::Validation; });
  const auto val_dets = b.detections.filter([&](const Detection& d) { return val.has_image(d.image_id); });
  const auto fit = make_self_aware(val, val_dets, b.pseudo_ood_detections);
  EXPECT_EQ(fit.pseudo_stats.ba, 1.0);
  EXPECT_EQ(fit.num_positive_images, 10u);
  for (const auto& [c, t] : fit.config.detection_thresholds) EXPECT_EQ(t, 1.0) << c;
  const auto report = evaluate_saod(fit.config, b.ground_truths, test_split_dets(b), 0.1);
  EXPECT_EQ(report.daq, 1.0);
}

TEST(MakeSelfAware, PseudoOodBeatsTprBaseline) {
  testkit::SyntheticSpec spec;
  spec.seed = 8;
  spec.num_images = 0;
  spec.num_val_images = 200;
  spec.ood_uncertainty_shift = 0.3;
  const auto b = testkit::generate(spec);
  MakeSelfAwareOptions pseudo;
  MakeSelfAwareOptions tpr;
  tpr.threshold_method = ImageThresholdMethod::TprAt95;
  const auto a = make_self_aware(b.ground_truths, b.detections, b.pseudo_ood_detections, pseudo);
  const auto t = make_self_aware(b.ground_truths, b.detections, b.pseudo_ood_detections, tpr);
  EXPECT_GE(a.pseudo_stats.ba, t.pseudo_stats.ba);
  EXPECT_NEAR(t.pseudo_stats.tpr, 0.95, 0.01);
}

TEST(MakeSelfAware, ClassWithoutPairsFallsBackToIdentity) {
  ClassUniverse u(2);
  std::vector<ImageRecord> images{{1, SplitTag::Validation, std::nullopt, {}, {}}};
  GroundTruthSet g(u, images, {gt(1, 1, unit_ref())});
  DetectionSet d(u, {det(1, 1, 0.8, unit_ref())});
  const auto fit = make_self_aware(g, d, DetectionSet(u, {}));
  EXPECT_TRUE(std::holds_alternative<IdentityMap>(fit.config.calibrator.classes().at(2)));
  EXPECT_TRUE(fit.config.detection_thresholds.contains(2));
  try {
    make_self_aware(GroundTruthSet(u, images, {}), d, DetectionSet(u, {}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptySplit);
  }
}
