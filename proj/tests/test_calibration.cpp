#include <gtest/gtest.h>

#include "helpers.hpp"
#include "saod/calibration.hpp"
#include "saod/testkit.hpp"

using namespace saod;
using saod::test::det;
using saod::test::gt;
using saod::test::strip;
using saod::test::unit_ref;

TEST(Bins, HalfOpenWithClosedTop) {
  EXPECT_EQ(bin_index(0.0, 25), 0u);
  EXPECT_EQ(bin_index(0.039, 25), 0u);
  EXPECT_EQ(bin_index(0.5, 25), 12u);
  EXPECT_EQ(bin_index(0.999, 25), 24u);
  EXPECT_EQ(bin_index(1.0, 25), 24u);
  EXPECT_EQ(bin_index(1.0, 1), 0u);
}

TEST(LaeceClass, WorkedExamples) {
  const std::vector<CalibrationSample> two_tp{{0.81, true, 0.7}, {0.83, true, 0.9}};
  EXPECT_NEAR(laece_class(two_tp), 0.02, 1e-12);
  const std::vector<CalibrationSample> one_fp{{0.6, false, 0.0}};
  EXPECT_NEAR(laece_class(one_fp), 0.6, 1e-15);
  // Scores equal to precision x mean IoU in every bin.
  const std::vector<CalibrationSample> exact{{0.45, true, 0.9}, {0.45, false, 0.0}, {0.7, true, 0.7}};
  EXPECT_NEAR(laece_class(exact), 0.0, 1e-15);
  try {
    laece_class(std::vector<CalibrationSample>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoDetections);
  }
}

TEST(LaeceClass, BinStatistics) {
  const std::vector<CalibrationSample> s{{0.81, true, 0.7}, {0.82, false, 0.0}, {0.1, true, 0.5}};
  const auto b = bin_statistics(s);
  EXPECT_EQ(b.count[20], 2u);
  EXPECT_EQ(b.tp_count[20], 1u);
  EXPECT_NEAR(b.performance(20), 0.35, 1e-15);
  EXPECT_TRUE(b.empty(5));
}

TEST(Laece, ClassMeanAndEmptyClasses) {
  ClassUniverse u(3);
  GroundTruthSet g(u, test::id_images({1}), {gt(1, 1, unit_ref()), gt(1, 1, {20, 0, 30, 10})});
  DetectionSet d(u, {det(1, 1, 0.81, strip(7)), det(1, 1, 0.83, {20, 0, 29, 10}),
                     det(1, 2, 0.6, {50, 50, 60, 60})});
  const auto r = laece(d, g, 0.1);
  EXPECT_EQ(r.per_class.size(), 2u);
  EXPECT_NEAR(r.per_class.at(1), 0.02, 1e-12);
  EXPECT_NEAR(r.laece, 0.31, 1e-12);
  EXPECT_EQ(laece(DetectionSet(u, {}), g, 0.1).laece, 0.0);
}

TEST(Targets, IouForTruePositivesZeroOtherwise) {
  const std::vector<GroundTruth> g{gt(1, 1, unit_ref())};
  const std::vector<Detection> d{det(1, 1, 0.9, strip(8)), det(1, 1, 0.5, {30, 30, 40, 40}),
                                 det(1, 1, 0.4, strip(9))};
  const auto t = calibration_targets(match_class(d, g, 0.1));
  EXPECT_NEAR(t[0], 0.8, 1e-15);
  EXPECT_EQ(t[1], 0.0);
  EXPECT_EQ(t[2], 0.0);
  const std::vector<Detection> edge{det(1, 1, 0.9, strip(5.0001))};
  EXPECT_NEAR(calibration_targets(match_class(edge, g, 0.5))[0], 0.50001, 1e-12);
}

TEST(Fit, LinearRegressionThroughTwoPoints) {
  const std::vector<CalibrationPair> p{{0.9, 0.5}, {0.8, 0.4}};
  const auto lr = fit_linear_regression(p);
  EXPECT_NEAR(evaluate(lr, 0.9), 0.5, 1e-12);
  EXPECT_NEAR(evaluate(lr, 0.8), 0.4, 1e-12);
  const std::vector<CalibrationPair> flat{{0.5, 0.2}, {0.5, 0.6}};
  const auto c = fit_linear_regression(flat);
  EXPECT_EQ(c.slope, 0.0);
  EXPECT_NEAR(c.intercept, 0.4, 1e-15);
}

TEST(Fit, DiagonalDataIsReproduced) {
  std::vector<CalibrationPair> p;
  for (int i = 0; i < 25; ++i) {
    const double s = (i + 0.5) / 25.0;
    p.push_back({s, s});
  }
  const auto lr = fit_linear_regression(p);
  EXPECT_NEAR(lr.slope, 1.0, 1e-12);
  EXPECT_NEAR(lr.intercept, 0.0, 1e-12);
  const auto hb = fit_histogram_binning(p);
  const auto ir = fit_isotonic_regression(p);
  for (const auto& [s, t] : p) {
    EXPECT_NEAR(evaluate(hb, s), t, 1e-15);
    EXPECT_NEAR(evaluate(ir, s), t, 1e-15);
  }
}

TEST(Fit, IsotonicPoolsViolators) {
  const std::vector<CalibrationPair> p{{0.1, 0.3}, {0.2, 0.1}, {0.3, 0.5}, {0.3, 0.7}};
  const auto ir = fit_isotonic_regression(p);
  EXPECT_NEAR(evaluate(ir, 0.1), 0.2, 1e-15);
  EXPECT_NEAR(evaluate(ir, 0.2), 0.2, 1e-15);
  EXPECT_NEAR(evaluate(ir, 0.3), 0.6, 1e-15);
  EXPECT_NEAR(evaluate(ir, 0.25), 0.4, 1e-12);
  EXPECT_NEAR(evaluate(ir, 0.0), 0.2, 1e-15);
  EXPECT_NEAR(evaluate(ir, 1.0), 0.6, 1e-15);
}

TEST(Fit, HistogramEmptyBinsPassThrough) {
  const std::vector<CalibrationPair> p{{0.81, 0.2}, {0.83, 0.4}};
  const auto hb = fit_histogram_binning(p);
  EXPECT_NEAR(evaluate(hb, 0.82), 0.3, 1e-15);
  EXPECT_EQ(evaluate(hb, 0.1), 0.1);
}

TEST(Fit, IsotonicNoWorseThanHistogramOnTrainingPairs) {
  testkit::CounterRng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<CalibrationPair> p;
    for (int i = 0; i < 200; ++i) {
      const double s = rng.uniform();
      p.push_back({s, rng.bernoulli(s) ? rng.uniform(0.5, 1.0) : 0.0});
    }
    const auto hb = fit_histogram_binning(p);
    const auto ir = fit_isotonic_regression(p);
    std::vector<CalibrationSample> shb, sir;
    for (const auto& [s, t] : p) {
      // A target of 0 is an FP; otherwise a TP with IoU = target.
      shb.push_back({evaluate(hb, s), t > 0.0, t});
      sir.push_back({evaluate(ir, s), t > 0.0, t});
    }
    EXPECT_LE(laece_class(sir), laece_class(shb) + 1e-9);
  }
}

TEST(Model, ApplyIdentityClampAndJson) {
  ClassUniverse u(2);
  DetectionSet d(u, {det(1, 1, 0.8, unit_ref()), det(1, 2, 0.1, unit_ref())});
  EXPECT_EQ(apply_calibrator(CalibratorModel::identity(u), d), d);

  CalibratorModel m(CalibratorKind::LinearRegression, 25,
                    {{1, LinearMap{0.5, 0.0}}, {2, LinearMap{1.0, -0.2}}});
  const auto out = apply_calibrator(m, d);
  EXPECT_NEAR(out[0].score, 0.4, 1e-15);
  EXPECT_EQ(out[1].score, 0.0);
  EXPECT_EQ(out[0].box, d[0].box);

  try {
    m.calibrate(3, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingClassModel);
  }
  EXPECT_EQ(CalibratorModel::from_json(m.to_json()), m);
}

TEST(Model, UnfittedClassesFallBackToIdentity) {
  ClassUniverse u(3);
  CalibrationPairs pairs{{1, {{0.9, 0.5}, {0.8, 0.4}}}};
  for (auto kind : {CalibratorKind::HistogramBinning, CalibratorKind::LinearRegression,
                    CalibratorKind::IsotonicRegression}) {
    const auto m = fit_calibrator(kind, pairs, u);
    EXPECT_TRUE(m.covers(3));
    EXPECT_TRUE(std::holds_alternative<IdentityMap>(m.classes().at(2)));
    EXPECT_EQ(m.calibrate(3, 0.37), 0.37);
    EXPECT_EQ(CalibratorModel::from_json(m.to_json()), m);
  }
  EXPECT_THROW(calibrator_kind_from_string("Platt"), Error);
}

TEST(Reliability, CalibratedBarsSitOnTheDiagonal) {
  testkit::SyntheticSpec spec;
  spec.seed = 3;
  spec.fp_rate = 0.0;
  const auto b = testkit::generate(spec);
  const auto diagram = reliability_diagram(b.detections, b.ground_truths, 0.1);
  std::size_t occupied = 0;
  for (const auto& bin : diagram.bins) {
    if (bin.num_classes == 0) continue;
    ++occupied;
    EXPECT_NEAR(bin.mean_confidence, bin.mean_performance, 1e-12);
  }
  EXPECT_GT(occupied, 5u);
  EXPECT_EQ(diagram.to_csv().substr(0, 41), "bin_low,bin_high,mean_conf,mean_perf,n_cl");
}

TEST(Reliability, OverconfidentBarsSitBelow) {
  testkit::SyntheticSpec spec;
  spec.seed = 3;
  spec.confidence = testkit::ConfidenceModel::Overconfident;
  const auto b = testkit::generate(spec);
  for (const auto& bin : reliability_diagram(b.detections, b.ground_truths, 0.1).bins) {
    if (bin.num_classes > 0) {
      EXPECT_LT(bin.mean_performance, bin.mean_confidence);
    }
  }
}

TEST(Reliability, SingleBinMatchesLaeceInternals) {
  ClassUniverse u(1);
  GroundTruthSet g(u, test::id_images({1}), {gt(1, 1, unit_ref())});
  DetectionSet d(u, {det(1, 1, 0.81, strip(7)), det(1, 1, 0.82, {40, 40, 50, 50})});
  const auto diagram = reliability_diagram(d, g, 0.1);
  const auto m = match_class(d.detections(), g.annotations(), 0.1);
  const auto stats = bin_statistics(calibration_samples(d.detections(), m));
  EXPECT_NEAR(diagram.bins[20].mean_performance, stats.performance(20), 1e-15);
  EXPECT_NEAR(diagram.bins[20].mean_confidence, 0.815, 1e-15);
}
