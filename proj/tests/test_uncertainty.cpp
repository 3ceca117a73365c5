#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "saod/testkit.hpp"
#include "saod/uncertainty.hpp"

using namespace saod;

TEST(DetectionUncertainty, OneMinusScore) {
  EXPECT_EQ(uncertainty_score(1.0), 0.0);
  EXPECT_NEAR(uncertainty_score(0.3), 0.7, 1e-15);
  EXPECT_EQ(uncertainty_score(0.5), 0.5);
}

TEST(Entropy, ReferenceValues) {
  const std::vector<double> uniform2{0.5, 0.5};
  EXPECT_NEAR(entropy_from_probabilities(uniform2), std::log(2.0), 1e-15);
  const std::vector<double> onehot{0.0, 1.0, 0.0};
  EXPECT_EQ(entropy_from_probabilities(onehot), 0.0);
  const std::vector<double> zeros{0.0, 0.0, 0.0};
  EXPECT_NEAR(entropy_from_logits(zeros, EntropyMode::Softmax, 3), std::log(3.0), 1e-15);
  EXPECT_NEAR(entropy_from_logits(zeros, EntropyMode::Softmax, 2), std::log(3.0), 1e-15);
  EXPECT_NEAR(entropy_from_logits(zeros, EntropyMode::SigmoidAsCategorical, 2), std::log(2.0), 1e-15);
  const std::vector<double> huge{1000.0, 0.0};
  EXPECT_NEAR(entropy_from_logits(huge, EntropyMode::Softmax, 2), 0.0, 1e-12);
  const std::vector<double> bad{0.0, NAN};
  try {
    entropy_from_logits(bad, EntropyMode::Softmax, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteLogit);
  }
}

TEST(DempsterShafer, ReferenceValues) {
  const std::vector<double> zeros{0.0, 0.0, 0.0};
  EXPECT_NEAR(dempster_shafer(zeros), 0.5, 1e-15);
  const std::vector<double> ln2{std::log(2.0), std::log(2.0)};
  EXPECT_NEAR(dempster_shafer(ln2), 1.0 / 3.0, 1e-15);
  const std::vector<double> strong{50.0, 50.0};
  EXPECT_LT(dempster_shafer(strong), 1e-20);
}

TEST(LocUncertainty, ReferenceValues) {
  const std::array<double, 4> ones{1, 1, 1, 1};
  EXPECT_EQ(loc_uncertainty(ones, LocUncertaintyKind::Determinant), 1.0);
  EXPECT_EQ(loc_uncertainty(ones, LocUncertaintyKind::Trace), 4.0);
  const double h = 2.0 + 2.0 * std::log(2.0 * std::numbers::pi);
  EXPECT_NEAR(loc_uncertainty(ones, LocUncertaintyKind::GaussianEntropy), h, 1e-12);
  EXPECT_NEAR(h, 5.6757, 1e-4);
  const std::array<double, 4> twos{2, 2, 2, 2};
  EXPECT_EQ(loc_uncertainty(twos, LocUncertaintyKind::Determinant), 16.0);
  const std::array<double, 4> e2{std::exp(2.0), 1, 1, 1};
  EXPECT_NEAR(loc_uncertainty(e2, LocUncertaintyKind::GaussianEntropy), h + 1.0, 1e-12);
  const std::array<double, 4> bad{1, 0, 1, 1};
  EXPECT_THROW(loc_uncertainty(bad, LocUncertaintyKind::Trace), Error);
}

TEST(CombineClsLoc, Normalisation) {
  const NormalizationBounds cls{0.0, 2.0}, loc{1.0, 3.0};
  EXPECT_EQ(combine_cls_loc(0.0, 1.0, cls, loc), 0.0);
  EXPECT_EQ(combine_cls_loc(2.0, 1.0, cls, loc), 4.0);
  EXPECT_EQ(combine_cls_loc(1.0, 2.0, cls, loc), 2.5);
  try {
    combine_cls_loc(1.0, 1.0, {1.0, 1.0}, loc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateBounds);
  }
}

TEST(Aggregate, Strategies) {
  const std::vector<double> v{0.9, 0.1, 0.3, 0.2};
  EXPECT_NEAR(aggregate(v, AggregationStrategy::top(3)).value, 0.2, 1e-15);
  EXPECT_NEAR(aggregate(v, AggregationStrategy::parse("mean")).value, 0.375, 1e-15);
  EXPECT_NEAR(aggregate(v, AggregationStrategy::parse("sum")).value, 1.5, 1e-15);
  EXPECT_EQ(aggregate(v, AggregationStrategy::parse("min")).value, 0.1);
  const std::vector<double> one{0.4};
  EXPECT_EQ(aggregate(one, AggregationStrategy::top(3)).value, 0.4);
  const auto empty = aggregate(std::vector<double>{}, AggregationStrategy::top(3));
  EXPECT_EQ(empty.value, 1e12);
  EXPECT_TRUE(empty.sentinel);
  EXPECT_FALSE(aggregate(one, AggregationStrategy::top(3)).sentinel);
}

TEST(Aggregate, ParseRoundTrip) {
  for (const std::string s : {"sum", "mean", "min", "top_3", "top_10"}) {
    EXPECT_EQ(AggregationStrategy::parse(s).to_string(), s);
  }
  for (const std::string s : {"top_", "top_0", "median", "top_x"}) {
    try {
      AggregationStrategy::parse(s);
      ADD_FAILURE() << s;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    }
  }
}

TEST(Auroc, ReferenceValues) {
  const std::vector<double> id{0.1, 0.2}, ood{0.8, 0.9};
  EXPECT_EQ(auroc(id, ood), 1.0);
  EXPECT_EQ(auroc(id, id), 0.5);
  const std::vector<double> id2{0.1, 0.7}, ood2{0.5, 0.9};
  EXPECT_EQ(auroc(id2, ood2), 0.75);
  EXPECT_THROW(auroc(std::vector<double>{}, ood), Error);
}

TEST(Auroc, MatchesPairCounting) {
  testkit::CounterRng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> id, ood;
    for (std::uint64_t i = 0, n = rng.below(20) + 1; i < n; ++i) id.push_back(rng.below(6) / 5.0);
    for (std::uint64_t i = 0, n = rng.below(20) + 1; i < n; ++i) ood.push_back(rng.below(6) / 5.0);
    double wins = 0.0;
    for (double a : id) {
      for (double b : ood) wins += a < b ? 1.0 : (a == b ? 0.5 : 0.0);
    }
    EXPECT_NEAR(auroc(id, ood), wins / (id.size() * ood.size()), 1e-12);
  }
}

TEST(Thresholds, BalancedAccuracy) {
  const std::vector<double> id{0.1, 0.2, 0.3}, ood{0.7, 0.8};
  const auto s = select_threshold_ba(id, ood);
  EXPECT_EQ(s.ba, 1.0);
  EXPECT_GT(s.threshold, 0.3);
  EXPECT_LE(s.threshold, 0.7);
  const auto d = select_threshold_ba(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5});
  EXPECT_EQ(d.ba, 0.0);
  EXPECT_TRUE(d.degenerate);
  const auto st = ood_decision_stats(id, ood, 0.25);
  EXPECT_NEAR(st.tpr, 2.0 / 3.0, 1e-15);
  EXPECT_EQ(st.tnr, 1.0);
  EXPECT_NEAR(st.ba, 0.8, 1e-15);
}

TEST(Thresholds, AcceptanceIsStrict) {
  const std::vector<double> id{0.5}, ood{0.9};
  EXPECT_EQ(ood_decision_stats(id, ood, 0.5).tpr, 0.0);
}

TEST(Thresholds, TprTarget) {
  std::vector<double> v;
  for (int i = 20; i >= 1; --i) v.push_back(i / 20.0);
  const double t = threshold_at_tpr(v, 0.95);
  EXPECT_GT(t, 19 / 20.0);
  EXPECT_LT(t, 1.0);
  EXPECT_NEAR(ood_decision_stats(v, std::vector<double>{2.0}, t).tpr, 0.95, 1e-15);
  EXPECT_GT(threshold_at_tpr(v, 1.0), 1.0);
  EXPECT_EQ(ood_decision_stats(v, std::vector<double>{2.0}, threshold_at_tpr(v, 1.0)).tpr, 1.0);
}
