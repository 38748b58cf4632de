#include <gtest/gtest.h>

#include <cmath>

#include "ovlab/error.hpp"
#include "ovlab/loss_decomp.hpp"
#include "ovlab/rng.hpp"

namespace ovlab {
namespace {

ProbVector one_hot_vec(std::size_t c, std::size_t k) {
  ProbVector v(c, 0.0);
  v[k] = 1.0;
  return v;
}

ProbVector random_simplex(Rng& rng, std::size_t c) {
  ProbVector v(c);
  double s = 0.0;
  for (double& x : v) {
    x = rng.exponential();
    s += x;
  }
  for (double& x : v) x /= s;
  return v;
}

EnsembleOutputs random_ensemble(Rng& rng, std::size_t k, std::size_t c) {
  EnsembleOutputs e;
  for (std::size_t j = 0; j < k; ++j) e.outputs.push_back(random_simplex(rng, c));
  return e;
}

// Ensemble whose model j predicts class preds[j] (with a soft margin).
EnsembleOutputs voting(std::initializer_list<std::size_t> preds, std::size_t c) {
  EnsembleOutputs e;
  for (std::size_t p : preds) {
    ProbVector v(c, 0.1 / static_cast<double>(c - 1));
    v[p] = 0.9;
    e.outputs.push_back(v);
  }
  return e;
}

TEST(Hardmax, PicksMaximumLowestIndexOnTies) {
  EXPECT_EQ(hardmax(std::vector<double>{0.2, 0.5, 0.3}), (std::vector<double>{0, 1, 0}));
  EXPECT_EQ(hardmax(std::vector<double>{0.5, 0.5}), (std::vector<double>{1, 0}));
  EXPECT_EQ(hardmax(std::vector<double>{0, 0, 1}), (std::vector<double>{0, 0, 1}));
  EXPECT_THROW(hardmax(std::vector<double>{}), InvalidArgument);
}

TEST(EvalLoss, HandValues) {
  const std::vector<double> t{1, 0};
  EXPECT_NEAR(eval_loss(LossKind::kMse, t, std::vector<double>{0.6, 0.4}), 0.32, 1e-15);
  EXPECT_NEAR(eval_loss(LossKind::kCe, t, std::vector<double>{0.5, 0.5}), std::log(2.0), 1e-15);
  EXPECT_EQ(eval_loss(LossKind::kZo, t, std::vector<double>{0.7, 0.3}), 0.0);
  EXPECT_EQ(eval_loss(LossKind::kZo, t, std::vector<double>{0.3, 0.7}), 1.0);
  EXPECT_THROW(eval_loss(LossKind::kMse, t, std::vector<double>{1, 0, 0}), DimensionError);
}

TEST(EvalLoss, CeClampsZeroProbabilities) {
  const double v = eval_loss(LossKind::kCe, std::vector<double>{1, 0}, std::vector<double>{0, 1});
  EXPECT_NEAR(v, -std::log(kProbFloor), 1e-9);
}

TEST(ExpectedOutput, PerLossCenters) {
  const EnsembleOutputs e{{{0.8, 0.2}, {0.2, 0.8}}};
  const auto mse = expected_output(LossKind::kMse, e);
  const auto ce = expected_output(LossKind::kCe, e);
  EXPECT_NEAR(mse[0], 0.5, 1e-15);
  EXPECT_NEAR(mse[1], 0.5, 1e-15);
  EXPECT_NEAR(ce[0], 0.5, 1e-15);
  EXPECT_NEAR(ce[1], 0.5, 1e-15);
  EXPECT_EQ(expected_output(LossKind::kZo, voting({0, 0, 1}, 3)), one_hot_vec(3, 0));
}

TEST(ExpectedOutput, CeIsNormalizedGeometricMean) {
  const EnsembleOutputs e{{{0.7, 0.2, 0.1}, {0.3, 0.3, 0.4}}};
  const auto ce = expected_output(LossKind::kCe, e);
  const double g0 = std::sqrt(0.7 * 0.3), g1 = std::sqrt(0.2 * 0.3), g2 = std::sqrt(0.1 * 0.4);
  const double z = g0 + g1 + g2;
  EXPECT_NEAR(ce[0], g0 / z, 1e-15);
  EXPECT_NEAR(ce[1], g1 / z, 1e-15);
  EXPECT_NEAR(ce[2], g2 / z, 1e-15);
}

TEST(ExpectedOutput, RejectsEmptyOrRaggedEnsembles) {
  EXPECT_THROW(expected_output(LossKind::kMse, EnsembleOutputs{}), InvalidArgument);
  EXPECT_THROW(expected_output(LossKind::kMse, EnsembleOutputs{{{0.5, 0.5}, {1.0}}}),
               DimensionError);
}

TEST(ExpectedOutput, ZoDependsOnlyOnHardmaxedPredictions) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t c = 2 + rng.below(4);
    EnsembleOutputs e = random_ensemble(rng, 1 + rng.below(7), c);
    EnsembleOutputs sharpened = e;
    for (auto& y : sharpened.outputs) {
      // Widen every gap while keeping the argmax.
      const std::size_t top = argmax(y);
      for (std::size_t k = 0; k < c; ++k) y[k] = k == top ? 1.0 - 1e-3 : 1e-3 / static_cast<double>(c - 1);
    }
    EXPECT_EQ(expected_output(LossKind::kZo, e), expected_output(LossKind::kZo, sharpened));
  }
}

TEST(Decompose, ZoHandExampleNegativeBeta) {
  const DecompResult r = decompose(LossKind::kZo, one_hot_vec(3, 1), voting({0, 0, 1}, 3));
  EXPECT_NEAR(r.expected_loss, 2.0 / 3.0, 1e-15);
  EXPECT_EQ(r.bias, 1.0);
  EXPECT_NEAR(r.variance, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(r.beta, -1.0);
  EXPECT_NEAR(r.bias + r.beta * r.variance, r.expected_loss, 1e-15);
}

TEST(Decompose, ZoUnanimousCorrect) {
  const DecompResult r = decompose(LossKind::kZo, one_hot_vec(3, 2), voting({2, 2, 2, 2}, 3));
  EXPECT_EQ(r.expected_loss, 0.0);
  EXPECT_EQ(r.bias, 0.0);
  EXPECT_EQ(r.variance, 0.0);
  EXPECT_EQ(r.beta, 1.0);
}

TEST(Decompose, ZoWrongVoteWithoutDissentHasZeroBeta) {
  const DecompResult r = decompose(LossKind::kZo, one_hot_vec(2, 0), voting({1, 1}, 2));
  EXPECT_EQ(r.beta, 0.0);
  EXPECT_EQ(r.variance, 0.0);
  EXPECT_EQ(r.expected_loss, 1.0);
  EXPECT_EQ(r.bias, 1.0);
}

TEST(Decompose, SingleModelMse) {
  const DecompResult r =
      decompose(LossKind::kMse, std::vector<double>{0, 1, 0}, EnsembleOutputs{{{0.2, 0.5, 0.3}}});
  EXPECT_EQ(r.variance, 0.0);
  EXPECT_EQ(r.bias, r.expected_loss);
  EXPECT_EQ(r.beta, 1.0);
}

TEST(Decompose, RequiresOneHotTargetsForCeAndZo) {
  const EnsembleOutputs e{{{0.5, 0.5}}};
  EXPECT_THROW(decompose(LossKind::kZo, std::vector<double>{0.5, 0.5}, e), InvalidArgument);
  EXPECT_THROW(decompose(LossKind::kCe, std::vector<double>{0.5, 0.5}, e), InvalidArgument);
  EXPECT_NO_THROW(decompose(LossKind::kMse, std::vector<double>{0.5, 0.5}, e));
  EXPECT_THROW(decompose(LossKind::kMse, std::vector<double>{1, 0, 0}, e), DimensionError);
}

TEST(Decompose, CeBiasIsMinusLogOfTrueClassCenter) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t c = 2 + rng.below(4);
    const std::size_t label = rng.below(c);
    const EnsembleOutputs e = random_ensemble(rng, 1 + rng.below(7), c);
    const DecompResult r = decompose(LossKind::kCe, one_hot_vec(c, label), e);
    EXPECT_NEAR(r.bias, -std::log(expected_output(LossKind::kCe, e)[label]), 1e-12);
  }
}

// Decomposition identity over random ensembles, all three losses.
TEST(DecomposeProperty, IdentityHolds) {
  Rng rng(2024);
  for (LossKind kind : {LossKind::kMse, LossKind::kCe, LossKind::kZo}) {
    const double tol = kind == LossKind::kZo ? 1e-12 : 1e-9;
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t c = 2 + rng.below(4);
      const std::size_t k = 1 + rng.below(7);
      const EnsembleOutputs e = random_ensemble(rng, k, c);
      const DecompResult r = decompose(kind, one_hot_vec(c, rng.below(c)), e);
      ASSERT_NEAR(r.expected_loss, r.bias + r.beta * r.variance, tol)
          << to_string(kind) << " trial " << trial;
      ASSERT_GE(r.variance, 0.0);
      if (kind == LossKind::kZo) {
        ASSERT_GE(r.beta, -1.0);
        ASSERT_LE(r.beta, 1.0);
        for (double v : {r.expected_loss, r.bias, r.variance}) {
          ASSERT_GE(v, 0.0);
          ASSERT_LE(v, 1.0);
        }
        // Variance is the dissent fraction.
        const std::size_t vote = argmax(expected_output(kind, e));
        std::size_t dissent = 0;
        for (const auto& y : e.outputs) dissent += argmax(y) != vote;
        ASSERT_EQ(r.variance, static_cast<double>(dissent) / static_cast<double>(k));
      }
    }
  }
}

TEST(EnsembleBiasVariance, AveragesPerSampleTerms) {
  const std::vector<LabeledEnsemble> samples{
      {one_hot_vec(3, 2), voting({2, 2, 2}, 3)},
      {one_hot_vec(3, 1), voting({0, 0, 1}, 3)},
  };
  const EnsembleTerms terms = ensemble_bias_variance(LossKind::kZo, samples);
  EXPECT_DOUBLE_EQ(terms.bias, 0.5);
  EXPECT_DOUBLE_EQ(terms.variance, 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(terms.expected_loss, 1.0 / 3.0);
  EXPECT_EQ(terms.samples, 2u);

  const EnsembleTerms one = ensemble_bias_variance(LossKind::kZo, std::span(samples).subspan(1));
  const DecompResult direct = decompose(LossKind::kZo, samples[1].target, samples[1].ensemble);
  EXPECT_EQ(one.bias, direct.bias);
  EXPECT_EQ(one.variance, direct.variance);
}

TEST(EnsembleBiasVariance, IdenticalModelsHaveZeroVariance) {
  Rng rng(8);
  for (LossKind kind : {LossKind::kMse, LossKind::kCe, LossKind::kZo}) {
    std::vector<LabeledEnsemble> samples;
    for (int i = 0; i < 20; ++i) {
      const ProbVector y = random_simplex(rng, 4);
      samples.push_back({one_hot_vec(4, rng.below(4)), EnsembleOutputs{{y, y, y}}});
    }
    EXPECT_NEAR(ensemble_bias_variance(kind, samples).variance, 0.0, 1e-15) << to_string(kind);
  }
}

TEST(EnsembleBiasVariance, ErrorPaths) {
  EXPECT_THROW(ensemble_bias_variance(LossKind::kMse, {}), InvalidArgument);
  const std::vector<LabeledEnsemble> ragged{
      {one_hot_vec(2, 0), EnsembleOutputs{{{0.5, 0.5}}}},
      {one_hot_vec(2, 0), EnsembleOutputs{{{0.5, 0.5}, {0.5, 0.5}}}},
  };
  EXPECT_THROW(ensemble_bias_variance(LossKind::kMse, ragged), DimensionError);
}

TEST(ArgminCheck, HandCases) {
  EXPECT_TRUE(argmin_check(LossKind::kZo, voting({0, 0, 1}, 3), 1, 0));
  EXPECT_TRUE(argmin_check(LossKind::kMse, EnsembleOutputs{{{0.3, 0.7}}}, 100, 1));
  EXPECT_TRUE(argmin_check(LossKind::kCe, EnsembleOutputs{{{0.8, 0.2}, {0.2, 0.8}}}, 1000, 2));
}

TEST(ArgminCheck, ZoCandidateVariancesByEnumeration) {
  // Predictions (0, 0, 1): candidate class 0 -> 1/3, class 1 -> 2/3, class 2 -> 1.
  const EnsembleOutputs e = voting({0, 0, 1}, 3);
  const double expected[] = {1.0 / 3.0, 2.0 / 3.0, 1.0};
  for (std::size_t cls = 0; cls < 3; ++cls) {
    double s = 0.0;
    for (const auto& y : e.outputs) s += eval_loss(LossKind::kZo, one_hot_vec(3, cls), y);
    EXPECT_NEAR(s / 3.0, expected[cls], 1e-15);
  }
}

TEST(ArgminCheckProperty, HoldsOnRandomEnsembles) {
  Rng rng(99);
  for (LossKind kind : {LossKind::kMse, LossKind::kCe, LossKind::kZo}) {
    for (int trial = 0; trial < 50; ++trial) {
      const EnsembleOutputs e = random_ensemble(rng, 1 + rng.below(7), 2 + rng.below(4));
      EXPECT_TRUE(argmin_check(kind, e, 200, rng.next_u64())) << to_string(kind);
    }
  }
}

TEST(ArgminCheck, ShiftedCenterHasLargerVariance) {
  const EnsembleOutputs e{{{0.9, 0.1}, {0.7, 0.3}}};
  const auto center = expected_output(LossKind::kMse, e);
  const std::vector<double> shifted{center[0] - 0.2, center[1] + 0.2};
  double at_center = 0.0, at_shifted = 0.0;
  for (const auto& y : e.outputs) {
    at_center += eval_loss(LossKind::kMse, center, y);
    at_shifted += eval_loss(LossKind::kMse, shifted, y);
  }
  EXPECT_LT(at_center, at_shifted);
  EXPECT_THROW(argmin_check(LossKind::kMse, e, 0, 1), InvalidArgument);
}

TEST(LossKind, ParsesNames) {
  EXPECT_EQ(parse_loss_kind("mse"), LossKind::kMse);
  EXPECT_EQ(parse_loss_kind("ce"), LossKind::kCe);
  EXPECT_EQ(parse_loss_kind("zo"), LossKind::kZo);
  EXPECT_THROW(parse_loss_kind("hinge"), InvalidArgument);
}

}  // namespace
}  // namespace ovlab
