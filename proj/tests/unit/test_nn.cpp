#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ovlab/error.hpp"
#include "ovlab/nn.hpp"
#include "test_support.hpp"

namespace ovlab {
namespace {

using testing::oracle_forward;
using testing::random_batch;
using testing::random_model;
using testing::relative_error;

TEST(MlpSpec, ParameterCountFollowsLayout) {
  EXPECT_EQ(parameter_count(MlpSpec{{2, 3, 2}}), 2u * 3 + 3 + 3 * 2 + 2);
  EXPECT_EQ(init_model(MlpSpec{{2, 3, 2}}, 7).size(), 17u);
  const auto slices = layer_slices(MlpSpec{{2, 3, 2}});
  ASSERT_EQ(slices.size(), 2u);
  EXPECT_EQ(slices[0].weight_offset, 0u);
  EXPECT_EQ(slices[0].bias_offset, 6u);
  EXPECT_EQ(slices[1].weight_offset, 9u);
  EXPECT_EQ(slices[1].bias_offset, 15u);
}

TEST(MlpSpec, RejectsDegenerateSpecs) {
  EXPECT_THROW(init_model(MlpSpec{{2, 0, 2}}, 1), InvalidArgument);
  EXPECT_THROW(init_model(MlpSpec{{3}}, 1), InvalidArgument);
  EXPECT_THROW(Model(MlpSpec{{2, 2}}, std::vector<double>(5)), DimensionError);
}

TEST(InitModel, DeterministicInSeed) {
  const MlpSpec spec{{4, 10, 10, 3}};
  const Model a = init_model(spec, 42);
  const Model b = init_model(spec, 42);
  const Model c = init_model(spec, 43);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(InitModel, BiasesZeroWeightsScaledByFanIn) {
  const MlpSpec spec{{4, 10, 10, 3}};
  const Model m = init_model(spec, 5);
  for (const auto& s : layer_slices(spec)) {
    for (std::size_t o = 0; o < s.out; ++o) EXPECT_EQ(m.theta()[s.bias_offset + o], 0.0);
  }
  // Empirical weight variance of a wide layer should be near 2 / fan_in.
  const MlpSpec wide{{200, 400, 2}};
  const Model w = init_model(wide, 9);
  const auto s = layer_slices(wide)[0];
  double sq = 0.0;
  for (std::size_t k = 0; k < s.in * s.out; ++k) sq += w.theta()[k] * w.theta()[k];
  EXPECT_NEAR(sq / static_cast<double>(s.in * s.out), 2.0 / 200.0, 0.001);
}

TEST(ForwardLogits, IdentityLayer) {
  const Model m(MlpSpec{{2, 2}}, {1, 0, 0, 1, 0, 0});
  const Matrix logits = forward_logits(m, Matrix(1, 2, std::vector<double>{1.0, 2.0}));
  EXPECT_DOUBLE_EQ(logits(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(logits(0, 1), 2.0);
}

TEST(ForwardLogits, ZeroThetaGivesZeroLogits) {
  const MlpSpec spec{{3, 5, 4}};
  const Model m(spec, std::vector<double>(parameter_count(spec), 0.0));
  const Matrix logits = forward_logits(m, testing::random_matrix(6, 3, 1));
  for (double v : logits.data()) EXPECT_EQ(v, 0.0);
}

TEST(ForwardLogits, MatchesIndependentOracle) {
  const MlpSpec spec{{2, 4, 3}};
  const Model m = random_model(spec, 11);
  const Matrix x = testing::random_matrix(20, 2, 12);
  const Matrix logits = forward_logits(m, x);
  const std::vector<double> theta(m.theta().begin(), m.theta().end());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto expect =
        oracle_forward(spec.layer_sizes, theta, std::vector<double>(x.row(r).begin(), x.row(r).end()));
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(logits(r, k), expect[k], 1e-12);
  }
}

TEST(ForwardLogits, DimensionMismatchThrows) {
  const Model m = init_model(MlpSpec{{3, 2}}, 1);
  EXPECT_THROW(forward_logits(m, Matrix(1, 4)), DimensionError);
}

TEST(ForwardLogits, PositivelyHomogeneousInFinalLayer) {
  const MlpSpec spec{{3, 6, 6, 4}};
  const Model m = random_model(spec, 21);
  const Matrix x = testing::random_matrix(10, 3, 22);
  const Matrix base = forward_logits(m, x);
  const auto last = layer_slices(spec).back();
  for (double lambda : {0.25, 3.0, 17.5}) {
    std::vector<double> theta(m.theta().begin(), m.theta().end());
    for (std::size_t p = last.weight_offset; p < theta.size(); ++p) theta[p] *= lambda;
    const Matrix scaled = forward_logits(Model(spec, theta), x);
    for (std::size_t i = 0; i < base.data().size(); ++i) {
      EXPECT_NEAR(scaled.data()[i], lambda * base.data()[i], 1e-12 * (1 + std::abs(lambda * base.data()[i])));
    }
  }
}

TEST(Softmax, HandValues) {
  const Matrix p = softmax(Matrix(3, 2, std::vector<double>{0, 0, 1000, 0, std::log(1.0), std::log(3.0)}));
  EXPECT_DOUBLE_EQ(p(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(p(0, 1), 0.5);
  EXPECT_NEAR(p(1, 0), 1.0, 1e-15);
  EXPECT_NEAR(p(1, 1), 0.0, 1e-15);
  EXPECT_TRUE(std::isfinite(p(1, 1)));
  EXPECT_NEAR(p(2, 0), 0.25, 1e-15);
  EXPECT_NEAR(p(2, 1), 0.75, 1e-15);
}

TEST(Softmax, RowsOnSimplex) {
  const Matrix p = softmax(testing::random_matrix(200, 7, 3, 30.0));
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double s = 0.0;
    for (double v : p.row(r)) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(CeGrad, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const MlpSpec spec{{2, 8, 3}};
    const Model m = random_model(spec, 100 + seed);
    const Batch b = random_batch(16, 2, 3, 200 + seed);
    const Gradient analytic = ce_grad(m, b);
    const Gradient numeric = finite_diff_grad(m, b, 1e-5);
    for (std::size_t p = 0; p < m.size(); ++p) {
      EXPECT_LE(relative_error(analytic.values[p], numeric.values[p]), 1e-4) << "coord " << p;
    }
  }
}

TEST(CeGrad, SoftTargetsEqualToModelOutputZeroTheOutputBias) {
  const MlpSpec spec{{3, 5, 4}};
  const Model m = random_model(spec, 4);
  const Matrix x = testing::random_matrix(8, 3, 5);
  const Batch b{x, softmax(forward_logits(m, x))};
  const Gradient g = ce_grad(m, b);
  const auto last = layer_slices(spec).back();
  for (std::size_t o = 0; o < last.out; ++o) EXPECT_NEAR(g.values[last.bias_offset + o], 0.0, 1e-15);
}

TEST(CeGrad, DuplicatingSamplesLeavesGradientUnchanged) {
  const MlpSpec spec{{2, 6, 3}};
  const Model m = random_model(spec, 8);
  const Batch b = random_batch(5, 2, 3, 9);
  std::vector<std::size_t> twice;
  for (std::size_t i = 0; i < 5; ++i) {
    twice.push_back(i);
    twice.push_back(i);
  }
  const Batch doubled{b.x.select_rows(twice), b.t.select_rows(twice)};
  const Gradient g1 = ce_grad(m, b);
  const Gradient g2 = ce_grad(m, doubled);
  for (std::size_t p = 0; p < g1.values.size(); ++p) EXPECT_NEAR(g1.values[p], g2.values[p], 1e-15);
}

TEST(CeGrad, DimensionMismatchThrows) {
  const Model m = init_model(MlpSpec{{2, 3}}, 1);
  EXPECT_THROW(ce_grad(m, random_batch(4, 3, 3, 1)), DimensionError);
  EXPECT_THROW(ce_grad(m, random_batch(4, 2, 4, 1)), DimensionError);
}

// Single affine layer [1, 2]: loss = logsumexp(z) - z_label with
// z = w * x + b, so dL/dw_k = (p_k - t_k) * x and dL/db_k = p_k - t_k.
std::vector<double> analytic_linear_grad(const Model& m, double x, int label) {
  const auto th = m.theta();
  const double z0 = th[0] * x + th[2];
  const double z1 = th[1] * x + th[3];
  const double p0 = 1.0 / (1.0 + std::exp(z1 - z0));
  const double p1 = 1.0 - p0;
  const double r0 = p0 - (label == 0 ? 1.0 : 0.0);
  const double r1 = p1 - (label == 1 ? 1.0 : 0.0);
  return {r0 * x, r1 * x, r0, r1};
}

TEST(FiniteDiffGrad, MatchesAnalyticDerivativeOfToyModel) {
  const Model m(MlpSpec{{1, 2}}, {0.7, -0.4, 0.1, 0.3});
  const Batch b{Matrix(1, 1, std::vector<double>{1.5}), Matrix(1, 2, std::vector<double>{0.0, 1.0})};
  const auto exact = analytic_linear_grad(m, 1.5, 1);
  const Gradient fd = finite_diff_grad(m, b, 1e-4);
  for (std::size_t p = 0; p < 4; ++p) EXPECT_NEAR(fd.values[p], exact[p], 1e-8);
}

TEST(FiniteDiffGrad, ErrorShrinksQuadraticallyInStep) {
  const Model m(MlpSpec{{1, 2}}, {0.7, -0.4, 0.1, 0.3});
  const Batch b{Matrix(1, 1, std::vector<double>{1.5}), Matrix(1, 2, std::vector<double>{0.0, 1.0})};
  const auto exact = analytic_linear_grad(m, 1.5, 1);
  const double h = 2e-2;
  const Gradient coarse = finite_diff_grad(m, b, h);
  const Gradient fine = finite_diff_grad(m, b, h / 2);
  for (std::size_t p = 0; p < 2; ++p) {
    const double e1 = std::abs(coarse.values[p] - exact[p]);
    const double e2 = std::abs(fine.values[p] - exact[p]);
    ASSERT_GT(e2, 0.0);
    EXPECT_NEAR(e1 / e2, 4.0, 0.2) << "coord " << p;
  }
}

TEST(FiniteDiffGrad, ZeroAtPerfectFit) {
  // Huge margin on the correct class: loss and gradient are ~0.
  const Model m(MlpSpec{{1, 2}}, {0.0, 0.0, -40.0, 40.0});
  const Batch b{Matrix(1, 1, std::vector<double>{1.0}), Matrix(1, 2, std::vector<double>{0.0, 1.0})};
  for (double v : finite_diff_grad(m, b, 1e-5).values) EXPECT_NEAR(v, 0.0, 1e-12);
  EXPECT_THROW(finite_diff_grad(m, b, 0.0), InvalidArgument);
}

}  // namespace
}  // namespace ovlab
