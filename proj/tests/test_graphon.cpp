#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "graphon_lqr/error.hpp"
#include "graphon_lqr/graphon.hpp"
#include "support/testing.hpp"

using namespace graphon_lqr;
using testing_support::Rng;

namespace {

Eigen::MatrixXd projector(const FiniteRankGraphon& g, std::size_t n) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& pair : g.pairs()) {
    const Eigen::VectorXd f = pair.eigfun.sample_cells(n);
    p += f * f.transpose() / static_cast<double>(n);
  }
  return p;
}

StepGraphon swap2() {
  Eigen::MatrixXd a(2, 2);
  a << 0, 1, 1, 0;
  return StepGraphon(a);
}

} // namespace

TEST(Eval, SinusoidalAndUniform) {
  const auto g = sinusoidal_graphon();
  EXPECT_NEAR(g.eval(0.25, 0.25), 1.0, 1e-15);
  EXPECT_NEAR(g.eval(0.1, 0.6), std::cos(2.0 * std::numbers::pi * -0.5), 1e-15);
  EXPECT_DOUBLE_EQ(g.eval(0.3, 0.8), g.eval(0.8, 0.3));
  const auto u = uniform_graphon();
  for (const double x : {0.0, 0.3, 1.0})
    for (const double y : {0.0, 0.77, 1.0}) EXPECT_DOUBLE_EQ(u.eval(x, y), 1.0);
}

TEST(Eval, StepLookupAndPartition) {
  const auto g = swap2();
  EXPECT_EQ(g.eval(0.1, 0.6), 1.0);
  EXPECT_EQ(g.eval(0.1, 0.4), 0.0);
  // Cells are half-open except the last, which is closed at 1.
  EXPECT_EQ(g.eval(0.5, 0.5), 0.0);
  EXPECT_EQ(g.eval(1.0, 0.0), 1.0);
  EXPECT_EQ(cell_index(0.5, 2), 1u);
  EXPECT_EQ(cell_index(1.0, 4), 3u);
}

TEST(Eval, RejectsOutOfRangeCoordinates) {
  EXPECT_THROW(sinusoidal_graphon().eval(-0.1, 0.5), DomainError);
  EXPECT_THROW(swap2().eval(0.5, 1.01), DomainError);
}

TEST(StepGraphonValidation, RejectsAsymmetryAndBound) {
  Eigen::MatrixXd a(2, 2);
  a << 0, 1, 0.5, 0;
  try {
    StepGraphon g(a);
    FAIL() << "asymmetric matrix accepted";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("(0,1)"), std::string::npos) << e.what();
  }
  a << 0, 2, 2, 0;
  EXPECT_THROW(StepGraphon{a}, ValidationError);
  EXPECT_NO_THROW(StepGraphon(a, 2.0));
  EXPECT_THROW(StepGraphon(Eigen::MatrixXd::Zero(2, 3)), ShapeError);
}

TEST(Apply, StepScalesByCellCount) {
  Eigen::Vector2d v(1.0, -1.0);
  const Eigen::VectorXd out = swap2().apply(v);
  EXPECT_DOUBLE_EQ(out(0), -0.5);
  EXPECT_DOUBLE_EQ(out(1), 0.5);
  EXPECT_THROW(swap2().apply(Eigen::VectorXd::Ones(3)), ShapeError);
}

TEST(Apply, UniformFixesConstants) {
  const auto f = uniform_graphon().apply(Function([](double) { return 1.0; }));
  for (const double x : {0.0, 0.4, 1.0}) EXPECT_NEAR(f(x), 1.0, 1e-14);
}

TEST(Apply, SinusoidalEigenfunction) {
  const auto g = sinusoidal_graphon();
  const Function s = [](double x) { return std::numbers::sqrt2 * std::sin(2.0 * std::numbers::pi * x); };
  const auto out = g.apply(s);
  for (const double x : {0.05, 0.3, 0.71}) EXPECT_NEAR(out(x), 0.5 * s(x), 1e-12);
}

TEST(SpectralDecompose, TwoByTwoSwap) {
  const auto g = swap2();
  const auto d = spectral_decompose(g);
  ASSERT_EQ(d.rank(), 2u);
  EXPECT_NEAR(d.pair(0).lambda, 0.5, 1e-15);
  EXPECT_NEAR(d.pair(1).lambda, -0.5, 1e-15);
  const Eigen::Vector2d f1 = d.pair(0).eigfun.cell_values();
  const Eigen::Vector2d f2 = d.pair(1).eigfun.cell_values();
  EXPECT_NEAR(f1(0), 1.0, 1e-14);
  EXPECT_NEAR(f1(1), 1.0, 1e-14);
  EXPECT_NEAR(f2(0), 1.0, 1e-14);
  EXPECT_NEAR(f2(1), -1.0, 1e-14);
  // Brute-force check of the eigen relation.
  EXPECT_LT((g.apply(Eigen::VectorXd(f2)) + 0.5 * f2).norm(), 1e-14);
}

TEST(SpectralDecompose, RankOneOnesMatrix) {
  const auto d = spectral_decompose(StepGraphon(Eigen::MatrixXd::Ones(3, 3)));
  ASSERT_EQ(d.rank(), 1u);
  EXPECT_NEAR(d.pair(0).lambda, 1.0, 1e-14);
  EXPECT_LT((d.pair(0).eigfun.cell_values() - Eigen::VectorXd::Ones(3)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SpectralDecompose, ZeroMatrixIsRankZero) {
  EXPECT_EQ(spectral_decompose(StepGraphon(Eigen::MatrixXd::Zero(5, 5))).rank(), 0u);
}

TEST(SpectralDecompose, SampledSinusoidHasDoubleHalf) {
  const auto step = sample_graphon(sinusoidal_graphon(), 40);
  const auto d = spectral_decompose(step);
  ASSERT_EQ(d.rank(), 2u);
  EXPECT_NEAR(d.pair(0).lambda, 0.5, 1e-12);
  EXPECT_NEAR(d.pair(1).lambda, 0.5, 1e-12);
  // Degenerate eigenspace: compare projectors rather than individual bases.
  const Eigen::MatrixXd expected = projector(sinusoidal_graphon(), 40);
  EXPECT_LT((projector(d, 40) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SpectralDecompose, SignConventionIsDeterministic) {
  Rng rng(5);
  const auto g = testing_support::random_step_graphon(rng, 7, 3);
  const auto a = spectral_decompose(g);
  const auto b = spectral_decompose(g);
  for (std::size_t l = 0; l < a.rank(); ++l) {
    const auto& v = a.pair(l).eigfun.cell_values();
    EXPECT_GT(v(0), 0.0);
    EXPECT_EQ(v, b.pair(l).eigfun.cell_values());
  }
}

// Orthonormality, eigen-residual, reconstruction and Parseval on random
// symmetric step couplings of full and reduced rank.
TEST(SpectralDecompose, RandomCouplingProperties) {
  Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = rng.integer(2, 12);
    StepGraphon g = trial % 2 == 0 ? testing_support::random_step_graphon(rng, n, rng.integer(1, std::min(n, 4)))
                                   : [&] {
                                       Eigen::MatrixXd a(n, n);
                                       for (int i = 0; i < n; ++i)
                                         for (int j = i; j < n; ++j) a(i, j) = a(j, i) = rng.uniform(-1.0, 1.0);
                                       return StepGraphon(a);
                                     }();
    const auto d = spectral_decompose(g);
    const auto gram = d.gram();
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-8);
    double sum_sq = 0.0;
    for (const auto& pair : d.pairs()) {
      const Eigen::VectorXd f = pair.eigfun.cell_values();
      const Eigen::VectorXd r = g.apply(f) - pair.lambda * f;
      EXPECT_LE(std::sqrt(inner_product(r, r)), 1e-8);
      sum_sq += pair.lambda * pair.lambda;
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double x = cell_midpoint(static_cast<std::size_t>(i), static_cast<std::size_t>(n));
        const double y = cell_midpoint(static_cast<std::size_t>(j), static_cast<std::size_t>(n));
        EXPECT_NEAR(d.eval(x, y), g.eval(x, y), 1e-8) << "trial " << trial;
      }
    EXPECT_LE(sum_sq, g.l2_norm() * g.l2_norm() + 1e-10);
    for (std::size_t l = 1; l < d.rank(); ++l)
      EXPECT_GE(std::abs(d.pair(l - 1).lambda), std::abs(d.pair(l).lambda));
  }
}

TEST(FiniteRankGraphonValidation, RejectsBadPairs) {
  const auto s = trig_eigenfunction("sin", 1);
  const auto c = trig_eigenfunction("cos", 1);
  EXPECT_THROW(FiniteRankGraphon({{0.0, s}}), ValidationError);
  EXPECT_THROW(FiniteRankGraphon({{1.5, s}}), ValidationError);
  EXPECT_NO_THROW(FiniteRankGraphon({{1.5, s}}, 2.0));
  EXPECT_THROW(FiniteRankGraphon({{0.2, s}, {0.4, c}}), ValidationError);
  EXPECT_THROW(FiniteRankGraphon({{0.5, s}, {0.4, s}}), ValidationError);
  EXPECT_THROW(sinusoidal_graphon().pair(2), IndexError);
}

TEST(Truncate, KeepsLeadingPairs) {
  const auto g = sinusoidal_graphon();
  const auto one = truncate(g, 1);
  ASSERT_EQ(one.rank(), 1u);
  EXPECT_EQ(one.pair(0).lambda, 0.5);
  EXPECT_NEAR(one.pair(0).eigfun(0.125), std::numbers::sqrt2 * std::sin(std::numbers::pi / 4), 1e-15);
  EXPECT_EQ(truncate(g, 5).rank(), 2u);
  EXPECT_EQ(truncate(g, 0).rank(), 0u);
}

TEST(L2Distance, Examples) {
  const auto g = sinusoidal_graphon();
  EXPECT_NEAR(l2_distance(g, g), 0.0, 1e-12);
  EXPECT_NEAR(l2_distance(g, truncate(g, 1)), 0.5, 1e-10);
  EXPECT_NEAR(l2_distance(uniform_graphon(), FiniteRankGraphon{}), 1.0, 1e-12);
  // Generic midpoint quadrature agrees with the eigen-expansion formula.
  const double by_quadrature = l2_distance<FiniteRankGraphon, FiniteRankGraphon>(g, truncate(g, 1), 256);
  EXPECT_NEAR(by_quadrature, 0.5, 1e-10);
  const auto a = swap2();
  EXPECT_EQ(l2_distance(a, a), 0.0);
  EXPECT_NEAR(l2_distance(a, StepGraphon(Eigen::MatrixXd::Zero(2, 2))), std::sqrt(0.5), 1e-15);
  // Different partition sizes are compared on the common refinement.
  const StepGraphon ones2(Eigen::MatrixXd::Ones(2, 2)), ones3(Eigen::MatrixXd::Ones(3, 3));
  EXPECT_NEAR(l2_distance(ones2, ones3), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(l2_distance(a, swap2()), l2_distance(swap2(), a));
}

TEST(InnerProduct, StepAndAnalytic) {
  EXPECT_THROW(inner_product(Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(3)), ShapeError);
  const auto s = trig_eigenfunction("sin", 1);
  const auto c = trig_eigenfunction("cos", 1);
  EXPECT_NEAR(inner_product(s, s), 1.0, 1e-12);
  EXPECT_NEAR(inner_product(s, c), 0.0, 1e-12);
  EXPECT_THROW(trig_eigenfunction("tan", 1), ValidationError);
}
