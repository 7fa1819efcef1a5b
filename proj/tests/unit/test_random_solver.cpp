#include <gtest/gtest.h>

#include <cmath>

#include "lrdhom/random_solver.hpp"
#include "lrdhom/stats.hpp"

using namespace lrdhom;

namespace {

PerturbedProblem laplace_problem(std::size_t n, const PhiFn& phi, double H0 = 0.75) {
  const auto spec = OperatorSpec::laplace(n, 1.0);
  return PerturbedProblem(spec, make_potential(phi), H0, PerturbedProblem::constant_rhs(spec));
}

}  // namespace

TEST(Scaling, Examples) {
  const auto one = SlowVaryFn::constant(1.0);
  EXPECT_NEAR(scaling_d(1.0, 1, 0.75, one), 1.632993, 1e-6);
  EXPECT_NEAR(scaling_d(16.0, 1, 0.75, one), 13.063945, 1e-6);
  EXPECT_NEAR(scaling_X(1.0 / 16, 1, 0.75, one), 0.816497, 1e-6);
  EXPECT_DOUBLE_EQ(hermite_index(2, 0.9), 0.8);
  // m = 2, H0 = 0.9: H = 0.8, sqrt(2 / (0.8 * 0.6)) 4^0.8 L^2 with L = 2
  EXPECT_NEAR(scaling_d(4.0, 2, 0.9, SlowVaryFn::constant(2.0)),
              std::sqrt(2.0 / 0.48) * std::pow(4.0, 0.8) * 4.0, 1e-12);
}

TEST(Scaling, VanishesAsEpsilonShrinks) {
  for (double H0 : {0.6, 0.75, 0.95}) {
    const auto L = SlowVaryFn::fgn_example(H0);
    EXPECT_LT(scaling_X(std::ldexp(1.0, -20), 1, H0, L), scaling_X(std::ldexp(1.0, -10), 1, H0, L));
  }
}

TEST(Scaling, LogarithmicFactorEntersWithPowerM) {
  const auto L = SlowVaryFn::logarithmic();
  for (double x : {10.0, 1e3, 1e6}) {
    const double ratio = scaling_d(x, 2, 0.9, L) / (std::pow(x, 0.8) * std::pow(L(x), 2));
    EXPECT_NEAR(ratio, std::sqrt(2.0 / 0.48), 1e-12);
  }
}

TEST(Scaling, RejectsShortRangeIndex) {
  EXPECT_THROW(scaling_d(10.0, 2, 0.6, SlowVaryFn::constant(1.0)), std::domain_error);
  EXPECT_THROW(scaling_X(2.0, 1, 0.75, SlowVaryFn::constant(1.0)), std::domain_error);
  EXPECT_THROW(checked_hermite_index(0, 0.75), std::domain_error);
}

TEST(Perturbed, ZeroAmplitudeGivesHomogenized) {
  const auto p = laplace_problem(255, PhiFn::sin(0.0));
  const auto s = p.solve(1.0 / 16, 5);
  for (std::size_t i = 0; i < s.u_eps.size(); ++i) {
    EXPECT_NEAR(s.u_eps[i], s.u0[i], 1e-15);
    EXPECT_NEAR(s.normalized[i], 0.0, 1e-13);
  }
}

TEST(Perturbed, DeterministicWithBoundaryZeros) {
  const auto p = laplace_problem(255, PhiFn::sin());
  const auto a = p.solve(1.0 / 16, 42);
  const auto b = p.solve(1.0 / 16, 42);
  const auto c = p.solve(1.0 / 16, 43);
  EXPECT_EQ(a.u_eps, b.u_eps);
  EXPECT_NE(a.u_eps, c.u_eps);
  ASSERT_EQ(a.u_eps.size(), 257u);
  for (const auto* v : {&a.u_eps, &a.u0, &a.normalized}) {
    EXPECT_EQ(v->front(), 0.0);
    EXPECT_EQ(v->back(), 0.0);
  }
  EXPECT_DOUBLE_EQ(a.x.back(), 1.0);
  EXPECT_EQ(a.q.size(), 255u);
}

TEST(Perturbed, NonDyadicEpsilonUsesStationarySampler) {
  const auto p = laplace_problem(255, PhiFn::sin());
  const auto s = p.solve(0.1, 3);
  EXPECT_EQ(s.q.size(), 255u);
  for (double v : s.q) EXPECT_LE(std::abs(v), 1.0);
}

TEST(Perturbed, DecompositionIsExact) {
  for (const auto& spec : {OperatorSpec::laplace(511, 1.0), OperatorSpec::fractional(511, 0.3, 1.0)}) {
    const PerturbedProblem p(spec, make_potential(PhiFn::centered_cos(1.0 / (1.0 + std::exp(-0.5)))),
                             0.9, PerturbedProblem::constant_rhs(spec));
    const auto s = p.solve(1.0 / 32, 8, true);
    ASSERT_TRUE(s.diagnostics.has_value());
    EXPECT_LT(s.diagnostics->residual, 1e-8) << spec.name();
  }
}

TEST(Perturbed, MaximumPrincipleAndComparison) {
  // 0 <= u_eps <= x (1 - x) / 2 because q0 + q >= 0.
  const auto p = laplace_problem(511, PhiFn::sin());
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = p.solve(1.0 / 32, seed);
    for (std::size_t i = 0; i < s.u_eps.size(); ++i) {
      EXPECT_GE(s.u_eps[i], 0.0);
      EXPECT_LE(s.u_eps[i], 0.5 * s.x[i] * (1.0 - s.x[i]) + 1e-12);
    }
  }
}

TEST(Perturbed, EnergyBound) {
  // ||u_eps|| <= ||f|| / (lambda_1 + q0 - gamma)
  for (const auto& spec : {OperatorSpec::laplace(511, 1.0), OperatorSpec::fractional(511, 0.2, 1.0)}) {
    const PerturbedProblem p(spec, make_potential(PhiFn::sin(0.9)), 0.8,
                             PerturbedProblem::constant_rhs(spec));
    const auto s = p.solve(1.0 / 16, 1);
    const double norm = std::sqrt(grid_l2_sq(s.interior(s.u_eps), spec.h()));
    const double fnorm = std::sqrt(spec.n * spec.h());
    EXPECT_LE(norm, fnorm / (spec.lambda1_power() + spec.q0 - 0.9) * (1.0 + 1e-3)) << spec.name();
  }
}

TEST(Perturbed, Preconditions) {
  EXPECT_THROW(laplace_problem(255, PhiFn::pure_hermite(1)), UnboundedPotentialError);
  EXPECT_THROW(laplace_problem(255, PhiFn::sin(1.5)), std::domain_error);
  const auto p = laplace_problem(255, PhiFn::sin());
  EXPECT_THROW(p.solve(1.0 / 64, 1), GridResolutionError);
  EXPECT_NO_THROW(p.solve(1.0 / 32, 1));
  const auto spec = OperatorSpec::laplace(255, 1.0);
  EXPECT_THROW(PerturbedProblem(spec, make_potential(PhiFn::sin()), 0.75, std::vector<double>(10, 1.0)),
               std::invalid_argument);
}

TEST(Perturbed, FluctuationScalesWithX) {
  // E ||(u_eps - u0) / X||^2 stays of order one as eps shrinks.
  const auto p = laplace_problem(1023, PhiFn::sin());
  std::vector<double> level;
  for (double eps : {1.0 / 16, 1.0 / 128}) {
    std::vector<double> e(100);
    for (std::size_t r = 0; r < e.size(); ++r) {
      const auto s = p.solve(eps, stream_key(9, 0, r));
      e[r] = grid_l2_sq(s.interior(s.normalized), p.op().spec().h());
    }
    level.push_back(stats::mean(e));
  }
  EXPECT_GT(level[1] / level[0], 1.0 / 3.0);
  EXPECT_LT(level[1] / level[0], 3.0);
}

TEST(Perturbed, SolvePerturbedOneShot) {
  const auto spec = OperatorSpec::laplace(255, 1.0);
  const auto pot = make_potential(PhiFn::sin());
  const std::vector<double> f(255, 1.0);
  const auto a = solve_perturbed(spec, pot, 0.75, 1.0 / 16, f, 4);
  const auto b = laplace_problem(255, PhiFn::sin()).solve(1.0 / 16, 4);
  EXPECT_EQ(a.u_eps, b.u_eps);
}
