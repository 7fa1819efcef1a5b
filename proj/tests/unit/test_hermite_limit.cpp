#include <gtest/gtest.h>

#include <cmath>

#include "lrdhom/hermite_limit.hpp"
#include "lrdhom/stats.hpp"

using namespace lrdhom;

TEST(HermiteConstant, Values) {
  EXPECT_NEAR(hermite_constant(1, 0.75), 0.267411159, 1e-8);
  EXPECT_NEAR(hermite_constant(2, 0.9), 0.1432851211918432, 1e-10);
  EXPECT_THROW(hermite_constant(2, 0.7), std::domain_error);
  EXPECT_THROW(hermite_constant(1, 1.0), std::domain_error);
  EXPECT_THROW(hermite_constant(0, 0.8), std::domain_error);
}

TEST(HermiteSimulator, PathShapeAndGuards) {
  const auto p = simulate_hermite_path(1, 0.8, 1024, 64, 1.0, 3);
  ASSERT_EQ(p.values.size(), 65u);
  EXPECT_EQ(p.values[0], 0.0);
  EXPECT_DOUBLE_EQ(p.H, 0.8);
  EXPECT_DOUBLE_EQ(p.t(32), 0.5);
  EXPECT_EQ(simulate_hermite_path(1, 0.8, 1024, 64, 1.0, 3).values, p.values);
  EXPECT_THROW(HermiteSimulator(1, 0.8, 1000, 8), std::domain_error);
  EXPECT_THROW(HermiteSimulator(1, 0.8, 1024, 3), std::invalid_argument);
  EXPECT_THROW(HermiteSimulator(1, 0.8, 1024, 8, 0.0), std::domain_error);
  EXPECT_THROW(HermiteSimulator(1, 0.8, double(1u << 25), 1024), std::length_error);
  EXPECT_THROW(HermiteSimulator(2, 0.7, 1024, 8), std::domain_error);
}

TEST(HermiteSimulator, FinerInnerMesh) {
  const HermiteSimulator sim(1, 0.75, 1024, 32, 0.5);
  EXPECT_EQ(sim.driver_points(), 2048u);
  EXPECT_EQ(sim.sample(1).values.size(), 33u);
}

namespace {

// Var(sum_{k<T} He_m(g_k)) = m! sum_{|h|<T} (T - |h|) gamma(h)^m for unit-lag fGn g.
double exact_sum_variance(int m, double H0, std::size_t T) {
  double s = 0.0;
  for (std::size_t h = 0; h < T; ++h) {
    const double w = (h == 0 ? 1.0 : 2.0) * static_cast<double>(T - h);
    s += w * std::pow(fgn_covariance(H0, static_cast<double>(h)), m);
  }
  return factorial(m) * s;
}

}  // namespace

TEST(HermiteSimulator, VarianceMatchesExactFiniteHorizon) {
  for (auto [m, H0, N] : {std::tuple{1, 0.8, 3000}, std::tuple{2, 0.9, 6000}}) {
    const std::size_t T = 1024;
    const HermiteSimulator sim(m, H0, T, 16);
    std::vector<double> y(N);
    for (int r = 0; r < N; ++r) y[r] = sim.sample(stream_key(31, m, r)).values.back();
    const double d = sim.normalization();
    const double truth = exact_sum_variance(m, H0, T) / (d * d);
    EXPECT_NEAR(stats::variance(y), truth, 4 * stats::variance_standard_error(y)) << m;
    EXPECT_NEAR(truth, 1.0, 0.1) << m;
  }
}

TEST(HermiteSimulator, FbmCovarianceForRankOne) {
  const HermiteSimulator sim(1, 0.8, 2048, 16);
  const std::size_t N = 3000;
  std::vector<double> prod(N);
  for (std::size_t r = 0; r < N; ++r) {
    const auto p = sim.sample(stream_key(32, 0, r));
    prod[r] = p.values[8] * p.values[16];
  }
  EXPECT_NEAR(stats::mean(prod), fbm_covariance(0.8, 0.5, 1.0), 4 * stats::standard_error(prod));
}

TEST(LambdaNorm, IndicatorsAreExact) {
  for (double H : {0.6, 0.8, 0.95}) {
    EXPECT_NEAR(lambda_norm_sq(LambdaIntegrand::constant(1.0), H), 1.0, 1e-10);
    EXPECT_NEAR(lambda_norm_sq(LambdaIntegrand::indicator(0.0, 0.5), H), std::pow(0.5, 2 * H), 1e-10);
  }
  // Non-dyadic breaks converge only to the refinement tolerance.
  EXPECT_NEAR(lambda_norm_sq(LambdaIntegrand::indicator(0.3, 0.7), 0.8), 0.23083198494515416913,
              1e-6 * 0.2308);
  EXPECT_NEAR(lambda_norm_sq(LambdaIntegrand::steps({0, 0.25, 0.5, 1}, {1, -0.5, 2}), 0.8),
              1.50269194345567874604896305105, 1e-9);
}

TEST(LambdaNorm, ScalingZeroAndSmoothIntegrand) {
  const auto f = LambdaIntegrand::steps({0, 0.3, 1}, {2, -1});
  EXPECT_NEAR(lambda_norm_sq(f.scaled(3.0), 0.7), 9.0 * lambda_norm_sq(f, 0.7), 1e-9);
  EXPECT_EQ(lambda_norm_sq(LambdaIntegrand::zero(), 0.7), 0.0);
  // f(x) = x at H = 0.7: 5/17 by mpmath from the fBm covariance.
  const auto lin = LambdaIntegrand::from_grid({0.0, 1.0}, {0.0, 1.0});
  EXPECT_NEAR(lambda_norm_sq(lin, 0.7, 1e-9), 5.0 / 17.0, 1e-6);
  EXPECT_THROW(lambda_norm_sq(lin, 0.5), std::domain_error);
}

TEST(Wiener, TelescopingAndLinearity) {
  const auto Z = simulate_hermite_path(1, 0.8, 1024, 64, 1.0, 5);
  EXPECT_NEAR(wiener_integral(LambdaIntegrand::constant(1.0), Z), Z.values.back(), 1e-12);
  EXPECT_NEAR(wiener_integral(LambdaIntegrand::indicator(0.0, 0.5), Z), Z.values[32], 1e-12);
  EXPECT_NEAR(wiener_integral(LambdaIntegrand::indicator(0.25, 0.75), Z), Z.values[48] - Z.values[16],
              1e-12);
  const auto f = LambdaIntegrand::indicator(0.0, 0.5), g = LambdaIntegrand::steps({0, 0.1, 1}, {3, -2});
  const auto fg = LambdaIntegrand::combine(2.0, f, -1.5, g);
  EXPECT_NEAR(wiener_integral(fg, Z), 2.0 * wiener_integral(f, Z) - 1.5 * wiener_integral(g, Z), 1e-12);
  EXPECT_THROW(wiener_integral(std::vector<double>(10, 1.0), Z), std::invalid_argument);
}

TEST(Wiener, IsometryForRankOne) {
  const auto f = LambdaIntegrand::steps({0, 0.25, 0.5, 1}, {1, -0.5, 2});
  const HermiteSimulator sim(1, 0.8, 4096, 64);
  const auto fl = left_endpoints(f, 64);
  std::vector<double> w(3000);
  for (std::size_t r = 0; r < w.size(); ++r) w[r] = wiener_integral(fl, sim.sample(stream_key(33, 0, r)));
  EXPECT_NEAR(stats::variance(w), 1.50269194345567874604896305105,
              4 * stats::variance_standard_error(w));
}

TEST(Integrand, StepsAndGrid) {
  const auto s = LambdaIntegrand::steps({0, 0.5, 1}, {1, 4});
  EXPECT_EQ(s(0.2), 1.0);
  EXPECT_EQ(s(0.5), 4.0);
  EXPECT_EQ(s.breaks, std::vector<double>{0.5});
  EXPECT_THROW(LambdaIntegrand::steps({0, 0.5}, {1, 2}), std::invalid_argument);
  const auto g = LambdaIntegrand::from_grid({0, 0.5, 1}, {0, 1, 0});
  EXPECT_NEAR(g(0.25), 0.5, 1e-15);
  EXPECT_THROW(LambdaIntegrand::indicator(0.6, 0.2), std::domain_error);
}

TEST(GreenRow, MatchesDenseKernel) {
  const auto spec = OperatorSpec::laplace(63, 1.0);
  const EllipticOperator op(spec);
  const auto gm = build_green(spec);
  const auto row = green_row(op, 20);
  for (std::size_t j = 0; j < spec.n; ++j) EXPECT_NEAR(row[j], gm.kernel(20, j), 1e-13);
}

TEST(LimitSampler, ZeroCoefficientAndRankCheck) {
  const auto zero = chaos_coefficients(PhiFn::sin(0.0), 32, 96);
  const auto draws = limit_sampler(LambdaIntegrand::constant(1.0), zero, 1, 0.8, 10, 1);
  for (double v : draws) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(limit_sampler(LambdaIntegrand::constant(1.0), zero, 2, 0.9, 10, 1),
               std::invalid_argument);
}

TEST(LimitSampler, VarianceFollowsIsometry) {
  // Var = (V_1)^2 ||1||^2 for sin, m = 1.
  const auto chaos = chaos_coefficients(PhiFn::sin(), 32, 96);
  const auto d = limit_sampler(LambdaIntegrand::constant(1.0), chaos, 1, 0.8, 3000, 2,
                               TaqquSettings{4096, 64, 1.0});
  EXPECT_NEAR(stats::variance(d), std::exp(-1.0), 4 * stats::variance_standard_error(d));
  const auto again = limit_sampler(LambdaIntegrand::constant(1.0), chaos, 1, 0.8, 3000, 2,
                                   TaqquSettings{4096, 64, 1.0}, 3);
  EXPECT_EQ(d, again);
}
