#include <gtest/gtest.h>

#include <cmath>

#include "lrdhom/green_operator.hpp"

using namespace lrdhom;

namespace {

std::size_t node_at(const OperatorSpec& s, double x) {
  return static_cast<std::size_t>(std::llround(x / s.h())) - 1;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(Green, LaplaceClosedFormNoMass) {
  const auto spec = OperatorSpec::laplace(31, 0.0);
  const auto gm = build_green(spec);
  EXPECT_NEAR(gm.kernel(node_at(spec, 0.25), node_at(spec, 0.5)), 0.125, 1e-14);
  for (std::size_t i = 0; i < spec.n; ++i)
    for (std::size_t j = i; j < spec.n; ++j)
      EXPECT_NEAR(gm.kernel(i, j), spec.x(i) * (1.0 - spec.x(j)), 1e-13);
}

TEST(Green, LaplaceClosedFormWithMass) {
  const auto spec = OperatorSpec::laplace(255, 1.0);
  const auto gm = build_green(spec);
  const std::size_t mid = node_at(spec, 0.5);
  // sinh(1/2)^2 / sinh(1)
  EXPECT_NEAR(gm.kernel(mid, mid), 0.2310586, 1e-6);
  const std::size_t a = node_at(spec, 0.25);
  EXPECT_NEAR(gm.kernel(a, mid), std::sinh(0.25) * std::sinh(0.5) / std::sinh(1.0), 1e-6);
}

TEST(Green, SymmetricAndPositive) {
  for (const auto& spec : {OperatorSpec::laplace(127, 1.0), OperatorSpec::fractional(127, 0.3, 1.0),
                           OperatorSpec::fractional(127, 0.7, 0.0, 512)}) {
    const auto gm = build_green(spec);
    EXPECT_LT((gm.weighted - gm.weighted.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    for (std::size_t i = 0; i < spec.n; i += 9)
      for (std::size_t j = 0; j < spec.n; j += 7) EXPECT_GT(gm.kernel(i, j), 0.0) << spec.name();
  }
}

TEST(Green, FractionalWithUnitPowerMatchesLaplace) {
  const std::size_t n = 255;
  const auto lap = build_green(OperatorSpec::laplace(n, 1.0));
  const auto frac = build_green(OperatorSpec::fractional(n, 1.0, 1.0, 4 * n));
  EXPECT_LT((lap.weighted - frac.weighted).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Green, HomogenizedSolutionForConstantLoad) {
  // u0 = 1 - cosh(x - 1/2) / cosh(1/2) for -u'' + u = 1.
  auto err = [](std::size_t n) {
    const auto spec = OperatorSpec::laplace(n, 1.0);
    const auto u0 = homogenized_solve(spec, std::vector<double>(n, 1.0));
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      e = std::max(e, std::abs(u0[i] - (1.0 - std::cosh(spec.x(i) - 0.5) / std::cosh(0.5))));
    return e;
  };
  const auto spec = OperatorSpec::laplace(255, 1.0);
  const auto u0 = homogenized_solve(spec, std::vector<double>(255, 1.0));
  EXPECT_NEAR(u0[node_at(spec, 0.5)], 0.1131811, 1e-6);
  const double ratio = err(63) / err(127);
  EXPECT_GT(ratio, 3.0);
  EXPECT_LT(ratio, 5.0);
}

TEST(Green, DenseAndMatrixFreeAgree) {
  for (const auto& spec : {OperatorSpec::laplace(127, 1.0), OperatorSpec::fractional(127, 0.4, 1.0)}) {
    std::vector<double> f(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) f[i] = std::sin(7.0 * spec.x(i)) + spec.x(i);
    const auto a = homogenized_solve(build_green(spec), f);
    const auto b = EllipticOperator(spec).apply_green(f);
    EXPECT_LT(max_abs_diff(a, b), 1e-13) << spec.name();
  }
}

TEST(Green, SingularityDiagnosticScaling) {
  auto diag = [](std::size_t n, double beta) {
    return singularity_diagnostic(build_green(OperatorSpec::fractional(n, 0.2, 1.0)), beta);
  };
  // Kernel ~ |x - y|^(2s - 1): bounded with beta = 2s, divergent with a larger beta.
  EXPECT_LT(diag(255, 0.4) / diag(127, 0.4), 1.15);
  EXPECT_GT(diag(255, 0.9) / diag(127, 0.9), 1.3);
  const auto lap = build_green(OperatorSpec::laplace(127, 1.0));
  EXPECT_LT(singularity_diagnostic(lap, 1.0), 0.3);
  EXPECT_THROW(singularity_diagnostic(lap, 0.0), std::domain_error);
}

TEST(Green, LipschitzDiagnostic) {
  const double flat = lipschitz_diagnostic(build_green(OperatorSpec::laplace(255, 0.0)));
  EXPECT_NEAR(flat, 1.0, 0.01);
  const double a = lipschitz_diagnostic(build_green(OperatorSpec::laplace(127, 1.0)));
  const double b = lipschitz_diagnostic(build_green(OperatorSpec::laplace(255, 1.0)));
  EXPECT_NEAR(b / a, 1.0, 0.05);
  const double fa = lipschitz_diagnostic(build_green(OperatorSpec::fractional(127, 0.2, 1.0)));
  const double fb = lipschitz_diagnostic(build_green(OperatorSpec::fractional(255, 0.2, 1.0)));
  EXPECT_GT(fb / fa, 1.3);
  EXPECT_THROW(lipschitz_diagnostic(build_green(OperatorSpec::laplace(16, 1.0))),
               std::invalid_argument);
}

TEST(Green, OperatorNormNearContinuumBound) {
  const auto lap = OperatorSpec::laplace(255, 1.0);
  EXPECT_NEAR(green_operator_norm(build_green(lap)) / operator_norm_bound(lap), 1.0, 1e-4);
  const auto frac = OperatorSpec::fractional(255, 0.2, 1.0);
  EXPECT_NEAR(green_operator_norm(build_green(frac)), operator_norm_bound(frac), 1e-12);
}

TEST(Elliptic, SolveInvertsApplyPlusPotential) {
  for (const auto& spec : {OperatorSpec::laplace(511, 1.0), OperatorSpec::fractional(511, 0.2, 1.0),
                           OperatorSpec::fractional(511, 0.8, 1.0)}) {
    const EllipticOperator op(spec);
    std::vector<double> q(spec.n), f(spec.n, 1.0);
    for (std::size_t i = 0; i < spec.n; ++i) q[i] = std::sin(40.0 * spec.x(i) * spec.x(i));
    const auto u = op.solve(q, f);
    auto r = op.apply(u);
    for (std::size_t i = 0; i < spec.n; ++i) r[i] += q[i] * u[i];
    EXPECT_LT(max_abs_diff(r, f), 1e-9) << spec.name();
    const auto g = op.apply_green(op.apply(u));
    EXPECT_LT(max_abs_diff(g, u), 1e-12) << spec.name();
  }
}

TEST(Elliptic, ZeroPotentialMatchesGreen) {
  const auto spec = OperatorSpec::fractional(255, 0.5, 1.0);
  const EllipticOperator op(spec);
  const std::vector<double> f(spec.n, 1.0), q(spec.n, 0.0);
  EXPECT_LT(max_abs_diff(op.solve(q, f), op.apply_green(f)), 1e-13);
}

TEST(Elliptic, Errors) {
  EXPECT_THROW(build_green(OperatorSpec::laplace(15, 1.0)), std::invalid_argument);
  EXPECT_THROW(build_green(OperatorSpec::fractional(63, 0.5, 1.0, 32)), std::invalid_argument);
  EXPECT_THROW(build_green(OperatorSpec::fractional(63, 1.5, 1.0)), std::domain_error);
  EXPECT_THROW(build_green(OperatorSpec::laplace(63, -1.0)), std::domain_error);
  const EllipticOperator op(OperatorSpec::laplace(63, 1.0));
  EXPECT_THROW(op.solve(std::vector<double>(63, -2.0), std::vector<double>(63, 1.0)),
               std::domain_error);
  EXPECT_THROW(op.apply_green(std::vector<double>(62, 1.0)), std::invalid_argument);
}

TEST(Green, GridL2Norm) {
  const std::vector<double> ones(99, 1.0);
  EXPECT_NEAR(grid_l2_sq(ones, 0.01), 0.99, 1e-14);
}
