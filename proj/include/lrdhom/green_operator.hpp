#pragma once

// Dirichlet problems on (0, 1) for two concrete operators P: the Laplacian
// -d^2/dx^2 (finite differences) and the spectral fractional Laplacian
// (sine eigenbasis). Grid x_i = i h, i = 1..n, h = 1/(n+1). Grid functions
// hold the n interior values; the boundary values are zero.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lrdhom/core/fft.hpp"
#include "lrdhom/core/io.hpp"

namespace lrdhom {

enum class OperatorKind { laplace, spectral_fractional };

struct OperatorSpec {
  OperatorKind kind = OperatorKind::laplace;
  double q0 = 1.0;
  std::size_t n = 255;
  double s = 1.0;          // fractional power, spectral_fractional only
  std::size_t modes = 0;   // sine modes K; 0 means n

  static OperatorSpec laplace(std::size_t n, double q0) {
    return {OperatorKind::laplace, q0, n, 1.0, 0};
  }
  static OperatorSpec fractional(std::size_t n, double s, double q0, std::size_t modes = 0) {
    return {OperatorKind::spectral_fractional, q0, n, s, modes};
  }

  double h() const { return 1.0 / static_cast<double>(n + 1); }
  /// Interior node i = 0..n-1 sits at (i+1) h.
  double x(std::size_t i) const { return static_cast<double>(i + 1) * h(); }
  std::size_t mode_count() const { return modes == 0 ? n : modes; }
  /// Effective singularity exponent of the Green kernel.
  double beta() const { return kind == OperatorKind::laplace ? 1.0 : std::min(1.0, 2.0 * s); }
  /// Smallest eigenvalue power lambda_1^s (s = 1 for the Laplacian).
  double lambda1_power() const {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    return kind == OperatorKind::laplace ? pi2 : std::pow(pi2, s);
  }

  void validate() const {
    if (n < 16) throw std::invalid_argument("operator grid needs n >= 16");
    if (!(q0 >= 0.0) || !std::isfinite(q0)) throw std::domain_error("q0 must be finite and >= 0");
    if (kind == OperatorKind::spectral_fractional) {
      if (!(s > 0.0 && s <= 1.0)) throw std::domain_error("fractional power s must be in (0, 1]");
      if (mode_count() < n) throw std::invalid_argument("fractional operator needs K >= n");
    }
  }

  std::string name() const { return kind == OperatorKind::laplace ? "laplace" : "spectral_fractional"; }
};

inline io::json to_json(const OperatorSpec& s) {
  return io::json{{"kind", s.name()}, {"q0", s.q0}, {"n", s.n}, {"s", s.s}, {"modes", s.modes}};
}

/// 1 / (lambda_1^s + q0): the L2 operator norm of the continuum Green operator.
inline double operator_norm_bound(const OperatorSpec& spec) {
  return 1.0 / (spec.lambda1_power() + spec.q0);
}

namespace detail {

/// Modal weights of the fractional Green operator on the grid, with sine
/// modes k > n folded onto their aliases. Entry k'' - 1 multiplies the k''-th
/// orthonormal DST-I basis vector.
inline std::vector<double> folded_weights(const OperatorSpec& spec) {
  const std::size_t n = spec.n, N = n + 1, K = spec.mode_count();
  std::vector<double> w(n, 0.0);
  const double pi = std::numbers::pi;
  for (std::size_t k = 1; k <= K; ++k) {
    const std::size_t r = k % (2 * N);
    if (r == 0 || r == N) continue;  // vanishes on every node
    const std::size_t folded = r < N ? r : 2 * N - r;
    w[folded - 1] += 1.0 / (std::pow(static_cast<double>(k) * pi, 2.0 * spec.s) + spec.q0);
  }
  return w;
}

}  // namespace detail

/// Dense Nystrom Green matrix: entry(i, j) = h G(x_i, y_j), so that
/// (entry * f) approximates the integral of G(x_i, y) f(y).
struct GreenMatrix {
  OperatorSpec spec;
  Eigen::MatrixXd weighted;

  std::size_t size() const { return spec.n; }
  double h() const { return spec.h(); }
  double entry(std::size_t i, std::size_t j) const {
    return weighted(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  /// Kernel value G(x_i, y_j).
  double kernel(std::size_t i, std::size_t j) const { return entry(i, j) / h(); }
};

inline GreenMatrix build_green(const OperatorSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n;
  const auto ni = static_cast<Eigen::Index>(n);
  GreenMatrix gm{spec, Eigen::MatrixXd(ni, ni)};
  const double h = spec.h();
  if (spec.kind == OperatorKind::laplace) {
    // Inverse of tridiag(-1, 2 + q0 h^2, -1) from its two homogeneous solutions.
    const double a = 2.0 + spec.q0 * h * h;
    std::vector<double> u(n + 2), v(n + 2);
    u[0] = 0.0;
    u[1] = 1.0;
    for (std::size_t k = 1; k <= n; ++k) u[k + 1] = a * u[k] - u[k - 1];
    v[n + 1] = 0.0;
    v[n] = 1.0;
    for (std::size_t k = n; k >= 1; --k) v[k - 1] = a * v[k] - v[k + 1];
    const double w = v[0];
    if (!(w > 0.0)) throw std::logic_error("singular finite-difference system");
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t j = i; j <= n; ++j) {
        const double g = h * h * u[i] * v[j] / w;
        gm.weighted(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - 1)) = g;
        gm.weighted(static_cast<Eigen::Index>(j - 1), static_cast<Eigen::Index>(i - 1)) = g;
      }
  } else {
    const auto w = detail::folded_weights(spec);
    const double norm = std::sqrt(2.0 / static_cast<double>(n + 1));
    const double pi = std::numbers::pi;
    std::vector<double> col(n);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k)
        col[k] = w[k] * norm *
                 std::sin(pi * static_cast<double>((k + 1) * (j + 1)) / static_cast<double>(n + 1));
      fft::dst1(col);
      for (std::size_t i = 0; i < n; ++i)
        gm.weighted(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    }
    // Round-off symmetrization.
    gm.weighted = 0.5 * (gm.weighted + gm.weighted.transpose()).eval();
  }
  if (!gm.weighted.allFinite()) throw std::logic_error("non-finite Green matrix");
  return gm;
}

/// u0 = GreenMatrix f.
inline std::vector<double> homogenized_solve(const GreenMatrix& gm, std::span<const double> f) {
  if (f.size() != gm.size()) throw std::invalid_argument("grid function size mismatch");
  for (double v : f)
    if (!std::isfinite(v)) throw std::domain_error("right-hand side must be finite");
  Eigen::Map<const Eigen::VectorXd> fv(f.data(), static_cast<Eigen::Index>(f.size()));
  Eigen::VectorXd u = gm.weighted * fv;
  return {u.data(), u.data() + u.size()};
}

/// max over off-diagonal pairs of |G(x, y)| |x - y|^(1 - beta).
inline double singularity_diagnostic(const GreenMatrix& gm, double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::domain_error("beta must be in (0, 1]");
  const std::size_t n = gm.size();
  const double h = gm.h();
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dist = h * std::abs(static_cast<double>(i) - static_cast<double>(j));
      best = std::max(best, std::abs(gm.kernel(i, j)) * std::pow(dist, 1.0 - beta));
    }
  return best;
}

/// max over y of max over adjacent x of |G(x_{i+1}, y) - G(x_i, y)| / h, boundary zeros included.
inline double lipschitz_diagnostic(const GreenMatrix& gm) {
  const std::size_t n = gm.size();
  if (n < 32) throw std::invalid_argument("lipschitz_diagnostic needs n >= 32");
  const double h = gm.h();
  double best = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double prev = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      const double cur = i < n ? gm.kernel(i, j) : 0.0;
      best = std::max(best, std::abs(cur - prev) / h);
      prev = cur;
    }
  }
  return best;
}

/// Largest singular value of the weighted matrix (the discrete L2 operator norm).
inline double green_operator_norm(const GreenMatrix& gm) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gm.weighted, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

inline void write_green_raw(const std::filesystem::path& stem, const GreenMatrix& gm) {
  auto meta = to_json(gm.spec);
  meta["rows"] = gm.size();
  meta["cols"] = gm.size();
  meta["layout"] = "column_major";
  meta["weighting"] = "h*G(x_i,y_j)";
  io::write_raw(stem, std::span<const double>(gm.weighted.data(), gm.weighted.size()), meta);
}

/// Matrix-free solver for (P + q0 + diag(q)) u = f on the interior grid.
///
/// Laplace: tridiagonal elimination. Fractional: preconditioned conjugate
/// gradients with the fast sine transform and the q = 0 inverse as
/// preconditioner; it converges in a few dozen iterations because |q| <= q0.
class EllipticOperator {
 public:
  static constexpr double kTolerance = 1e-13;
  static constexpr int kMaxIterations = 500;

  explicit EllipticOperator(const OperatorSpec& spec) : spec_(spec) {
    spec_.validate();
    if (spec_.kind == OperatorKind::spectral_fractional) weights_ = detail::folded_weights(spec_);
  }

  const OperatorSpec& spec() const { return spec_; }
  std::size_t size() const { return spec_.n; }

  /// u = G f (the q = 0 solve).
  std::vector<double> apply_green(std::span<const double> f) const {
    check(f);
    if (spec_.kind == OperatorKind::laplace) return tridiagonal({}, f);
    std::vector<double> u(f.begin(), f.end());
    modal(u, weights_, false);
    return u;
  }

  /// (P + q0) u.
  std::vector<double> apply(std::span<const double> u) const {
    check(u);
    const std::size_t n = spec_.n;
    std::vector<double> out(n);
    if (spec_.kind == OperatorKind::laplace) {
      const double ih2 = 1.0 / (spec_.h() * spec_.h());
      for (std::size_t i = 0; i < n; ++i) {
        const double left = i > 0 ? u[i - 1] : 0.0;
        const double right = i + 1 < n ? u[i + 1] : 0.0;
        out[i] = ih2 * (2.0 * u[i] - left - right) + spec_.q0 * u[i];
      }
      return out;
    }
    out.assign(u.begin(), u.end());
    modal(out, weights_, true);
    return out;
  }

  /// Solves (P + q0 + diag(q)) u = f. Throws if q0 + q < 0 at some node.
  std::vector<double> solve(std::span<const double> q, std::span<const double> f) const {
    check(f);
    if (q.size() != spec_.n) throw std::invalid_argument("potential size mismatch");
    for (double v : q)
      if (!(spec_.q0 + v >= 0.0)) throw std::domain_error("q0 + q must be nonnegative");
    if (spec_.kind == OperatorKind::laplace) return tridiagonal(q, f);
    return pcg(q, f);
  }

 private:
  void check(std::span<const double> f) const {
    if (f.size() != spec_.n) throw std::invalid_argument("grid function size mismatch");
  }

  // y <- S diag(w or 1/w) S y
  static void modal(std::vector<double>& y, const std::vector<double>& w, bool invert) {
    fft::dst1(y);
    for (std::size_t k = 0; k < y.size(); ++k) y[k] = invert ? y[k] / w[k] : y[k] * w[k];
    fft::dst1(y);
  }

  std::vector<double> tridiagonal(std::span<const double> q, std::span<const double> f) const {
    const std::size_t n = spec_.n;
    const double ih2 = 1.0 / (spec_.h() * spec_.h());
    std::vector<double> c(n), d(n);
    double denom = 2.0 * ih2 + spec_.q0 + (q.empty() ? 0.0 : q[0]);
    c[0] = -ih2 / denom;
    d[0] = f[0] / denom;
    for (std::size_t i = 1; i < n; ++i) {
      denom = 2.0 * ih2 + spec_.q0 + (q.empty() ? 0.0 : q[i]) + ih2 * c[i - 1];
      c[i] = -ih2 / denom;
      d[i] = (f[i] + ih2 * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
    return d;
  }

  std::vector<double> pcg(std::span<const double> q, std::span<const double> f) const {
    const std::size_t n = spec_.n;
    auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
      return s;
    };
    auto apply_a = [&](const std::vector<double>& x) {
      std::vector<double> y = x;
      modal(y, weights_, true);
      for (std::size_t i = 0; i < n; ++i) y[i] += q[i] * x[i];
      return y;
    };
    std::vector<double> r(f.begin(), f.end());
    std::vector<double> z = r;
    modal(z, weights_, false);
    std::vector<double> x = z;  // start from the q = 0 solution
    {
      const auto ax = apply_a(x);
      for (std::size_t i = 0; i < n; ++i) r[i] -= ax[i];
    }
    const double fnorm = std::sqrt(dot(std::vector<double>(f.begin(), f.end()),
                                       std::vector<double>(f.begin(), f.end())));
    if (fnorm == 0.0) return std::vector<double>(n, 0.0);
    z = r;
    modal(z, weights_, false);
    std::vector<double> p = z;
    double rz = dot(r, z);
    for (int it = 0; it < kMaxIterations; ++it) {
      if (std::sqrt(dot(r, r)) <= kTolerance * fnorm) return x;
      const auto ap = apply_a(p);
      const double alpha = rz / dot(p, ap);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * ap[i];
      }
      z = r;
      modal(z, weights_, false);
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    throw std::runtime_error("fractional solve did not converge");
  }

  OperatorSpec spec_;
  std::vector<double> weights_;
};

/// u0 = (P + q0)^{-1} f without forming the Green matrix.
inline std::vector<double> homogenized_solve(const OperatorSpec& spec, std::span<const double> f) {
  for (double v : f)
    if (!std::isfinite(v)) throw std::domain_error("right-hand side must be finite");
  return EllipticOperator(spec).apply_green(f);
}

/// Trapezoid L2 norm squared of an interior grid function with zero boundary values.
inline double grid_l2_sq(std::span<const double> u, double h) {
  double s = 0.0;
  for (double v : u) s += v * v;
  return h * s;
}

}  // namespace lrdhom
