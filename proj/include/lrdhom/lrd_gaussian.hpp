#pragma once

// Long-range-dependent Gaussian drivers: fractional Brownian motion and
// fractional Gaussian noise with exact second-order law, the slowly varying
// functions that modulate their decay, and the moving-average kernel checks.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "lrdhom/core/fft.hpp"
#include "lrdhom/core/io.hpp"
#include "lrdhom/core/rng.hpp"

namespace lrdhom {

inline void require_hurst(double H0, bool allow_one = true) {
  const bool ok = H0 > 0.0 && (allow_one ? H0 <= 1.0 : H0 < 1.0);
  if (!ok || !std::isfinite(H0))
    throw std::domain_error("Hurst parameter out of range: " + std::to_string(H0));
}

/// Covariance of fractional Brownian motion, E[B(s) B(t)].
inline double fbm_covariance(double H0, double s, double t) {
  require_hurst(H0);
  if (s < 0.0 || t < 0.0) throw std::domain_error("fbm_covariance: negative time");
  const double a = 2.0 * H0;
  return 0.5 * (std::pow(s, a) + std::pow(t, a) - std::pow(std::abs(t - s), a));
}

/// Autocovariance of unit-lag fractional Gaussian noise B(x) - B(x-1) at lag h.
/// Integer lags give the discrete fGn sequence; real lags the continuous-time noise.
inline double fgn_covariance(double H0, double h) {
  require_hurst(H0);
  const double a = 2.0 * H0;
  const double x = std::abs(h);
  return 0.5 * (std::pow(x + 1.0, a) - 2.0 * std::pow(x, a) + std::pow(std::abs(x - 1.0), a));
}

// ---------------------------------------------------------------------------
// Slowly varying functions

enum class SlowVaryKind { constant, logarithmic, fgn_example };

/// Closed catalog of slowly varying functions L.
///
/// `fgn_example` is the piecewise L of the fractional-Gaussian-noise kernel,
/// rescaled so that the unit-variance fGn covariance satisfies
/// gamma(x) ~ L(x)^2 x^(2H0-2); this keeps d(T) and X(eps) standard.
class SlowVaryFn {
 public:
  static SlowVaryFn constant(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw std::domain_error("constant L must be positive");
    return SlowVaryFn(SlowVaryKind::constant, c, 0.0, std::numeric_limits<double>::infinity());
  }

  /// log(e + u), optionally frozen beyond `cap` so that L stays bounded.
  static SlowVaryFn logarithmic(double cap = std::numeric_limits<double>::infinity()) {
    if (!(cap > 0.0)) throw std::domain_error("log cap must be positive");
    return SlowVaryFn(SlowVaryKind::logarithmic, 1.0, 0.0, cap);
  }

  static SlowVaryFn fgn_example(double H0) {
    if (!(H0 > 0.5 && H0 < 1.0)) throw std::domain_error("fgn_example L needs H0 in (1/2, 1)");
    const double kappa = std::sqrt(H0 * (2.0 * H0 - 1.0)) / (H0 - 0.5);
    return SlowVaryFn(SlowVaryKind::fgn_example, kappa, H0,
                      std::numeric_limits<double>::infinity());
  }

  double operator()(double u) const {
    if (!(u > 0.0)) throw std::domain_error("slowly varying function needs u > 0");
    switch (kind_) {
      case SlowVaryKind::constant:
        return scale_;
      case SlowVaryKind::logarithmic:
        return std::log(std::numbers::e + std::min(u, cap_));
      case SlowVaryKind::fgn_example: {
        if (u <= 1.0) return scale_ * u;
        // u^(3/2-H0) (u^(H0-1/2) - (u-1)^(H0-1/2)) = u (1 - (1 - 1/u)^(H0-1/2))
        const double p = H0_ - 0.5;
        return scale_ * u * -std::expm1(p * std::log1p(-1.0 / u));
      }
    }
    return 0.0;
  }

  SlowVaryKind kind() const { return kind_; }
  double scale() const { return scale_; }
  double hurst() const { return H0_; }
  double cap() const { return cap_; }

  std::string name() const {
    switch (kind_) {
      case SlowVaryKind::constant: return "constant";
      case SlowVaryKind::logarithmic: return "log";
      case SlowVaryKind::fgn_example: return "fgn_example";
    }
    return "?";
  }

 private:
  SlowVaryFn(SlowVaryKind kind, double scale, double H0, double cap)
      : kind_(kind), scale_(scale), H0_(H0), cap_(cap) {}

  SlowVaryKind kind_;
  double scale_;
  double H0_;
  double cap_;
};

// ---------------------------------------------------------------------------
// Paths

enum class PathKind { fbm, fgn };

struct GaussianPath {
  std::vector<double> values;  // n+1 grid values starting at x = 0
  std::vector<double> lead;    // fbm only: lead[j] = B(-(j+1) dx), synthesized jointly
  double dx = 1.0;
  double H0 = 0.5;
  PathKind kind = PathKind::fbm;
  std::uint64_t seed = 0;

  std::size_t intervals() const { return values.empty() ? 0 : values.size() - 1; }
};

inline io::json path_metadata(const GaussianPath& p) {
  return io::json{{"kind", p.kind == PathKind::fbm ? "fbm" : "fgn"},
                  {"dx", p.dx},
                  {"H0", p.H0},
                  {"seed", p.seed},
                  {"lead", p.lead.size()}};
}

/// CSV with columns index, x, value (grid points from x = 0).
inline void write_path_csv(const std::filesystem::path& path, const GaussianPath& p) {
  std::vector<double> index(p.values.size()), x(p.values.size());
  for (std::size_t k = 0; k < p.values.size(); ++k) {
    index[k] = static_cast<double>(k);
    x[k] = static_cast<double>(k) * p.dx;
  }
  io::write_columns_csv(path, {"index", "x", "value"}, {index, x, p.values});
}

inline void write_path_raw(const std::filesystem::path& stem, const GaussianPath& p) {
  io::write_raw(stem, p.values, path_metadata(p));
}

inline GaussianPath read_path_raw(const std::filesystem::path& stem) {
  auto raw = io::read_raw(stem);
  GaussianPath p;
  p.values = std::move(raw.values);
  p.dx = raw.sidecar.at("dx").get<double>();
  p.H0 = raw.sidecar.at("H0").get<double>();
  p.seed = raw.sidecar.at("seed").get<std::uint64_t>();
  p.kind = raw.sidecar.at("kind").get<std::string>() == "fbm" ? PathKind::fbm : PathKind::fgn;
  return p;
}

// ---------------------------------------------------------------------------
// Circulant embedding

class EmbeddingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact sampler for a stationary Gaussian sequence of length n via
/// circulant embedding (Davies-Harte / Wood-Chan).
class CirculantEmbedding {
 public:
  static constexpr double kNegativeTolerance = -1e-10;
  static constexpr int kMaxDoublings = 4;

  template <class Cov>
  CirculantEmbedding(std::size_t n, Cov&& cov, int max_doublings = kMaxDoublings) : n_(n) {
    if (n == 0) throw std::invalid_argument("embedding of an empty sequence");
    std::size_t m = std::max<std::size_t>(2, std::bit_ceil(2 * (n - 1)));
    for (int attempt = 0; attempt <= max_doublings; ++attempt, m *= 2) {
      std::vector<std::complex<double>> row(m);
      for (std::size_t k = 0; k < m; ++k) row[k] = cov(static_cast<double>(std::min(k, m - k)));
      fft::forward(row);
      double min_eig = std::numeric_limits<double>::infinity();
      for (const auto& v : row) min_eig = std::min(min_eig, v.real());
      if (min_eig < kNegativeTolerance) continue;
      m_ = m;
      doublings_ = attempt;
      min_eigenvalue_ = min_eig;
      scale_.resize(m);
      for (std::size_t k = 0; k < m; ++k)
        scale_[k] = std::sqrt(std::max(row[k].real(), 0.0) / static_cast<double>(m));
      return;
    }
    throw EmbeddingError("circulant embedding not nonnegative definite after " +
                         std::to_string(max_doublings) + " doublings");
  }

  std::size_t size() const { return n_; }
  std::size_t embedding_size() const { return m_; }
  int doublings() const { return doublings_; }
  double min_eigenvalue() const { return min_eigenvalue_; }

  /// Fills `out` (length n) with one draw. `work` is reusable scratch.
  void sample(NormalSource& normal, std::span<double> out,
              std::vector<std::complex<double>>& work) const {
    if (out.size() != n_) throw std::invalid_argument("embedding sample size mismatch");
    work.resize(m_);
    for (std::size_t k = 0; k < m_; ++k) {
      const double a = normal();
      const double b = normal();
      work[k] = {scale_[k] * a, scale_[k] * b};
    }
    fft::forward(work);
    for (std::size_t j = 0; j < n_; ++j) out[j] = work[j].real();
  }

 private:
  std::size_t n_;
  std::size_t m_ = 0;
  int doublings_ = 0;
  double min_eigenvalue_ = 0.0;
  std::vector<double> scale_;
};

/// Repeated fBm synthesis on [-lead*dx, n*dx] with B(0) = 0.
class FbmSampler {
 public:
  FbmSampler(double H0, std::size_t n, double dx, std::size_t lead = 0)
      : H0_(H0), n_(n), dx_(dx), lead_(lead),
        embedding_(checked_count(H0, n, dx, lead), [H0, dx](double k) {
          return std::pow(dx, 2.0 * H0) * fgn_covariance(H0, k);
        }) {}

  GaussianPath sample(std::uint64_t seed) const {
    NormalSource normal(seed);
    std::vector<double> increments(n_ + lead_);
    std::vector<std::complex<double>> work;
    embedding_.sample(normal, increments, work);
    GaussianPath p;
    p.values.resize(n_ + 1);
    p.values[0] = 0.0;
    for (std::size_t k = 1; k <= n_; ++k) p.values[k] = p.values[k - 1] + increments[lead_ + k - 1];
    p.lead.resize(lead_);
    double acc = 0.0;
    for (std::size_t j = 0; j < lead_; ++j) {
      acc -= increments[lead_ - 1 - j];
      p.lead[j] = acc;
    }
    p.dx = dx_;
    p.H0 = H0_;
    p.kind = PathKind::fbm;
    p.seed = seed;
    return p;
  }

  const CirculantEmbedding& embedding() const { return embedding_; }

 private:
  static std::size_t checked_count(double H0, std::size_t n, double dx, std::size_t lead) {
    if (!(H0 > 0.0 && H0 < 1.0)) throw std::domain_error("fBm synthesis needs H0 in (0, 1)");
    if (!(dx > 0.0) || !std::isfinite(dx)) throw std::domain_error("grid spacing must be positive");
    if (n == 0) throw std::invalid_argument("fBm path needs n >= 1");
    return n + lead;
  }

  double H0_;
  std::size_t n_;
  double dx_;
  std::size_t lead_;
  CirculantEmbedding embedding_;
};

/// fBm on the grid k*dx, k = 0..n. n must be a power of two.
inline GaussianPath sample_fbm_path(double H0, std::size_t n, double dx, std::uint64_t seed) {
  if (n == 0 || !std::has_single_bit(n)) throw std::invalid_argument("n must be a power of two");
  return FbmSampler(H0, n, dx).sample(seed);
}

/// Number of grid steps in a unit lag, or throws if 1/dx is not an integer.
inline std::size_t unit_lag_steps(double dx) {
  if (!(dx > 0.0)) throw std::domain_error("grid spacing must be positive");
  const double inv = 1.0 / dx;
  const double rounded = std::round(inv);
  if (rounded < 1.0 || std::abs(inv - rounded) > 1e-9 * std::max(1.0, inv))
    throw std::domain_error("1/dx must be a positive integer");
  return static_cast<std::size_t>(rounded);
}

/// g(k dx) = B(k dx) - B(k dx - 1) using the jointly synthesized segment on [-1, 0].
inline GaussianPath fgn_from_fbm(const GaussianPath& path) {
  if (path.kind != PathKind::fbm) throw std::invalid_argument("fgn_from_fbm needs an fbm path");
  const std::size_t p = unit_lag_steps(path.dx);
  if (path.lead.size() < p)
    throw std::invalid_argument("fbm path lacks the jointly synthesized [-1, 0] segment");
  GaussianPath out;
  out.values.resize(path.values.size());
  for (std::size_t k = 0; k < path.values.size(); ++k) {
    const double back = k >= p ? path.values[k - p] : path.lead[p - k - 1];
    out.values[k] = path.values[k] - back;
  }
  out.dx = path.dx;
  out.H0 = path.H0;
  out.kind = PathKind::fgn;
  out.seed = path.seed;
  return out;
}

/// Unit-lag fGn sampled at spacing dx (1/dx integral) on k = 0..n.
class FgnSampler {
 public:
  FgnSampler(double H0, std::size_t n, double dx) : fbm_(H0, n, dx, unit_lag_steps(dx)) {}
  GaussianPath sample(std::uint64_t seed) const { return fgn_from_fbm(fbm_.sample(seed)); }
  const CirculantEmbedding& embedding() const { return fbm_.embedding(); }

 private:
  FbmSampler fbm_;
};

inline GaussianPath sample_fgn_path(double H0, std::size_t n, double dx, std::uint64_t seed) {
  return FgnSampler(H0, n, dx).sample(seed);
}

/// Continuous-time unit-lag fGn at arbitrary spacing, embedded directly from
/// its stationary covariance. Used when 1/dx is not an integer.
class StationaryFgnSampler {
 public:
  StationaryFgnSampler(double H0, std::size_t n, double dx)
      : H0_(H0), dx_(dx), embedding_(n + 1, [H0, dx](double k) { return fgn_covariance(H0, k * dx); }) {
    if (!(H0 > 0.0 && H0 < 1.0)) throw std::domain_error("fGn synthesis needs H0 in (0, 1)");
  }

  GaussianPath sample(std::uint64_t seed) const {
    NormalSource normal(seed);
    GaussianPath p;
    p.values.resize(embedding_.size());
    std::vector<std::complex<double>> work;
    embedding_.sample(normal, p.values, work);
    p.dx = dx_;
    p.H0 = H0_;
    p.kind = PathKind::fgn;
    p.seed = seed;
    return p;
  }

 private:
  double H0_;
  double dx_;
  CirculantEmbedding embedding_;
};

// ---------------------------------------------------------------------------
// Moving-average kernel

/// Normalizer making the Mandelbrot-Van Ness kernel of unit-lag fGn have unit
/// L2 norm: sigma^2 = Gamma(H+1/2)^2 / (Gamma(2H+1) sin(pi H)).
inline double fgn_kernel_sigma(double H0) {
  require_hurst(H0, false);
  const double g = std::tgamma(H0 + 0.5);
  return std::sqrt(g * g / (std::tgamma(2.0 * H0 + 1.0) * std::sin(std::numbers::pi * H0)));
}

/// C0 = (int_0^inf (u + u^2)^(H0 - 3/2) du)^(-1/2) = B(H0 - 1/2, 2 - 2 H0)^(-1/2).
inline double kernel_c0(double H0) {
  if (!(H0 > 0.5 && H0 < 1.0)) throw std::domain_error("C0 needs H0 in (1/2, 1)");
  return 1.0 / std::sqrt(std::beta(H0 - 0.5, 2.0 - 2.0 * H0));
}

enum class KernelKind { fgn, truncated_power };

struct KernelSpec {
  double H0;
  KernelKind kind;
  SlowVaryFn slow_vary;
  double scale;  // 1/sigma for fgn, c for truncated_power

  /// fGn kernel (1/sigma){u^(H0-1/2) on (0,1]; u^(H0-1/2) - (u-1)^(H0-1/2) beyond}.
  static KernelSpec fgn(double H0) {
    return {H0, KernelKind::fgn, SlowVaryFn::fgn_example(H0), 1.0 / fgn_kernel_sigma(H0)};
  }

  /// c u^(H0-3/2) 1{u > 1} with c fixed by unit L2 norm and constant L = c/C0.
  static KernelSpec truncated_power(double H0) {
    const double c = std::sqrt(2.0 - 2.0 * H0);
    return {H0, KernelKind::truncated_power, SlowVaryFn::constant(c / kernel_c0(H0)), c};
  }

  double operator()(double u) const {
    if (u <= 0.0) return 0.0;
    const double p = H0 - 0.5;
    if (kind == KernelKind::fgn) {
      if (u <= 1.0) return scale * std::pow(u, p);
      return scale * std::pow(u, p) * -std::expm1(p * std::log1p(-1.0 / u));
    }
    return u > 1.0 ? scale * std::pow(u, H0 - 1.5) : 0.0;
  }
};

struct KernelReport {
  double l2_norm_sq = 0.0;      // quadrature of e^2 over (0, truncation)
  bool l2_ok = false;           // |l2 - 1| <= l2_tolerance
  double sup_ratio = 0.0;       // sup over the log grid of |e(u)| / (u^(H0-3/2) L(u))
  bool bounded_ok = false;
  double tail_ratio = 0.0;      // ratio at u = truncation
  double c0 = 0.0;
  bool asymptotic_ok = false;   // |tail_ratio / C0 - 1| <= asymptotic_tolerance
  double max_abs_negative = 0.0;
  bool causal_ok = false;       // e(u) == 0 exactly for sampled u < 0
  double l2_tolerance = 1e-3;
  double asymptotic_tolerance = 1e-3;

  bool pass() const { return l2_ok && bounded_ok && asymptotic_ok && causal_ok; }
};

/// Numerical checks of the unit-norm, power-bound and asymptotic kernel conditions.
inline KernelReport kernel_conditions_report(const KernelSpec& k, double truncation) {
  if (!(truncation >= 1e3)) throw std::domain_error("truncation must be >= 1e3");
  KernelReport r;
  r.c0 = kernel_c0(k.H0);

  auto sq = [&k](double u) {
    const double v = k(u);
    return v * v;
  };
  boost::math::quadrature::tanh_sinh<double> ts;
  double total = ts.integrate(sq, 0.0, 1.0);
  for (double a = 1.0; a < truncation; a *= 2.0) {
    const double b = std::min(2.0 * a, truncation);
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(sq, a, b, 8, 1e-13);
  }
  r.l2_norm_sq = total;
  r.l2_ok = std::abs(total - 1.0) <= r.l2_tolerance;

  auto ratio = [&k](double u) {
    return std::abs(k(u)) / (std::pow(u, k.H0 - 1.5) * k.slow_vary(u));
  };
  const double lo = -6.0, hi = std::log10(truncation);
  const int points = static_cast<int>(std::ceil((hi - lo) * 200.0));
  double sup = 0.0;
  for (int i = 0; i <= points; ++i) {
    const double u = std::pow(10.0, lo + (hi - lo) * i / points);
    sup = std::max(sup, ratio(u));
  }
  r.sup_ratio = sup;
  r.bounded_ok = std::isfinite(sup) && sup < 1e6;
  r.tail_ratio = ratio(truncation);
  r.asymptotic_ok = std::abs(r.tail_ratio / r.c0 - 1.0) <= r.asymptotic_tolerance;

  double neg = 0.0;
  for (int i = 0; i <= 100; ++i) neg = std::max(neg, std::abs(k(-std::pow(10.0, -6.0 + 0.1 * i))));
  neg = std::max(neg, std::abs(k(0.0)));
  r.max_abs_negative = neg;
  r.causal_ok = neg == 0.0;
  return r;
}

}  // namespace lrdhom
