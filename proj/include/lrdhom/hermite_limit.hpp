#pragma once

// Hermite processes via Taqqu's normalized partial integrals, the Wiener
// integral against them for deterministic integrands, and samplers of the
// limiting law of the normalized fluctuation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "lrdhom/core/fft.hpp"
#include "lrdhom/core/io.hpp"
#include "lrdhom/core/parallel.hpp"
#include "lrdhom/core/rng.hpp"
#include "lrdhom/hermite_chaos.hpp"
#include "lrdhom/lrd_gaussian.hpp"
#include "lrdhom/random_solver.hpp"

namespace lrdhom {

/// A_{k,H0}: makes the order-k Hermite process of Hurst index 1 + k(H0-1) standard.
///
/// The inner integral of (u + u^2)^(H0-3/2) over (0, inf) is computed by
/// double-exponential quadrature and cross-checked against B(H0-1/2, 2-2H0).
inline double hermite_constant(int k, double H0) {
  if (k < 1 || k > kMaxHermiteOrder) throw std::domain_error("Hermite order out of range");
  const double lo = 1.0 - 1.0 / (2.0 * k);
  if (!(H0 > lo && H0 < 1.0))
    throw std::domain_error("H0 outside (1 - 1/(2k), 1) for order " + std::to_string(k));
  const double a = H0 - 1.5;
  auto integrand = [a](double u) { return std::pow(u * (1.0 + u), a); };
  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  const double inner = ts.integrate(integrand, 0.0, 1.0) + es.integrate(integrand, 1.0,
                                                                        std::numeric_limits<double>::infinity());
  const double beta = std::beta(H0 - 0.5, 2.0 - 2.0 * H0);
  if (std::abs(inner - beta) > 1e-8 * beta)
    throw std::runtime_error("hermite_constant: quadrature disagrees with the Beta identity");
  const double num = factorial(k) * (k * (H0 - 1.0) + 1.0) * (2.0 * k * (H0 - 1.0) + 1.0);
  return std::sqrt(num / std::pow(inner, k));
}

struct HermitePath {
  std::vector<double> values;  // Y_T(j / n), j = 0..n
  int m = 1;
  double H0 = 0.75;
  double H = 0.75;
  double T = 0.0;
  double delta = 1.0;
  std::uint64_t seed = 0;

  std::size_t intervals() const { return values.size() - 1; }
  double t(std::size_t j) const { return static_cast<double>(j) / static_cast<double>(intervals()); }
};

inline io::json path_metadata(const HermitePath& p) {
  return io::json{{"m", p.m}, {"H0", p.H0}, {"H", p.H},       {"T", p.T},
                  {"delta", p.delta}, {"seed", p.seed}, {"intervals", p.intervals()}};
}

inline void write_hermite_raw(const std::filesystem::path& stem, const HermitePath& p) {
  io::write_raw(stem, p.values, path_metadata(p));
}

/// Repeated simulation of Y_T(x) = d(T)^{-1} int_0^{Tx} He_m(g(y)) dy on x = j/n
/// by a mesh-delta Riemann sum, g the unit-lag fGn driver.
class HermiteSimulator {
 public:
  static constexpr std::size_t kMaxDriverPoints = std::size_t{1} << 24;

  HermiteSimulator(int m, double H0, double T, std::size_t n, double delta = 1.0)
      : m_(m), H0_(H0), H_(checked_hermite_index(m, H0)), T_(T), delta_(delta), n_(n),
        count_(checked_count(T, n, delta)),
        driver_(make_driver(H0, count_, delta)),
        d_(scaling_d(T, m, H0, SlowVaryFn::fgn_example(H0))) {}

  HermitePath sample(std::uint64_t seed) const {
    const auto g = std::visit([seed](const auto& d) { return d.sample(seed); }, driver_);
    HermitePath p;
    p.m = m_;
    p.H0 = H0_;
    p.H = H_;
    p.T = T_;
    p.delta = delta_;
    p.seed = seed;
    p.values.assign(n_ + 1, 0.0);
    const std::size_t per = count_ / n_;
    double acc = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      for (std::size_t k = j * per; k < (j + 1) * per; ++k) acc += hermite_poly(m_, g.values[k]);
      p.values[j + 1] = acc * delta_ / d_;
    }
    return p;
  }

  double normalization() const { return d_; }
  std::size_t driver_points() const { return count_; }
  int order() const { return m_; }
  double hurst_index() const { return H_; }

 private:
  using Driver = std::variant<FgnSampler, StationaryFgnSampler>;

  // Through fBm when 1/delta is an integer; the direct stationary embedding
  // can fail to be nonnegative for delta < 1.
  static Driver make_driver(double H0, std::size_t count, double delta) {
    const double inv = 1.0 / delta;
    if (std::abs(inv - std::round(inv)) <= 1e-9 * inv && delta < 1.0)
      return Driver(std::in_place_type<FgnSampler>, H0, count - 1, delta);
    return Driver(std::in_place_type<StationaryFgnSampler>, H0, count - 1, delta);
  }

  static std::size_t checked_count(double T, std::size_t n, double delta) {
    if (!(T >= 1024.0)) throw std::domain_error("Taqqu horizon needs T >= 2^10");
    if (!(delta > 0.0 && delta <= 1.0)) throw std::domain_error("inner mesh needs 0 < delta <= 1");
    if (n == 0) throw std::invalid_argument("Hermite path needs n >= 1");
    const double c = T / delta;
    if (c > static_cast<double>(kMaxDriverPoints))
      throw std::length_error("Taqqu simulation exceeds the memory guard (T/delta too large)");
    const double rounded = std::round(c);
    if (std::abs(c - rounded) > 1e-9 * c) throw std::invalid_argument("T/delta must be an integer");
    const auto count = static_cast<std::size_t>(rounded);
    if (count % n != 0) throw std::invalid_argument("T/delta must be divisible by n");
    return count;
  }

  int m_;
  double H0_;
  double H_;
  double T_;
  double delta_;
  std::size_t n_;
  std::size_t count_;
  Driver driver_;
  double d_;
};

inline HermitePath simulate_hermite_path(int m, double H0, double T, std::size_t n, double delta,
                                         std::uint64_t seed) {
  return HermiteSimulator(m, H0, T, n, delta).sample(seed);
}

// ---------------------------------------------------------------------------
// Deterministic integrands

/// Piecewise-continuous f on [0, 1] with its jump locations.
struct LambdaIntegrand {
  std::function<double(double)> fn;
  std::vector<double> breaks;  // sorted points in (0, 1) where f may jump or kink

  double operator()(double x) const { return fn(x); }

  static LambdaIntegrand zero() { return {[](double) { return 0.0; }, {}}; }
  static LambdaIntegrand constant(double c) { return {[c](double) { return c; }, {}}; }

  /// 1 on [a, b).
  static LambdaIntegrand indicator(double a, double b) {
    if (!(0.0 <= a && a < b && b <= 1.0)) throw std::domain_error("indicator needs 0 <= a < b <= 1");
    std::vector<double> br;
    if (a > 0.0) br.push_back(a);
    if (b < 1.0) br.push_back(b);
    return {[a, b](double x) { return (x >= a && x < b) ? 1.0 : 0.0; }, br};
  }

  /// values[i] on [edges[i], edges[i+1]); edges from 0 to 1.
  static LambdaIntegrand steps(std::vector<double> edges, std::vector<double> values) {
    if (edges.size() != values.size() + 1 || edges.front() != 0.0 || edges.back() != 1.0 ||
        !std::is_sorted(edges.begin(), edges.end()))
      throw std::invalid_argument("steps needs sorted edges 0 = e_0 < ... < e_k = 1");
    std::vector<double> br(edges.begin() + 1, edges.end() - 1);
    return {[edges, values](double x) {
              if (x < 0.0 || x >= 1.0) return 0.0;
              const auto it = std::upper_bound(edges.begin(), edges.end(), x);
              return values[static_cast<std::size_t>(it - edges.begin()) - 1];
            },
            br};
  }

  /// Linear interpolation through (xs[i], ys[i]); zero outside [xs.front(), xs.back()].
  static LambdaIntegrand from_grid(std::vector<double> xs, std::vector<double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2 || !std::is_sorted(xs.begin(), xs.end()))
      throw std::invalid_argument("from_grid needs sorted nodes and matching values");
    return {[xs, ys](double x) {
              if (x < xs.front() || x > xs.back()) return 0.0;
              auto it = std::upper_bound(xs.begin(), xs.end(), x);
              if (it == xs.end()) return ys.back();
              const std::size_t j = static_cast<std::size_t>(it - xs.begin());
              const double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
              return ys[j - 1] + t * (ys[j] - ys[j - 1]);
            },
            {}};
  }

  LambdaIntegrand scaled(double c) const {
    auto f = fn;
    return {[f, c](double x) { return c * f(x); }, breaks};
  }

  /// a f + b g.
  static LambdaIntegrand combine(double a, const LambdaIntegrand& f, double b,
                                 const LambdaIntegrand& g) {
    std::vector<double> br;
    std::merge(f.breaks.begin(), f.breaks.end(), g.breaks.begin(), g.breaks.end(),
               std::back_inserter(br));
    br.erase(std::unique(br.begin(), br.end()), br.end());
    auto ff = f.fn;
    auto gg = g.fn;
    return {[ff, gg, a, b](double x) { return a * ff(x) + b * gg(x); }, br};
  }
};

class LambdaNormError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Exact cell averages of f over M equal cells, with 4-point Gauss-Legendre
/// on each piece between consecutive breaks.
inline std::vector<double> cell_averages(const LambdaIntegrand& f, std::size_t M) {
  static constexpr double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                   0.8611363115940526};
  static constexpr double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                   0.3478548451374538};
  const double w = 1.0 / static_cast<double>(M);
  std::vector<double> avg(M);
  auto br = f.breaks.begin();
  for (std::size_t i = 0; i < M; ++i) {
    const double a = static_cast<double>(i) * w, b = a + w;
    while (br != f.breaks.end() && *br <= a) ++br;
    double lo = a, s = 0.0;
    auto it = br;
    for (;;) {
      const double hi = (it != f.breaks.end() && *it < b) ? *it : b;
      const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
      for (int q = 0; q < 4; ++q) s += gw[q] * half * f(mid + half * gx[q]);
      if (hi >= b) break;
      lo = hi;
      ++it;
    }
    avg[i] = s / w;
  }
  return avg;
}

/// sum_{i,j} a_i a_j c(|i - j|) by FFT autocorrelation.
inline double toeplitz_quadratic_form(const std::vector<double>& a, const std::vector<double>& c) {
  const std::size_t M = a.size();
  const std::size_t L = std::bit_ceil(2 * M);
  std::vector<std::complex<double>> buf(L);
  for (std::size_t i = 0; i < M; ++i) buf[i] = a[i];
  fft::forward(buf);
  for (auto& z : buf) z = std::norm(z);
  fft::backward(buf);
  double s = buf[0].real() / static_cast<double>(L) * c[0];
  for (std::size_t k = 1; k < M; ++k) s += 2.0 * buf[k].real() / static_cast<double>(L) * c[k];
  return s;
}

}  // namespace detail

/// ||f||^2 = H (2H - 1) int int f(u) f(v) |u - v|^{2H-2} du dv.
///
/// f is replaced by its averages over M equal cells, for which the double
/// integral is exact: cell pairs at offset k contribute w^{2H} gamma_H(k) with
/// gamma_H the fGn covariance. M doubles from 256 until the relative change
/// falls below `rel_tol`.
inline double lambda_norm_sq(const LambdaIntegrand& f, double H, double rel_tol = 1e-6,
                             std::size_t max_cells = std::size_t{1} << 18) {
  if (!(H > 0.5 && H < 1.0)) throw std::domain_error("lambda_norm_sq needs H in (1/2, 1)");
  auto at = [&](std::size_t M) {
    const auto a = detail::cell_averages(f, M);
    std::vector<double> c(M);
    for (std::size_t k = 0; k < M; ++k) c[k] = fgn_covariance(H, static_cast<double>(k));
    return std::pow(1.0 / static_cast<double>(M), 2.0 * H) * detail::toeplitz_quadratic_form(a, c);
  };
  double prev = at(256);
  for (std::size_t M = 512; M <= max_cells; M *= 2) {
    const double cur = at(M);
    if (!std::isfinite(cur)) break;
    if (std::abs(cur - prev) <= rel_tol * std::abs(cur) || (cur == 0.0 && prev == 0.0)) return cur;
    prev = cur;
  }
  throw LambdaNormError("lambda norm did not converge under refinement");
}

/// Left-endpoint Riemann-Stieltjes sum of f against the increments of Z.
inline double wiener_integral(std::span<const double> f_at_left, const HermitePath& Z) {
  if (f_at_left.size() != Z.intervals()) throw std::invalid_argument("integrand grid mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < f_at_left.size(); ++j)
    s += f_at_left[j] * (Z.values[j + 1] - Z.values[j]);
  return s;
}

/// f evaluated at the left endpoints j/n, j = 0..n-1.
inline std::vector<double> left_endpoints(const LambdaIntegrand& f, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = f(static_cast<double>(j) / static_cast<double>(n));
  return v;
}

inline double wiener_integral(const LambdaIntegrand& f, const HermitePath& Z) {
  return wiener_integral(left_endpoints(f, Z.intervals()), Z);
}

/// Taqqu horizon and grid for limit draws.
struct TaqquSettings {
  double T = 16384.0;
  std::size_t n = 1024;
  double delta = 1.0;
};

/// Integrand y -> G(x_probe, y) u0(y) from an interior Green row and u0,
/// extended linearly to the zero boundary values.
inline LambdaIntegrand green_integrand(std::span<const double> green_row,
                                      std::span<const double> u0, double h) {
  if (green_row.size() != u0.size()) throw std::invalid_argument("green row / u0 size mismatch");
  const std::size_t n = u0.size();
  std::vector<double> xs(n + 2), ys(n + 2, 0.0);
  for (std::size_t i = 0; i < n + 2; ++i) xs[i] = static_cast<double>(i) * h;
  xs[n + 1] = 1.0;
  for (std::size_t i = 0; i < n; ++i) ys[i + 1] = green_row[i] * u0[i];
  return LambdaIntegrand::from_grid(std::move(xs), std::move(ys));
}

/// Kernel row G(x_i, .) of the operator, via one Green solve against a unit mass at node i.
inline std::vector<double> green_row(const EllipticOperator& op, std::size_t i) {
  std::vector<double> e(op.size(), 0.0);
  e.at(i) = 1.0 / op.spec().h();
  return op.apply_green(e);
}

/// N draws of -(V_m / m!) int f dZ with a fresh Z per draw.
inline std::vector<double> limit_sampler(const LambdaIntegrand& f, const ChaosExpansion& chaos,
                                         int m, double H0, std::size_t N, std::uint64_t seed,
                                         const TaqquSettings& taqqu = {}, unsigned threads = 1,
                                         std::uint64_t experiment = 0x11A1u) {
  if (chaos.rank != m) throw std::invalid_argument("limit_sampler: chaos rank differs from m");
  const double coef = -chaos.coeff(m) / factorial(m);
  std::vector<double> out(N, 0.0);
  if (coef == 0.0) return out;
  const HermiteSimulator sim(m, H0, taqqu.T, taqqu.n, taqqu.delta);
  const auto fl = left_endpoints(f, taqqu.n);
  parallel_for(N, threads, [&](std::size_t r) {
    out[r] = coef * wiener_integral(fl, sim.sample(stream_key(seed, experiment, r)));
  });
  return out;
}

/// Limit draws at interior probe node `probe` for a solver problem.
inline std::vector<double> limit_sampler(const PerturbedProblem& problem, std::size_t probe,
                                         std::size_t N, std::uint64_t seed,
                                         const TaqquSettings& taqqu = {}, unsigned threads = 1) {
  const auto row = green_row(problem.op(), probe);
  const auto f = green_integrand(row, problem.u0(), problem.op().spec().h());
  return limit_sampler(f, problem.potential().chaos, problem.rank(), problem.H0(), N, seed, taqqu,
                       threads);
}

inline void write_samples_csv(const std::filesystem::path& path, std::span<const double> values) {
  std::vector<double> idx(values.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<double>(i);
  io::write_columns_csv(path, {"replicate", "value"}, {idx, values});
}

}  // namespace lrdhom
