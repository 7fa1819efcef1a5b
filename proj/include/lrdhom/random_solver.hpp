#pragma once

// The perturbed problem (P + q0 + q(x/eps)) u_eps = f with q = Phi(g),
// its homogenized limit u0, and the normalized fluctuation (u_eps - u0) / X(eps).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "lrdhom/core/io.hpp"
#include "lrdhom/green_operator.hpp"
#include "lrdhom/hermite_chaos.hpp"
#include "lrdhom/lrd_gaussian.hpp"

namespace lrdhom {

/// H = 1 + m (H0 - 1), the self-similarity index of the order-m Hermite process.
inline double hermite_index(int m, double H0) { return 1.0 + m * (H0 - 1.0); }

inline double checked_hermite_index(int m, double H0) {
  if (m < 1) throw std::domain_error("Hermite rank must be >= 1");
  require_hurst(H0, false);
  const double H = hermite_index(m, H0);
  if (!(H > 0.5)) throw std::domain_error("long-range dependence needs H0 > 1 - 1/(2m)");
  return H;
}

/// d(x) = sqrt(m! / (H (2H - 1))) x^H L(x)^m.
inline double scaling_d(double x, int m, double H0, const SlowVaryFn& L) {
  const double H = checked_hermite_index(m, H0);
  if (!(x > 0.0)) throw std::domain_error("scaling_d needs x > 0");
  return std::sqrt(factorial(m) / (H * (2.0 * H - 1.0))) * std::pow(x, H) * std::pow(L(x), m);
}

/// X(eps) = eps d(1 / eps).
inline double scaling_X(double eps, int m, double H0, const SlowVaryFn& L) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("scaling_X needs eps in (0, 1)");
  return eps * scaling_d(1.0 / eps, m, H0, L);
}

struct FluctuationDiagnostics {
  std::vector<double> I, Q, r;  // interior values
  double residual = 0.0;        // max |normalized + I - Q - r|
};

/// One realization. Grid functions include the two boundary zeros (n + 2 values).
struct FluctuationSample {
  double epsilon = 0.0;
  double X = 0.0;
  std::vector<double> x;
  std::vector<double> u_eps;
  std::vector<double> u0;
  std::vector<double> normalized;
  std::vector<double> q;  // interior potential values
  std::uint64_t seed = 0;
  std::optional<FluctuationDiagnostics> diagnostics;

  std::span<const double> interior(const std::vector<double>& full) const {
    return std::span<const double>(full).subspan(1, full.size() - 2);
  }
};

inline void write_sample_csv(const std::filesystem::path& path, const FluctuationSample& s) {
  io::write_columns_csv(path, {"x", "u_eps", "u0", "normalized"},
                        {s.x, s.u_eps, s.u0, s.normalized});
}

class GridResolutionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Solver for one (operator, potential, f) triple across eps values. Samplers
/// are built lazily per eps and shared; solve() is safe to call concurrently.
class PerturbedProblem {
 public:
  PerturbedProblem(const OperatorSpec& op, PotentialSpec pot, double H0, std::vector<double> f,
                   SlowVaryFn L)
      : op_(op), pot_(std::move(pot)), H0_(H0), f_(std::move(f)), L_(std::move(L)) {
    if (!pot_.phi.bounded())
      throw UnboundedPotentialError("unbounded potential cannot enter the elliptic solver");
    if (!(pot_.gamma <= op.q0))
      throw std::domain_error("potential bound gamma must not exceed q0");
    if (f_.size() != op.n) throw std::invalid_argument("right-hand side size mismatch");
    u0_ = op_.apply_green(f_);
  }

  PerturbedProblem(const OperatorSpec& op, PotentialSpec pot, double H0, std::vector<double> f)
      : PerturbedProblem(op, std::move(pot), H0, std::move(f), SlowVaryFn::fgn_example(H0)) {}

  /// f == c on the grid.
  static std::vector<double> constant_rhs(const OperatorSpec& op, double c = 1.0) {
    return std::vector<double>(op.n, c);
  }

  const EllipticOperator& op() const { return op_; }
  const PotentialSpec& potential() const { return pot_; }
  const std::vector<double>& u0() const { return u0_; }
  double H0() const { return H0_; }
  int rank() const { return pot_.chaos.rank; }
  double X(double eps) const { return scaling_X(eps, rank(), H0_, L_); }

  /// q(x_i / eps) on interior nodes from a fresh driver path.
  std::vector<double> sample_potential(double eps, std::uint64_t seed) const {
    const auto g = sample_driver(eps, seed);
    return apply_potential(pot_, std::span<const double>(g).subspan(1, op_.size()),
                           PotentialUse::solver);
  }

  /// Full sample: u_eps, u0 and normalized. Deterministic in (eps, seed).
  FluctuationSample solve(double eps, std::uint64_t seed, bool with_diagnostics = false) const {
    FluctuationSample s;
    s.epsilon = eps;
    s.seed = seed;
    s.X = X(eps);
    s.q = sample_potential(eps, seed);
    const auto u = op_.solve(s.q, f_);
    const std::size_t n = op_.size();
    s.x.resize(n + 2);
    s.u_eps.assign(n + 2, 0.0);
    s.u0.assign(n + 2, 0.0);
    s.normalized.assign(n + 2, 0.0);
    const double h = op_.spec().h();
    for (std::size_t i = 0; i < n + 2; ++i) s.x[i] = static_cast<double>(i) * h;
    s.x[n + 1] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      s.u_eps[i + 1] = u[i];
      s.u0[i + 1] = u0_[i];
      s.normalized[i + 1] = (u[i] - u0_[i]) / s.X;
    }
    if (with_diagnostics) s.diagnostics = decompose(s);
    return s;
  }

  /// I = G(q u0) / X, Q = G(q G(q u0)) / X, r = G(q G(q (u - u0))) / X.
  FluctuationDiagnostics decompose(const FluctuationSample& s) const {
    const std::size_t n = op_.size();
    auto qtimes = [&](std::span<const double> v) {
      std::vector<double> out(n);
      for (std::size_t i = 0; i < n; ++i) out[i] = s.q[i] * v[i];
      return out;
    };
    FluctuationDiagnostics d;
    const auto gqu0 = op_.apply_green(qtimes(u0_));
    const auto gqgqu0 = op_.apply_green(qtimes(gqu0));
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = s.u_eps[i + 1] - s.u0[i + 1];
    const auto rem = op_.apply_green(qtimes(op_.apply_green(qtimes(diff))));
    d.I.resize(n);
    d.Q.resize(n);
    d.r.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      d.I[i] = gqu0[i] / s.X;
      d.Q[i] = gqgqu0[i] / s.X;
      d.r[i] = rem[i] / s.X;
      d.residual = std::max(d.residual,
                            std::abs(s.normalized[i + 1] + d.I[i] - d.Q[i] - d.r[i]));
    }
    return d;
  }

 private:
  using Sampler = std::variant<FgnSampler, StationaryFgnSampler>;

  // g(x_i / eps) for i = 0..n+1.
  std::vector<double> sample_driver(double eps, std::uint64_t seed) const {
    const Sampler& sampler = sampler_for(eps);
    return std::visit([seed](const auto& sm) { return sm.sample(seed).values; }, sampler);
  }

  const Sampler& sampler_for(double eps) const {
    if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("eps must be in (0, 1)");
    const double h = op_.spec().h();
    if (h > eps / 8.0 * (1.0 + 1e-12))
      throw GridResolutionError("grid too coarse for eps: need h <= eps/8");
    std::lock_guard lock(mutex_);
    auto it = samplers_.find(eps);
    if (it != samplers_.end()) return *it->second;
    const double dx = h / eps;
    const std::size_t intervals = op_.size() + 1;
    std::unique_ptr<Sampler> sm;
    const double inv = 1.0 / dx;
    if (std::abs(inv - std::round(inv)) <= 1e-9 * inv)
      sm = std::make_unique<Sampler>(std::in_place_type<FgnSampler>, H0_, intervals, dx);
    else
      sm = std::make_unique<Sampler>(std::in_place_type<StationaryFgnSampler>, H0_, intervals, dx);
    return *samplers_.emplace(eps, std::move(sm)).first->second;
  }

  EllipticOperator op_;
  PotentialSpec pot_;
  double H0_;
  std::vector<double> f_;
  SlowVaryFn L_;
  std::vector<double> u0_;
  mutable std::mutex mutex_;
  mutable std::map<double, std::unique_ptr<Sampler>> samplers_;
};

/// Convenience one-shot solve.
inline FluctuationSample solve_perturbed(const OperatorSpec& spec, const PotentialSpec& pot,
                                         double H0, double eps, std::span<const double> f,
                                         std::uint64_t seed) {
  PerturbedProblem p(spec, pot, H0, std::vector<double>(f.begin(), f.end()));
  return p.solve(eps, seed);
}

inline FluctuationDiagnostics decompose_fluctuation(const FluctuationSample& s,
                                                    const PerturbedProblem& p) {
  return p.decompose(s);
}

}  // namespace lrdhom
