#pragma once

// Hermite polynomials (probabilists' convention), Gauss-Hermite quadrature
// under the standard Gaussian measure, chaos coefficients and Hermite rank of
// the potential shape Phi, and the covariance law of q = Phi(g).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lrdhom/core/io.hpp"
#include "lrdhom/core/parallel.hpp"
#include "lrdhom/core/rng.hpp"
#include "lrdhom/lrd_gaussian.hpp"
#include "lrdhom/stats.hpp"

namespace lrdhom {

inline constexpr int kMaxHermiteOrder = 64;

/// He_q(x) by H_{q+1} = x H_q - q H_{q-1}.
inline double hermite_poly(int q, double x) {
  if (q < 0 || q > kMaxHermiteOrder) throw std::domain_error("Hermite order out of range");
  if (q == 0) return 1.0;
  double prev = 1.0, cur = x;
  for (int k = 1; k < q; ++k) {
    const double next = x * cur - k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

inline double factorial(int q) { return std::tgamma(q + 1.0); }

/// Gauss-Hermite rule for E[f(X)], X ~ N(0, 1). Weights sum to one.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussHermiteRule(int n) {
    if (n < 1 || n > 300) throw std::domain_error("Gauss-Hermite size must be in [1, 300]");
    // Golub-Welsch on the Jacobi matrix of the monic He_k recurrence.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(std::max(n - 1, 0));
    for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    nodes.assign(eig.eigenvalues().data(), eig.eigenvalues().data() + n);
    // Newton polish on the orthonormal p_n, then Christoffel weights 1 / sum p_k^2.
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
      double x = nodes[i];
      for (int it = 0; it < 3; ++it) {
        auto [pn, pn1, sum] = orthonormal(n, x);
        (void)sum;
        const double step = pn / (std::sqrt(static_cast<double>(n)) * pn1);
        if (std::isfinite(step)) x -= step;
      }
      nodes[i] = x;
      weights[i] = 1.0 / std::get<2>(orthonormal(n, x));
    }
    // Enforce exact symmetry so odd integrands cancel pairwise.
    for (int i = 0; i < n / 2; ++i) {
      const int j = n - 1 - i;
      const double x = 0.5 * (nodes[j] - nodes[i]);
      const double w = 0.5 * (weights[i] + weights[j]);
      nodes[i] = -x;
      nodes[j] = x;
      weights[i] = weights[j] = w;
    }
    if (n % 2 == 1) nodes[n / 2] = 0.0;
  }

  std::size_t size() const { return nodes.size(); }

  template <class F>
  double expect(F&& f) const {
    // Pair symmetric nodes so that odd f sums to zero exactly.
    const std::size_t n = nodes.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n / 2; ++i) {
      const std::size_t j = n - 1 - i;
      s += weights[i] * (f(nodes[i]) + f(nodes[j]));
    }
    if (n % 2 == 1) s += weights[n / 2] * f(nodes[n / 2]);
    return s;
  }

 private:
  // Returns (p_n(x), p_{n-1}(x), sum_{k<n} p_k(x)^2) for orthonormal p_k = He_k / sqrt(k!).
  static std::tuple<double, double, double> orthonormal(int n, double x) {
    double prev = 0.0, cur = 1.0, sum = 0.0;
    for (int k = 0; k < n; ++k) {
      sum += cur * cur;
      const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) /
                          std::sqrt(static_cast<double>(k + 1));
      prev = cur;
      cur = next;
    }
    return {cur, prev, sum};
  }
};

// ---------------------------------------------------------------------------
// Potential catalog

enum class PhiKind { sin, centered_cos, pure_hermite };

/// Catalog entry a * shape(x). pure_hermite(m) is He_m and unbounded.
struct PhiFn {
  PhiKind kind = PhiKind::sin;
  double amplitude = 1.0;
  int order = 1;  // pure_hermite only

  static PhiFn sin(double a = 1.0) { return {PhiKind::sin, a, 1}; }
  static PhiFn centered_cos(double a = 1.0) { return {PhiKind::centered_cos, a, 2}; }
  static PhiFn pure_hermite(int m, double a = 1.0) {
    if (m < 1 || m > kMaxHermiteOrder) throw std::domain_error("pure_hermite order out of range");
    return {PhiKind::pure_hermite, a, m};
  }

  double shape(double x) const {
    switch (kind) {
      case PhiKind::sin: return std::sin(x);
      case PhiKind::centered_cos: return std::cos(x) - std::exp(-0.5);
      case PhiKind::pure_hermite: return hermite_poly(order, x);
    }
    return 0.0;
  }
  double operator()(double x) const { return amplitude * shape(x); }

  bool bounded() const { return kind != PhiKind::pure_hermite; }

  /// sup |Phi| over the real line.
  double sup_bound() const {
    switch (kind) {
      case PhiKind::sin: return std::abs(amplitude);
      case PhiKind::centered_cos: return std::abs(amplitude) * (1.0 + std::exp(-0.5));
      case PhiKind::pure_hermite: return std::numeric_limits<double>::infinity();
    }
    return 0.0;
  }

  /// Catalog attribute: int |Phi^(xi)| (1 + |xi|^3) d xi finite. Documented, not computed.
  bool fourier_condition() const { return bounded(); }

  std::string name() const {
    switch (kind) {
      case PhiKind::sin: return "sin";
      case PhiKind::centered_cos: return "centered_cos";
      case PhiKind::pure_hermite: return "pure_hermite";
    }
    return "?";
  }
};

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChaosExpansion {
  std::vector<double> coeffs;  // V_0..V_Qmax, V_q = E[Phi(X) He_q(X)]
  int rank = 0;                // smallest q with |V_q| / sqrt(q!) > rank_tolerance (of the shape)
  double l2_norm_sq = 0.0;     // sum_q V_q^2 / q!
  double quadrature_norm_sq = 0.0;  // E[Phi^2] by quadrature
  double rank_tolerance = 1e-10;
  double tail_tolerance = 1e-8;
  int nodes = 0;

  int qmax() const { return static_cast<int>(coeffs.size()) - 1; }
  double coeff(int q) const { return q <= qmax() ? coeffs[static_cast<std::size_t>(q)] : 0.0; }
  /// V_q^2 / q!
  double energy(int q) const {
    const double v = coeff(q);
    return v * v / factorial(q);
  }
};

/// V_q by Gauss-Hermite quadrature with `nodes` points.
///
/// The rank is read off the unit-amplitude shape and coefficients are scaled
/// afterwards, so a zero amplitude keeps the catalog rank with V == 0.
inline ChaosExpansion chaos_coefficients(const PhiFn& phi, int qmax, int nodes) {
  if (qmax < 1 || qmax > kMaxHermiteOrder) throw std::domain_error("Qmax out of range");
  if (nodes < 2 * qmax) throw std::domain_error("chaos_coefficients needs nodes >= 2 Qmax");
  const GaussHermiteRule rule(nodes);
  ChaosExpansion c;
  c.nodes = nodes;
  c.coeffs.assign(static_cast<std::size_t>(qmax) + 1, 0.0);

  // Normalized coefficients E[shape(X) p_q(X)] with p_q = He_q / sqrt(q!).
  std::vector<double> normalized(static_cast<std::size_t>(qmax) + 1, 0.0);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double x = rule.nodes[i];
    const double fw = rule.weights[i] * phi.shape(x);
    double prev = 0.0, cur = 1.0;
    for (int q = 0; q <= qmax; ++q) {
      normalized[static_cast<std::size_t>(q)] += fw * cur;
      const double next = (x * cur - std::sqrt(static_cast<double>(q)) * prev) /
                          std::sqrt(static_cast<double>(q + 1));
      prev = cur;
      cur = next;
    }
  }
  const double shape_energy = rule.expect([&](double x) {
    const double v = phi.shape(x);
    return v * v;
  });
  double captured = 0.0;
  c.rank = -1;
  for (int q = 0; q <= qmax; ++q) {
    const double a = normalized[static_cast<std::size_t>(q)];
    captured += a * a;
    if (c.rank < 0 && std::abs(a) > c.rank_tolerance) c.rank = q;
  }
  if (c.rank < 0) throw std::domain_error("potential shape has no chaos component up to Qmax");
  if (c.rank == 0) throw std::domain_error("potential shape is not centered (Hermite rank 0)");
  if (shape_energy - captured > c.tail_tolerance * shape_energy)
    throw QuadratureError("chaos expansion not converged at Qmax = " + std::to_string(qmax));

  const double a = phi.amplitude;
  for (int q = 0; q <= qmax; ++q) {
    c.coeffs[static_cast<std::size_t>(q)] =
        a * normalized[static_cast<std::size_t>(q)] * std::sqrt(factorial(q));
  }
  c.l2_norm_sq = a * a * captured;
  c.quadrature_norm_sq = a * a * shape_energy;
  return c;
}

inline io::json to_json(const ChaosExpansion& c) {
  return io::json{{"coeffs", c.coeffs},
                  {"rank", c.rank},
                  {"l2_norm_sq", c.l2_norm_sq},
                  {"quadrature_norm_sq", c.quadrature_norm_sq},
                  {"rank_tolerance", c.rank_tolerance},
                  {"tail_tolerance", c.tail_tolerance},
                  {"nodes", c.nodes}};
}

inline ChaosExpansion chaos_from_json(const io::json& j) {
  ChaosExpansion c;
  c.coeffs = j.at("coeffs").get<std::vector<double>>();
  c.rank = j.at("rank").get<int>();
  c.l2_norm_sq = j.at("l2_norm_sq").get<double>();
  c.quadrature_norm_sq = j.value("quadrature_norm_sq", c.l2_norm_sq);
  c.rank_tolerance = j.at("rank_tolerance").get<double>();
  c.tail_tolerance = j.at("tail_tolerance").get<double>();
  c.nodes = j.value("nodes", 0);
  return c;
}

// ---------------------------------------------------------------------------
// Potential

struct PotentialSpec {
  PhiFn phi;
  double gamma = 1.0;  // |Phi| <= gamma; infinite for unbounded shapes
  ChaosExpansion chaos;

  int rank() const { return chaos.rank; }
};

/// Builds a catalog potential, checks sup |Phi| <= gamma on a dense grid.
inline PotentialSpec make_potential(const PhiFn& phi, int qmax = 32, int nodes = 96) {
  PotentialSpec spec{phi, phi.sup_bound(), chaos_coefficients(phi, qmax, nodes)};
  if (phi.bounded()) {
    double sup = 0.0;
    for (int i = -20000; i <= 20000; ++i) sup = std::max(sup, std::abs(phi(i * 1e-3)));
    if (sup > spec.gamma * (1.0 + 1e-12))
      throw std::logic_error("catalog bound violated for " + phi.name());
  }
  return spec;
}

struct AutocovValue {
  double value = 0.0;
  double tail_bound = 0.0;
};

/// gamma_q = sum_{n >= m} V_n^2 / n! * gamma_g^n, truncated at Qmax.
inline AutocovValue potential_autocov(const ChaosExpansion& chaos, double gamma_g) {
  if (!(std::abs(gamma_g) <= 1.0)) throw std::domain_error("|gamma_g| must be <= 1");
  AutocovValue r;
  double power = 1.0;
  for (int n = 0; n <= chaos.qmax(); ++n) {
    if (n >= chaos.rank) r.value += chaos.energy(n) * power;
    power *= gamma_g;
  }
  double captured = 0.0;
  for (int n = 0; n <= chaos.qmax(); ++n) captured += chaos.energy(n);
  r.tail_bound = std::max(0.0, chaos.quadrature_norm_sq - captured) * std::abs(power);
  return r;
}

enum class PotentialUse { solver, taqqu };

class UnboundedPotentialError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// q = Phi(g) pointwise.
inline std::vector<double> apply_potential(const PotentialSpec& spec, std::span<const double> g,
                                           PotentialUse use = PotentialUse::solver) {
  if (use == PotentialUse::solver && !spec.phi.bounded())
    throw UnboundedPotentialError("unbounded potential " + spec.phi.name() +
                                  " cannot enter the elliptic solver");
  std::vector<double> q(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) q[i] = spec.phi(g[i]);
  return q;
}

inline std::vector<double> apply_potential(const PotentialSpec& spec, const GaussianPath& g,
                                           PotentialUse use = PotentialUse::solver) {
  return apply_potential(spec, std::span<const double>(g.values), use);
}

struct AutocovFit {
  std::vector<double> lags;
  std::vector<double> empirical;  // replicate mean of the per-path estimator
  std::vector<double> mc_error;   // standard error across replicates
  std::vector<double> theory;     // potential_autocov at the exact fGn covariance
  double slope = 0.0;
  double slope_error = 0.0;
  double max_abs_z = 0.0;         // max |empirical - theory| / mc_error
};

/// Empirical autocovariance of q = Phi(g) for unit-lag fGn g and its log-log decay slope.
inline AutocovFit autocov_decay_fit(const PotentialSpec& spec, double H0,
                                    std::span<const double> lags, std::size_t replicates,
                                    std::uint64_t seed, std::size_t path_length = 1u << 16,
                                    unsigned threads = 1) {
  if (lags.size() < 4) throw std::invalid_argument("autocov_decay_fit needs at least 4 lags");
  const auto [lo, hi] = std::minmax_element(lags.begin(), lags.end());
  if (!(*lo >= 1.0) || *hi < 10.0 * *lo)
    throw std::invalid_argument("lags must span at least one decade");
  if (*hi >= static_cast<double>(path_length) / 2)
    throw std::invalid_argument("path too short for the largest lag");
  if (replicates < 2) throw std::invalid_argument("need at least two replicates");

  const FgnSampler sampler(H0, path_length - 1, 1.0);
  std::vector<std::size_t> lag_idx(lags.size());
  for (std::size_t l = 0; l < lags.size(); ++l) lag_idx[l] = static_cast<std::size_t>(lags[l]);

  std::vector<std::vector<double>> per_rep(replicates, std::vector<double>(lags.size()));
  parallel_for(replicates, threads, [&](std::size_t r) {
    const auto g = sampler.sample(stream_key(seed, 0xA17C0u, r));
    const auto q = apply_potential(spec, g, PotentialUse::taqqu);
    for (std::size_t l = 0; l < lag_idx.size(); ++l) {
      const std::size_t h = lag_idx[l];
      double s = 0.0;
      for (std::size_t k = 0; k + h < q.size(); ++k) s += q[k] * q[k + h];
      per_rep[r][l] = s / static_cast<double>(q.size() - h);
    }
  });

  AutocovFit fit;
  fit.lags.assign(lags.begin(), lags.end());
  std::vector<double> column(replicates), abs_emp(lags.size());
  for (std::size_t l = 0; l < lags.size(); ++l) {
    for (std::size_t r = 0; r < replicates; ++r) column[r] = per_rep[r][l];
    fit.empirical.push_back(stats::mean(column));
    fit.mc_error.push_back(stats::standard_error(column));
    fit.theory.push_back(potential_autocov(spec.chaos, fgn_covariance(H0, lags[l])).value);
    abs_emp[l] = std::abs(fit.empirical.back());
    const double z = std::abs(fit.empirical.back() - fit.theory.back()) / fit.mc_error.back();
    fit.max_abs_z = std::max(fit.max_abs_z, z);
  }
  const auto slope = stats::fit_loglog_slope(lags, abs_emp);
  fit.slope = slope.slope;
  fit.slope_error = slope.std_error;
  return fit;
}

}  // namespace lrdhom
