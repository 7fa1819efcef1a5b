#pragma once

// Experiment configuration, seeded Monte Carlo runners and result tables.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lrdhom/core/io.hpp"
#include "lrdhom/core/parallel.hpp"
#include "lrdhom/core/rng.hpp"
#include "lrdhom/green_operator.hpp"
#include "lrdhom/hermite_chaos.hpp"
#include "lrdhom/hermite_limit.hpp"
#include "lrdhom/lrd_gaussian.hpp"
#include "lrdhom/random_solver.hpp"
#include "lrdhom/stats.hpp"

namespace lrdhom {

inline constexpr const char* kVersion = "0.1.0";

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ExperimentKind { rate, fluctuation, autocov, hermite_var, isometry };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::rate: return "rate";
    case ExperimentKind::fluctuation: return "fluctuation-dist";
    case ExperimentKind::autocov: return "autocov";
    case ExperimentKind::hermite_var: return "hermite-var";
    case ExperimentKind::isometry: return "isometry";
  }
  return "?";
}

inline ExperimentKind parse_kind(const std::string& s) {
  for (auto k : {ExperimentKind::rate, ExperimentKind::fluctuation, ExperimentKind::autocov,
                 ExperimentKind::hermite_var, ExperimentKind::isometry})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown experiment kind: " + s);
}

struct PotentialConfig {
  std::string phi = "sin";  // sin | centered_cos | pure_hermite
  double amplitude = 1.0;
  int order = 1;
  int qmax = 32;
  int nodes = 96;
  bool operator==(const PotentialConfig&) const = default;

  PhiFn make_phi() const {
    if (phi == "sin") return PhiFn::sin(amplitude);
    if (phi == "centered_cos") return PhiFn::centered_cos(amplitude);
    if (phi == "pure_hermite") return PhiFn::pure_hermite(order, amplitude);
    throw ConfigError("unknown potential: " + phi);
  }
  PotentialSpec make() const { return make_potential(make_phi(), qmax, nodes); }
};

struct StepIntegrand {
  std::vector<double> edges{0.0, 1.0};
  std::vector<double> values{1.0};
  bool operator==(const StepIntegrand&) const = default;
  LambdaIntegrand make() const { return LambdaIntegrand::steps(edges, values); }
  std::string label() const {
    std::ostringstream os;
    os << "steps[";
    for (std::size_t i = 0; i < values.size(); ++i)
      os << (i ? ";" : "") << edges[i] << "-" << edges[i + 1] << ":" << values[i];
    os << "]";
    return os.str();
  }
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::rate;
  std::string op_kind = "laplace";  // laplace | spectral_fractional
  double q0 = 1.0;
  std::size_t n = 4095;
  double s = 1.0;
  std::size_t modes = 0;
  PotentialConfig potential;
  int m = 1;
  double H0 = 0.75;
  std::string L = "fgn_example";  // fgn_example | constant | log
  std::vector<double> eps{0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625, 0.001953125};
  std::size_t replicates = 200;
  std::size_t grid_n = 1024;  // Hermite path grid
  std::vector<double> probes{0.5};
  std::uint64_t seed = 1;
  std::string output = "results";
  std::vector<double> lags{4, 8, 16, 32, 64, 128, 256, 512, 1024};
  std::size_t path_length = 65536;
  std::vector<double> horizons{16384};
  double delta = 1.0;
  std::vector<StepIntegrand> integrands{StepIntegrand{}};
  std::size_t isometry_replicates = 10000;

  bool operator==(const ExperimentConfig&) const = default;

  OperatorSpec operator_spec() const {
    if (op_kind == "laplace") return OperatorSpec::laplace(n, q0);
    if (op_kind == "spectral_fractional") return OperatorSpec::fractional(n, s, q0, modes);
    throw ConfigError("unknown operator kind: " + op_kind);
  }

  SlowVaryFn slow_vary() const {
    if (L == "fgn_example") return SlowVaryFn::fgn_example(H0);
    if (L == "constant") return SlowVaryFn::constant(1.0);
    if (L == "log") return SlowVaryFn::logarithmic(1.0 / *std::min_element(eps.begin(), eps.end()));
    throw ConfigError("unknown slowly varying function: " + L);
  }

  TaqquSettings taqqu(double T) const { return {T, grid_n, delta}; }

  /// Checks the invariants shared by all experiment kinds.
  void validate() const {
    if (m < 1) throw ConfigError("m must be >= 1");
    if (!(H0 > 1.0 - 1.0 / (2.0 * m) && H0 < 1.0))
      throw ConfigError("H0 must lie in (1 - 1/(2m), 1)");
    if (replicates < 2) throw ConfigError("replicates must be >= 2");
    if (kind == ExperimentKind::rate || kind == ExperimentKind::fluctuation) {
      const auto spec = operator_spec();
      try {
        spec.validate();
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
      if (eps.empty()) throw ConfigError("eps list is empty");
      for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!(eps[i] > 0.0 && eps[i] < 1.0)) throw ConfigError("eps values must be in (0, 1)");
        if (i > 0 && !(eps[i] < eps[i - 1])) throw ConfigError("eps list must be strictly decreasing");
        if (spec.h() > eps[i] / 8.0 * (1.0 + 1e-12))
          throw ConfigError("grid too coarse: need h <= eps/8 for every eps");
      }
      if (kind == ExperimentKind::rate && eps.size() < 4)
        throw ConfigError("rate fit needs at least 4 eps values");
      for (double x : probes)
        if (!(x > 0.0 && x < 1.0)) throw ConfigError("probes must be interior points");
    }
    if (kind == ExperimentKind::hermite_var || kind == ExperimentKind::isometry) {
      if (horizons.empty()) throw ConfigError("horizons list is empty");
    }
    (void)slow_vary();
  }
};

namespace detail {

inline void check_keys(const io::json& j, const std::set<std::string>& allowed,
                       const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
void read_opt(const io::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const io::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline io::json to_json(const ExperimentConfig& c) {
  io::json integrands = io::json::array();
  for (const auto& f : c.integrands) integrands.push_back({{"edges", f.edges}, {"values", f.values}});
  return io::json{
      {"kind", to_string(c.kind)},
      {"operator", {{"kind", c.op_kind}, {"q0", c.q0}, {"n", c.n}, {"s", c.s}, {"modes", c.modes}}},
      {"potential",
       {{"phi", c.potential.phi},
        {"amplitude", c.potential.amplitude},
        {"order", c.potential.order},
        {"qmax", c.potential.qmax},
        {"nodes", c.potential.nodes}}},
      {"m", c.m},
      {"H0", c.H0},
      {"L", c.L},
      {"eps", c.eps},
      {"replicates", c.replicates},
      {"grid_n", c.grid_n},
      {"probes", c.probes},
      {"seed", c.seed},
      {"output", c.output},
      {"lags", c.lags},
      {"path_length", c.path_length},
      {"taqqu", {{"horizons", c.horizons}, {"delta", c.delta}}},
      {"integrands", integrands},
      {"isometry_replicates", c.isometry_replicates}};
}

/// Strict parse: unknown keys anywhere are rejected; absent keys keep defaults.
inline ExperimentConfig config_from_json(const io::json& j) {
  using detail::read_opt;
  detail::check_keys(j,
                     {"kind", "operator", "potential", "m", "H0", "L", "eps", "replicates",
                      "grid_n", "probes", "seed", "output", "lags", "path_length", "taqqu",
                      "integrands", "isometry_replicates"},
                     "config");
  ExperimentConfig c;
  if (!j.contains("kind")) throw ConfigError("config needs 'kind'");
  c.kind = parse_kind(j.at("kind").get<std::string>());
  if (j.contains("operator")) {
    const auto& o = j.at("operator");
    detail::check_keys(o, {"kind", "q0", "n", "s", "modes"}, "operator");
    read_opt(o, "kind", c.op_kind);
    read_opt(o, "q0", c.q0);
    read_opt(o, "n", c.n);
    read_opt(o, "s", c.s);
    read_opt(o, "modes", c.modes);
  }
  if (j.contains("potential")) {
    const auto& p = j.at("potential");
    detail::check_keys(p, {"phi", "amplitude", "order", "qmax", "nodes"}, "potential");
    read_opt(p, "phi", c.potential.phi);
    read_opt(p, "amplitude", c.potential.amplitude);
    read_opt(p, "order", c.potential.order);
    read_opt(p, "qmax", c.potential.qmax);
    read_opt(p, "nodes", c.potential.nodes);
  }
  read_opt(j, "m", c.m);
  read_opt(j, "H0", c.H0);
  read_opt(j, "L", c.L);
  read_opt(j, "eps", c.eps);
  read_opt(j, "replicates", c.replicates);
  read_opt(j, "grid_n", c.grid_n);
  read_opt(j, "probes", c.probes);
  read_opt(j, "seed", c.seed);
  read_opt(j, "output", c.output);
  read_opt(j, "lags", c.lags);
  read_opt(j, "path_length", c.path_length);
  if (j.contains("taqqu")) {
    const auto& t = j.at("taqqu");
    detail::check_keys(t, {"horizons", "delta"}, "taqqu");
    read_opt(t, "horizons", c.horizons);
    read_opt(t, "delta", c.delta);
  }
  if (j.contains("integrands")) {
    c.integrands.clear();
    for (const auto& f : j.at("integrands")) {
      detail::check_keys(f, {"edges", "values"}, "integrand");
      StepIntegrand s;
      read_opt(f, "edges", s.edges);
      read_opt(f, "values", s.values);
      c.integrands.push_back(std::move(s));
    }
  }
  read_opt(j, "isometry_replicates", c.isometry_replicates);
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io::IoError("cannot read config: " + path.string());
  io::json j;
  try {
    j = io::json::parse(in);
  } catch (const io::json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return config_from_json(j);
}

inline std::uint64_t config_hash(const ExperimentConfig& c) {
  auto j = to_json(c);
  j.erase("output");
  return io::fnv1a(j.dump());
}

// ---------------------------------------------------------------------------
// Result tables

struct ResultRow {
  std::string params;
  std::string statistic;
  double value = 0.0;
  double std_error = 0.0;
  bool operator==(const ResultRow&) const = default;
};

struct Verdict {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ResultTable {
  std::string experiment;
  std::vector<ResultRow> rows;
  std::vector<Verdict> verdicts;
  io::json metadata = io::json::object();

  void add(std::string params, std::string statistic, double value, double se = 0.0) {
    rows.push_back({std::move(params), std::move(statistic), value, se});
  }
  void verdict(std::string name, bool pass, std::string detail) {
    verdicts.push_back({std::move(name), pass, std::move(detail)});
  }
  bool all_pass() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
  }
  const ResultRow* find(const std::string& params, const std::string& statistic) const {
    for (const auto& r : rows)
      if (r.params == params && r.statistic == statistic) return &r;
    return nullptr;
  }
};

/// Largest |a - b| over matching rows, or infinity if the tables differ in shape.
inline double max_row_difference(const ResultTable& a, const ResultTable& b) {
  if (a.rows.size() != b.rows.size()) return std::numeric_limits<double>::infinity();
  double d = 0.0;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const auto& x = a.rows[i];
    const auto& y = b.rows[i];
    if (x.params != y.params || x.statistic != y.statistic)
      return std::numeric_limits<double>::infinity();
    d = std::max({d, std::abs(x.value - y.value), std::abs(x.std_error - y.std_error)});
  }
  return d;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

inline io::json to_json(const ResultTable& t) {
  io::json rows = io::json::array(), verdicts = io::json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"params", r.params}, {"statistic", r.statistic}, {"value", r.value},
                    {"std_error", r.std_error}});
  for (const auto& v : t.verdicts)
    verdicts.push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
  return {{"experiment", t.experiment}, {"metadata", t.metadata}, {"verdicts", verdicts},
          {"rows", rows}, {"all_pass", t.all_pass()}};
}

/// Writes `<dir>/<experiment>.csv` (columns experiment, params, statistic,
/// value, std_error) and `<dir>/<experiment>.json`.
inline void write_result_table(const std::filesystem::path& dir, const ResultTable& t) {
  {
    auto out = io::open_out(dir / (t.experiment + ".csv"));
    out << "experiment,params,statistic,value,std_error\n" << std::setprecision(17);
    for (const auto& r : t.rows)
      out << t.experiment << ",\"" << r.params << "\"," << r.statistic << "," << r.value << ","
          << r.std_error << '\n';
  }
  auto out = io::open_out(dir / (t.experiment + ".json"));
  out << to_json(t).dump(2) << '\n';
}

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void stamp(ResultTable& t, const ExperimentConfig& cfg, unsigned threads,
                  const Stopwatch& clock, io::json tolerances) {
  t.metadata = {{"config_hash", io::hex64(config_hash(cfg))},
                {"seed", cfg.seed},
                {"version", kVersion},
                {"wall_time_s", clock.seconds()},
                {"threads", threads},
                {"tolerances", std::move(tolerances)},
                {"config", to_json(cfg)}};
}

inline std::string eps_label(double e) { return "eps=" + fmt(e); }

// Experiment ids separate the RNG streams of different runners.
enum StreamId : std::uint64_t {
  kRateStream = 0x1000,
  kFluctStream = 0x2000,
  kOracleStream = 0x3000,
  kClosedLoopStream = 0x3800,
  kAutocovStream = 0x4000,
  kHermiteStream = 0x5000,
  kIsometryStream = 0x6000,
};

inline std::size_t nearest_node(const OperatorSpec& spec, double x) {
  const double idx = std::round(x / spec.h()) - 1.0;
  return static_cast<std::size_t>(std::clamp(idx, 0.0, static_cast<double>(spec.n - 1)));
}

}  // namespace detail

inline constexpr double kRateTolerance = 0.15;

/// E ||u_eps - u0||^2 per eps, log-log slope and regime verdict.
inline ResultTable run_rate_experiment(const ExperimentConfig& cfg, unsigned threads = 1) {
  if (cfg.kind != ExperimentKind::rate) throw ConfigError("run_rate_experiment needs kind = rate");
  cfg.validate();
  detail::Stopwatch clock;
  const auto spec = cfg.operator_spec();
  const auto pot = cfg.potential.make();
  if (pot.rank() != cfg.m) throw ConfigError("potential rank differs from m");
  PerturbedProblem problem(spec, pot, cfg.H0, PerturbedProblem::constant_rhs(spec), cfg.slow_vary());

  ResultTable t;
  t.experiment = "rate";
  std::vector<double> means;
  for (std::size_t e = 0; e < cfg.eps.size(); ++e) {
    const double eps = cfg.eps[e];
    std::vector<double> err(cfg.replicates);
    parallel_for(cfg.replicates, threads, [&](std::size_t r) {
      const auto s = problem.solve(eps, stream_key(cfg.seed, detail::kRateStream + e, r));
      double acc = 0.0;
      for (std::size_t i = 1; i + 1 < s.u_eps.size(); ++i) {
        const double d = s.u_eps[i] - s.u0[i];
        acc += d * d;
      }
      err[r] = acc * spec.h();
    });
    means.push_back(stats::mean(err));
    t.add(detail::eps_label(eps), "mean_sq_error", means.back(), stats::standard_error(err));
  }
  const auto fit = stats::fit_loglog_slope(cfg.eps, means);
  const double lrd = 2.0 * cfg.m * (1.0 - cfg.H0);
  const double sing = 2.0 * spec.beta();
  t.add("fit", "slope", fit.slope, fit.std_error);
  t.add("fit", "intercept", fit.intercept);
  t.add("theory", "exponent_lrd", lrd);
  t.add("theory", "exponent_singularity", sing);

  std::string regime;
  double target;
  if (std::abs(lrd - sing) < 1e-9) {
    regime = "log_corrected";
    target = sing;
  } else if (lrd < sing) {
    regime = "lrd";
    target = lrd;
  } else {
    regime = "singularity";
    target = sing;
  }
  t.add("theory", "expected_slope", target);
  const bool ok = std::abs(fit.slope - target) <= kRateTolerance;
  t.verdict("rate_slope_" + regime, ok,
            "slope " + fmt(fit.slope) + " +- " + fmt(fit.std_error) + " vs " + fmt(target) +
                " +- " + fmt(kRateTolerance));
  detail::stamp(t, cfg, threads, clock, {{"slope", kRateTolerance}});
  return t;
}

/// Mean KS statistic between random halves of `pool`.
inline double self_ks(std::span<const double> pool, std::size_t splits, std::uint64_t key) {
  std::vector<double> p(pool.begin(), pool.end());
  const std::size_t half = p.size() / 2;
  double s = 0.0;
  for (std::size_t k = 0; k < splits; ++k) {
    CounterStream rng(stream_key(key, 0x5E1F, k));
    std::shuffle(p.begin(), p.end(), rng);
    s += stats::ks_two_sample(std::span<const double>(p).first(half),
                              std::span<const double>(p).subspan(half, half));
  }
  return s / static_cast<double>(splits);
}

inline constexpr double kKsFactor = 1.5;
inline constexpr double kVarianceRatioLow = 0.8;
inline constexpr double kVarianceRatioHigh = 1.25;
inline constexpr double kIsometryTolerance = 0.05;

/// Lipschitz check by refinement: finite and stable within 5% from n = 127 to 255.
inline bool lipschitz_hypothesis_met(const OperatorSpec& spec, double* value = nullptr) {
  auto coarse = spec, fine = spec;
  coarse.n = 127;
  fine.n = 255;
  if (coarse.modes) coarse.modes = std::max(coarse.modes, coarse.n);
  const double a = lipschitz_diagnostic(build_green(coarse));
  const double b = lipschitz_diagnostic(build_green(fine));
  if (value) *value = b;
  return std::isfinite(a) && std::isfinite(b) && std::abs(b - a) <= 0.05 * a;
}

/// Normalized fluctuation at the smallest eps against draws of the limit law.
inline ResultTable run_fluctuation_experiment(const ExperimentConfig& cfg, unsigned threads = 1) {
  if (cfg.kind != ExperimentKind::fluctuation)
    throw ConfigError("run_fluctuation_experiment needs kind = fluctuation-dist");
  cfg.validate();
  detail::Stopwatch clock;
  const auto spec = cfg.operator_spec();
  double lip = 0.0;
  if (!lipschitz_hypothesis_met(spec, &lip))
    throw std::domain_error("Green kernel is not Lipschitz (hypothesis not met)");
  const auto pot = cfg.potential.make();
  if (pot.rank() != cfg.m) throw ConfigError("potential rank differs from m");
  PerturbedProblem problem(spec, pot, cfg.H0, PerturbedProblem::constant_rhs(spec), cfg.slow_vary());
  const double eps = cfg.eps.back();
  const std::size_t N = cfg.replicates;
  const auto taqqu = cfg.taqqu(cfg.horizons.back());

  ResultTable t;
  t.experiment = "fluctuation";
  t.add("operator", "lipschitz", lip);
  t.add(detail::eps_label(eps), "X", problem.X(eps));

  std::vector<std::vector<double>> samples(N);
  parallel_for(N, threads, [&](std::size_t r) {
    samples[r] = problem.solve(eps, stream_key(cfg.seed, detail::kFluctStream, r)).normalized;
  });

  for (std::size_t p = 0; p < cfg.probes.size(); ++p) {
    const std::size_t node = detail::nearest_node(spec, cfg.probes[p]);
    const std::string label = "x=" + fmt(spec.x(node));
    std::vector<double> fl(N);
    for (std::size_t r = 0; r < N; ++r) fl[r] = samples[r][node + 1];

    const auto row = green_row(problem.op(), node);
    const auto f = green_integrand(row, problem.u0(), spec.h());
    const auto oracle = limit_sampler(f, pot.chaos, cfg.m, cfg.H0, 2 * N,
                                      stream_key(cfg.seed, detail::kOracleStream, p), taqqu, threads);
    const double ks = stats::ks_two_sample(fl, oracle);
    const double self = self_ks(oracle, 20, stream_key(cfg.seed, detail::kOracleStream, p));
    const double energy = stats::energy_distance(fl, oracle);
    const double var_fl = stats::variance(fl), var_or = stats::variance(oracle);
    const double ratio = (var_fl == 0.0 && var_or == 0.0) ? 1.0 : var_fl / var_or;

    const double coef = pot.chaos.coeff(cfg.m) / factorial(cfg.m);
    const double predicted = coef * coef * lambda_norm_sq(f, hermite_index(cfg.m, cfg.H0));
    const auto loop = limit_sampler(f, pot.chaos, cfg.m, cfg.H0, cfg.isometry_replicates,
                                    stream_key(cfg.seed, detail::kClosedLoopStream, p), taqqu,
                                    threads);
    const double var_loop = stats::variance(loop);
    const double loop_ratio = predicted == 0.0 ? (var_loop == 0.0 ? 1.0 : 0.0) : var_loop / predicted;

    t.add(label, "fluct_mean", stats::mean(fl), stats::standard_error(fl));
    t.add(label, "fluct_variance", var_fl, stats::variance_standard_error(fl));
    t.add(label, "fluct_skewness", stats::skewness(fl));
    t.add(label, "limit_mean", stats::mean(oracle), stats::standard_error(oracle));
    t.add(label, "limit_variance", var_or, stats::variance_standard_error(oracle));
    t.add(label, "ks", ks);
    t.add(label, "self_ks", self);
    t.add(label, "energy_distance", energy);
    t.add(label, "variance_ratio", ratio);
    t.add(label, "isometry_variance", predicted);
    t.add(label, "closed_loop_variance", var_loop, stats::variance_standard_error(loop));

    t.verdict("ks_" + label, ks <= kKsFactor * self,
              "KS " + fmt(ks) + " vs " + fmt(kKsFactor) + " x self-KS " + fmt(self));
    t.verdict("variance_ratio_" + label, ratio >= kVarianceRatioLow && ratio <= kVarianceRatioHigh,
              "ratio " + fmt(ratio));
    t.verdict("closed_loop_isometry_" + label, std::abs(loop_ratio - 1.0) <= kIsometryTolerance,
              "MC/isometry " + fmt(loop_ratio));
  }
  detail::stamp(t, cfg, threads, clock,
                {{"ks_factor", kKsFactor},
                 {"variance_ratio", {kVarianceRatioLow, kVarianceRatioHigh}},
                 {"isometry", kIsometryTolerance}});
  return t;
}

inline constexpr double kAutocovSlopeTolerance = 0.1;
inline constexpr double kAutocovZ = 4.0;

inline ResultTable run_autocov_experiment(const ExperimentConfig& cfg, unsigned threads = 1) {
  if (cfg.kind != ExperimentKind::autocov) throw ConfigError("run_autocov_experiment needs kind = autocov");
  cfg.validate();
  detail::Stopwatch clock;
  const auto pot = cfg.potential.make();
  if (pot.rank() != cfg.m) throw ConfigError("potential rank differs from m");
  const auto fit = autocov_decay_fit(pot, cfg.H0, cfg.lags, cfg.replicates,
                                     stream_key(cfg.seed, detail::kAutocovStream, 0),
                                     cfg.path_length, threads);
  ResultTable t;
  t.experiment = "autocov";
  for (std::size_t l = 0; l < fit.lags.size(); ++l) {
    const std::string label = "lag=" + fmt(fit.lags[l]);
    t.add(label, "empirical", fit.empirical[l], fit.mc_error[l]);
    t.add(label, "theory", fit.theory[l]);
  }
  const double target = -2.0 * cfg.m * (1.0 - cfg.H0);
  t.add("fit", "slope", fit.slope, fit.slope_error);
  t.add("fit", "max_abs_z", fit.max_abs_z);
  t.add("theory", "expected_slope", target);
  t.verdict("decay_slope", std::abs(fit.slope - target) <= kAutocovSlopeTolerance,
            "slope " + fmt(fit.slope) + " vs " + fmt(target));
  t.verdict("theory_curve", fit.max_abs_z < kAutocovZ, "max |z| " + fmt(fit.max_abs_z));
  detail::stamp(t, cfg, threads, clock,
                {{"slope", kAutocovSlopeTolerance}, {"z", kAutocovZ}});
  return t;
}

namespace detail {

struct IsometryRow {
  std::string label;
  double mc = 0.0, se = 0.0, norm = 0.0;
};

/// Var of int f dZ over `paths` (row-major, each of length grid + 1) vs ||f||^2.
inline std::vector<IsometryRow> isometry_rows(const ExperimentConfig& cfg,
                                              const std::vector<HermitePath>& paths) {
  std::vector<IsometryRow> out;
  const double H = hermite_index(cfg.m, cfg.H0);
  for (const auto& step : cfg.integrands) {
    const auto f = step.make();
    const auto fl = left_endpoints(f, cfg.grid_n);
    std::vector<double> v(paths.size());
    for (std::size_t r = 0; r < paths.size(); ++r) v[r] = wiener_integral(fl, paths[r]);
    out.push_back({step.label(), stats::variance(v), stats::variance_standard_error(v),
                   lambda_norm_sq(f, H)});
  }
  return out;
}

inline std::vector<HermitePath> hermite_paths(const ExperimentConfig& cfg, double T, std::size_t N,
                                              std::uint64_t stream, unsigned threads) {
  const HermiteSimulator sim(cfg.m, cfg.H0, T, cfg.grid_n, cfg.delta);
  std::vector<HermitePath> paths(N);
  parallel_for(N, threads, [&](std::size_t r) { paths[r] = sim.sample(stream_key(cfg.seed, stream, r)); });
  return paths;
}

}  // namespace detail

inline constexpr double kTaqquVarLow = 0.85;
inline constexpr double kTaqquVarHigh = 1.15;
inline constexpr double kGaussianSkew = 0.1;
inline constexpr double kRosenblattSkew = 0.3;

/// Var and skewness of Y_T(1) per horizon; isometry table at the largest horizon.
inline ResultTable run_hermite_var_experiment(const ExperimentConfig& cfg, unsigned threads = 1) {
  if (cfg.kind != ExperimentKind::hermite_var)
    throw ConfigError("run_hermite_var_experiment needs kind = hermite-var");
  cfg.validate();
  detail::Stopwatch clock;
  ResultTable t;
  t.experiment = "hermite_var";
  std::vector<HermitePath> last;
  for (std::size_t k = 0; k < cfg.horizons.size(); ++k) {
    const double T = cfg.horizons[k];
    auto paths = detail::hermite_paths(cfg, T, cfg.replicates, detail::kHermiteStream + k, threads);
    std::vector<double> y1(paths.size());
    for (std::size_t r = 0; r < paths.size(); ++r) y1[r] = paths[r].values.back();
    const std::string label = "T=" + fmt(T);
    t.add(label, "var_Y1", stats::variance(y1), stats::variance_standard_error(y1));
    t.add(label, "skewness_Y1", stats::skewness(y1));
    t.add(label, "mean_Y1", stats::mean(y1), stats::standard_error(y1));
    if (k + 1 == cfg.horizons.size()) last = std::move(paths);
  }
  const auto& top = t.rows[t.rows.size() - 3];
  const double var = top.value;
  const double skew = t.rows[t.rows.size() - 2].value;
  t.verdict("standardness", var >= kTaqquVarLow && var <= kTaqquVarHigh, "Var(Y_T(1)) " + fmt(var));
  if (cfg.m == 1)
    t.verdict("gaussian_skewness", std::abs(skew) < kGaussianSkew, "skewness " + fmt(skew));
  else
    t.verdict("non_gaussian_skewness", std::abs(skew) > kRosenblattSkew, "skewness " + fmt(skew));
  for (const auto& row : detail::isometry_rows(cfg, last)) {
    t.add(row.label, "mc_variance", row.mc, row.se);
    t.add(row.label, "lambda_norm_sq", row.norm);
    const double ratio = row.mc / row.norm;
    t.add(row.label, "ratio", ratio);
    t.verdict("isometry_" + row.label, std::abs(ratio - 1.0) <= kIsometryTolerance,
              "ratio " + fmt(ratio));
  }
  detail::stamp(t, cfg, threads, clock,
                {{"variance", {kTaqquVarLow, kTaqquVarHigh}},
                 {"skewness_gaussian", kGaussianSkew},
                 {"skewness_rosenblatt", kRosenblattSkew},
                 {"isometry", kIsometryTolerance}});
  return t;
}

/// Wiener-integral isometry at the largest horizon with `replicates` paths.
inline ResultTable run_isometry_experiment(const ExperimentConfig& cfg, unsigned threads = 1) {
  if (cfg.kind != ExperimentKind::isometry)
    throw ConfigError("run_isometry_experiment needs kind = isometry");
  cfg.validate();
  detail::Stopwatch clock;
  ResultTable t;
  t.experiment = "isometry";
  const auto paths =
      detail::hermite_paths(cfg, cfg.horizons.back(), cfg.replicates, detail::kIsometryStream, threads);
  for (const auto& row : detail::isometry_rows(cfg, paths)) {
    t.add(row.label, "mc_variance", row.mc, row.se);
    t.add(row.label, "lambda_norm_sq", row.norm);
    const double ratio = row.mc / row.norm;
    t.add(row.label, "ratio", ratio);
    t.verdict("isometry_" + row.label, std::abs(ratio - 1.0) <= kIsometryTolerance,
              "ratio " + fmt(ratio));
  }
  detail::stamp(t, cfg, threads, clock, {{"isometry", kIsometryTolerance}});
  return t;
}

inline ResultTable run_experiment(const ExperimentConfig& cfg, unsigned threads = 1) {
  switch (cfg.kind) {
    case ExperimentKind::rate: return run_rate_experiment(cfg, threads);
    case ExperimentKind::fluctuation: return run_fluctuation_experiment(cfg, threads);
    case ExperimentKind::autocov: return run_autocov_experiment(cfg, threads);
    case ExperimentKind::hermite_var: return run_hermite_var_experiment(cfg, threads);
    case ExperimentKind::isometry: return run_isometry_experiment(cfg, threads);
  }
  throw ConfigError("unknown experiment kind");
}

}  // namespace lrdhom
