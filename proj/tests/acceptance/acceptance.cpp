// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "lrdhom/lrdhom.hpp"

using namespace lrdhom;

namespace {

constexpr std::uint64_t kSeed = 1;
const std::filesystem::path kConfigs = LRDHOM_CONFIG_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

ExperimentConfig config(const std::string& name) {
  auto c = load_config(kConfigs / name);
  c.seed = kSeed;
  return c;
}

std::string join_verdicts(const ResultTable& t, bool* pass, const std::string& prefix = "") {
  std::string s;
  for (const auto& v : t.verdicts) {
    if (!prefix.empty() && v.name.rfind(prefix, 0) != 0) continue;
    *pass = *pass && v.pass;
    s += (s.empty() ? "" : "; ") + v.name + (v.pass ? " ok (" : " FAILED (") + v.detail + ")";
  }
  return s;
}

Outcome ac1_orthogonality() {
  const GaussHermiteRule rule(64);
  double worst = 0.0;
  for (int p = 0; p <= 8; ++p)
    for (int q = 0; q <= 8; ++q) {
      const double v = rule.expect([&](double x) { return hermite_poly(p, x) * hermite_poly(q, x); });
      const double err = p == q ? std::abs(v / factorial(q) - 1.0) : std::abs(v);
      worst = std::max(worst, err);
    }
  return {worst < 1e-10, "max relative error " + fmt(worst)};
}

// Sample covariances on a sublattice of the fBm path and of the fGn increments
// against the closed forms; counts pairs beyond 4 standard errors.
Outcome ac2_exact_law() {
  const std::size_t n = 1024, N = 10000, stride = 64;
  const double dx = 1.0 / n;
  bool pass = true;
  std::string detail;
  for (double H : {0.5, 0.7, 0.9}) {
    const FbmSampler fbm(H, n, dx, n);
    std::vector<std::size_t> idx;
    for (std::size_t k = stride; k <= n; k += stride) idx.push_back(k);
    std::vector<std::size_t> gidx{0, 1, 2, 3};
    for (std::size_t k = stride; k <= n; k += stride) gidx.push_back(k);
    std::vector<std::vector<double>> b(N), g(N);
    parallel_for(N, worker_count(), [&](std::size_t r) {
      const auto path = fbm.sample(stream_key(kSeed, 0xAC2, r));
      const auto inc = fgn_from_fbm(path);
      b[r].reserve(idx.size());
      for (auto k : idx) b[r].push_back(path.values[k]);
      for (auto k : gidx) g[r].push_back(inc.values[k]);
    });
    std::size_t pairs = 0, exceed = 0;
    double zmax = 0.0;
    auto check = [&](const std::vector<std::vector<double>>& v, std::size_t a, std::size_t c,
                     double truth) {
      std::vector<double> prod(N);
      for (std::size_t r = 0; r < N; ++r) prod[r] = v[r][a] * v[r][c];
      const double z = std::abs(stats::mean(prod) - truth) / stats::standard_error(prod);
      zmax = std::max(zmax, z);
      exceed += z > 4.0;
      ++pairs;
    };
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t c = a; c < idx.size(); ++c)
        check(b, a, c, fbm_covariance(H, idx[a] * dx, idx[c] * dx));
    for (std::size_t a = 0; a < gidx.size(); ++a)
      for (std::size_t c = a; c < gidx.size(); ++c)
        check(g, a, c, fgn_covariance(H, (double(gidx[c]) - double(gidx[a])) * dx));
    const double frac = double(exceed) / double(pairs);
    pass = pass && frac < 1e-3;
    detail += (detail.empty() ? "" : "; ") + std::string("H0=") + fmt(H) + ": " +
              std::to_string(exceed) + "/" + std::to_string(pairs) + " pairs beyond 4 SE, max z " +
              fmt(zmax);
  }
  return {pass, detail};
}

Outcome ac3_autocov() {
  bool pass = true;
  std::string detail;
  for (const char* name : {"autocov_sin.json", "autocov_cos.json"}) {
    const auto cfg = config(name);
    const auto t = run_autocov_experiment(cfg, worker_count());
    detail += (detail.empty() ? "" : " | ") + std::string("m=") + std::to_string(cfg.m) + " H0=" +
              fmt(cfg.H0) + ": " + join_verdicts(t, &pass);
  }
  return {pass, detail};
}

Outcome ac4_rate() {
  bool pass = true;
  std::string detail;
  for (const char* name :
       {"rate_laplace.json", "rate_fractional_lrd.json", "rate_fractional_singular.json"}) {
    const auto cfg = config(name);
    const auto t = run_rate_experiment(cfg, worker_count());
    detail += (detail.empty() ? "" : " | ") + cfg.op_kind + " H0=" + fmt(cfg.H0) + ": " +
              join_verdicts(t, &pass);
  }
  return {pass, detail};
}

Outcome ac5_taqqu() {
  bool pass = true;
  std::string detail;
  for (const char* name : {"hermite_m1.json", "hermite_m2.json"}) {
    const auto cfg = config(name);
    const auto t = run_hermite_var_experiment(cfg, worker_count());
    std::string part = join_verdicts(t, &pass, "standardness");
    part += "; " + join_verdicts(t, &pass, cfg.m == 1 ? "gaussian" : "non_gaussian");
    detail += (detail.empty() ? "" : " | ") + std::string("m=") + std::to_string(cfg.m) + ": " + part;
  }
  return {pass, detail};
}

Outcome ac6_isometry() {
  bool pass = true;
  std::string detail;
  for (const char* name : {"isometry_m1.json", "isometry_m2.json"}) {
    const auto cfg = config(name);
    const auto t = run_isometry_experiment(cfg, worker_count());
    detail += (detail.empty() ? "" : " | ") + std::string("m=") + std::to_string(cfg.m) + ": " +
              join_verdicts(t, &pass);
  }
  return {pass, detail};
}

Outcome ac7_noncentral() {
  bool pass = true;
  const auto t = run_fluctuation_experiment(config("fluct.json"), worker_count());
  const auto detail = join_verdicts(t, &pass);
  return {pass, detail};
}

Outcome ac8_decomposition() {
  const auto spec = OperatorSpec::laplace(4095, 1.0);
  const PerturbedProblem problem(spec, make_potential(PhiFn::sin()), 0.75,
                                 PerturbedProblem::constant_rhs(spec));
  const std::size_t N = 100;
  double residual = 0.0;
  std::vector<double> qr, rr;
  for (double eps : {1.0 / 16, 1.0 / 256}) {
    std::vector<double> nI(N), nQ(N), nr(N), res(N);
    parallel_for(N, worker_count(), [&](std::size_t k) {
      const auto s = problem.solve(eps, stream_key(kSeed, 0xAC8, k), true);
      const auto& d = *s.diagnostics;
      nI[k] = std::sqrt(grid_l2_sq(d.I, spec.h()));
      nQ[k] = std::sqrt(grid_l2_sq(d.Q, spec.h()));
      nr[k] = std::sqrt(grid_l2_sq(d.r, spec.h()));
      res[k] = d.residual;
    });
    for (double v : res) residual = std::max(residual, v);
    qr.push_back(stats::mean(nQ) / stats::mean(nI));
    rr.push_back(stats::mean(nr) / stats::mean(nI));
  }
  const bool pass = residual < 1e-8 && qr[1] < qr[0] && rr[1] < rr[0];
  return {pass, "max residual " + fmt(residual) + "; E|Q|/E|I| " + fmt(qr[0]) + " -> " + fmt(qr[1]) +
                    "; E|r|/E|I| " + fmt(rr[0]) + " -> " + fmt(rr[1]) + " (eps 2^-4 -> 2^-8)"};
}

Outcome ac9_determinism() {
  bool pass = true;
  std::string detail;
  auto rate = config("quick_rate.json");
  auto autocov = config("autocov_sin.json");
  autocov.replicates = 16;
  auto iso = config("isometry_m2.json");
  iso.replicates = 64;
  iso.horizons = {2048};
  iso.grid_n = 256;
  for (const auto* cfg : {&rate, &autocov, &iso}) {
    const auto a = run_experiment(*cfg, 1);
    const auto b = run_experiment(*cfg, 2);
    const auto c = run_experiment(*cfg, 1);
    const double diff = std::max(max_row_difference(a, b), max_row_difference(a, c));
    pass = pass && diff <= 1e-12;
    detail += (detail.empty() ? "" : "; ") + to_string(cfg->kind) + " max row diff " + fmt(diff);
  }
  return {pass, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1 Hermite orthogonality", ac1_orthogonality},
      {"AC2 exact-law synthesis", ac2_exact_law},
      {"AC3 potential autocovariance decay", ac3_autocov},
      {"AC4 homogenization rate regimes", ac4_rate},
      {"AC5 Taqqu normalization", ac5_taqqu},
      {"AC6 Wiener-integral isometry", ac6_isometry},
      {"AC7 non-central limit", ac7_noncentral},
      {"AC8 decomposition diagnostics", ac8_decomposition},
      {"AC9 determinism", ac9_determinism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("[%s] %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
