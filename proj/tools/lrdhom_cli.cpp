// Command-line driver for the experiment suite.
//
//   lrdhom rate     --config cfg.json [--seed S] [--threads K] [--out DIR]
//   lrdhom fluct    ...
//   lrdhom autocov  ...
//   lrdhom hermite  ...
//   lrdhom isometry ...
//   lrdhom report   --out DIR
//
// Exit status: 0 all verdicts pass, 2 some verdict failed, 1 execution error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lrdhom/experiment.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config) {
  auto* opt = cmd->add_option("--config", c.config, "experiment configuration (JSON)");
  if (needs_config) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "master seed (overrides the config)");
  cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "output directory (overrides the config)");
}

void print_table(const lrdhom::ResultTable& t) {
  std::cout << "experiment " << t.experiment << " (" << t.metadata.value("wall_time_s", 0.0)
            << " s)\n";
  for (const auto& r : t.rows)
    std::cout << "  " << r.params << "  " << r.statistic << " = " << lrdhom::fmt(r.value)
              << (r.std_error > 0.0 ? " +- " + lrdhom::fmt(r.std_error) : "") << '\n';
  for (const auto& v : t.verdicts)
    std::cout << (v.pass ? "  [PASS] " : "  [FAIL] ") << v.name << ": " << v.detail << '\n';
}

int run(const Common& c, lrdhom::ExperimentKind expected) {
  auto cfg = lrdhom::load_config(c.config);
  if (cfg.kind != expected)
    throw lrdhom::ConfigError("config kind '" + lrdhom::to_string(cfg.kind) +
                              "' does not match the subcommand");
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.output = c.out;
  const auto table = lrdhom::run_experiment(cfg, c.threads);
  lrdhom::write_result_table(cfg.output, table);
  print_table(table);
  return table.all_pass() ? 0 : 2;
}

int report(const Common& c) {
  const std::filesystem::path dir = c.out.empty() ? "results" : c.out;
  if (!std::filesystem::is_directory(dir)) throw lrdhom::io::IoError("no such directory: " + dir.string());
  bool all = true;
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path());
    const auto j = lrdhom::io::json::parse(in);
    if (!j.contains("verdicts")) continue;
    ++count;
    std::cout << j.at("experiment").get<std::string>() << " ["
              << j.at("metadata").value("config_hash", "?") << "]\n";
    for (const auto& v : j.at("verdicts")) {
      const bool pass = v.at("pass").get<bool>();
      all = all && pass;
      std::cout << (pass ? "  [PASS] " : "  [FAIL] ") << v.at("name").get<std::string>() << ": "
                << v.at("detail").get<std::string>() << '\n';
    }
  }
  if (count == 0) throw lrdhom::io::IoError("no result summaries in " + dir.string());
  return all ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo experiments for elliptic problems with long-range-dependent potentials"};
  app.require_subcommand(1);
  Common common;
  struct Sub {
    const char* name;
    const char* help;
    lrdhom::ExperimentKind kind;
  };
  const Sub subs[] = {
      {"rate", "homogenization error rate", lrdhom::ExperimentKind::rate},
      {"fluct", "fluctuation law against the limit sampler", lrdhom::ExperimentKind::fluctuation},
      {"autocov", "autocovariance decay of the potential", lrdhom::ExperimentKind::autocov},
      {"hermite", "Taqqu normalization of Hermite processes", lrdhom::ExperimentKind::hermite_var},
      {"isometry", "Wiener integral isometry", lrdhom::ExperimentKind::isometry},
  };
  std::vector<std::pair<CLI::App*, lrdhom::ExperimentKind>> commands;
  for (const auto& s : subs) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, common, true);
    commands.emplace_back(cmd, s.kind);
  }
  auto* rep = app.add_subcommand("report", "summarize verdicts of a results directory");
  add_common(rep, common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    if (rep->parsed()) return report(common);
    for (const auto& [cmd, kind] : commands)
      if (cmd->parsed()) return run(common, kind);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
