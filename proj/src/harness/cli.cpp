#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "conelab/harness.hpp"

namespace conelab::harness {

namespace {

void print_summary(const RunManifest& m, const std::string& out) {
  for (const auto& s : m.suites)
    for (const auto& r : s.rows) {
      if (r.status == Status::info) continue;
      std::printf("%-4s %-18s %-28s %-.6g  (%s)  %s\n", status_name(r.status).c_str(), s.name.c_str(),
                  r.check.c_str(), r.measured, r.target.c_str(), r.inputs.c_str());
    }
  std::printf("%d checks, %d failed; report in %s\n", m.check_count(), m.failed_count(), out.c_str());
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"conelab: numerical checks for self-similar blowup of the 5D focusing wave equation"};
  app.require_subcommand(1);

  std::string config_path, out = "out";
  std::optional<long> grid_order, parallelism;
  std::optional<std::uint64_t> seed;
  std::string delta;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "configuration file");
    sub->add_option("--grid-order", grid_order, "grid order for the nonlinear runs");
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "64-bit seed");
    sub->add_option("--parallelism", parallelism, "worker threads");
  };
  std::vector<std::pair<CLI::App*, std::string>> subs;
  for (const auto& name : suite_names()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " suite");
    add_common(sub);
    if (name == "stability-sweep") sub->add_option("--delta", delta, "comma separated amplitudes");
    subs.emplace_back(sub, name);
  }
  CLI::App* all = app.add_subcommand("all", "run every suite");
  add_common(all);
  all->add_option("--delta", delta, "comma separated amplitudes for stability-sweep");
  subs.emplace_back(all, "all");
  CLI::App* run = app.add_subcommand("run", "run the suites listed in [run] suites");
  add_common(run);
  subs.emplace_back(run, "");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::string chosen;
  for (const auto& [sub, name] : subs)
    if (sub->parsed()) chosen = name;

  try {
    Config cfg = config_path.empty() ? Config() : Config::load(config_path);
    if (grid_order) cfg.set("run", "grid_order", std::to_string(*grid_order));
    if (parallelism) cfg.set("run", "parallelism", std::to_string(*parallelism));
    if (seed) cfg.set("run", "seed", std::to_string(*seed));
    if (!delta.empty()) cfg.set("stability-sweep", "deltas", delta);
    const std::vector<std::string> suites =
        chosen.empty() ? cfg.words("run", "suites") : std::vector<std::string>{chosen};
    const RunManifest m = run_experiment(cfg, suites);
    emit_report(m, out);
    print_summary(m, out);
    return exit_code(m);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace conelab::harness
