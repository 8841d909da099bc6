// Runs every suite with the default configuration and prints one verdict per
// acceptance criterion.  A criterion passes when each of its non-info rows
// passes.  Usage: acceptance [out_dir] [parallelism]
#include <cstdio>
#include <map>
#include <string>

#include "conelab/harness.hpp"

using namespace conelab::harness;

int main(int argc, char** argv) {
  const std::string out = argc > 1 ? argv[1] : "acceptance_out";
  Config cfg;
  cfg.set("run", "record_timing", "true");
  if (argc > 2) cfg.set("run", "parallelism", argv[2]);

  const RunManifest m = run_experiment(cfg, {"all"});
  emit_report(m, out);

  struct Tally {
    int pass = 0, fail = 0;
    std::string worst;
  };
  std::map<char, Tally> by;
  for (char c = 'A'; c <= 'L'; ++c) by[c];
  for (const auto& s : m.suites)
    for (const auto& r : s.rows) {
      if (r.status == Status::info || r.check.empty()) continue;
      Tally& t = by[r.check[0]];
      if (r.status == Status::pass) {
        ++t.pass;
      } else {
        ++t.fail;
        if (t.worst.empty())
          t.worst = r.check + " measured " + format_number(r.measured) + " target " + r.target + " (" + r.inputs + ")";
      }
    }

  int failed = 0;
  for (const auto& [c, t] : by) {
    const bool ok = t.fail == 0 && t.pass > 0;
    failed += !ok;
    std::printf("%c %s  %d/%d checks%s%s\n", c, ok ? "PASS" : "FAIL", t.pass, t.pass + t.fail,
                t.worst.empty() ? "" : "  first failure: ", t.worst.c_str());
  }
  std::printf("wall clock %.1f s; report in %s\n", m.wall_clock_seconds, out.c_str());
  return failed ? 1 : 0;
}
