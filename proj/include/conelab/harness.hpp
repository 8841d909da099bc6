#pragma once

// Experiment orchestration: configuration, suites, reports and the CLI.
//
// Config files are flat `key = value` lines grouped under `[section]`
// headers, `#` starts a comment.  Every key has a default (see
// config_defaults()); unknown sections or keys are configuration errors.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace conelab::harness {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Section = std::map<std::string, std::string>;
using ConfigMap = std::map<std::string, Section>;

// All recognised sections and keys with their default values.
const ConfigMap& config_defaults();

class Config {
 public:
  Config();  // defaults only
  static Config parse(const std::string& text, const std::string& origin = "<string>");
  static Config load(const std::string& path);

  void set(const std::string& section, const std::string& key, const std::string& value);

  std::string str(const std::string& section, const std::string& key) const;
  double num(const std::string& section, const std::string& key) const;
  long integer(const std::string& section, const std::string& key) const;
  std::uint64_t u64(const std::string& section, const std::string& key) const;
  bool flag(const std::string& section, const std::string& key) const;
  std::vector<double> list(const std::string& section, const std::string& key) const;
  std::vector<std::string> words(const std::string& section, const std::string& key) const;

  // Resolved values (defaults merged with the file and overrides).
  const ConfigMap& values() const { return values_; }

 private:
  ConfigMap values_;
};

enum class Status { pass, fail, info };
std::string status_name(Status s);
Status parse_status(const std::string& s);

struct ReportRow {
  std::string check;   // "<criterion>.<name>"
  std::string inputs;  // "k=v;k=v"
  double measured = 0.0;
  std::string target;  // "<= 1e-06", "in [2.5, 6]", "" for info rows
  Status status = Status::info;
  // suite-specific numeric columns (same keys for every row of a suite that has them)
  std::vector<std::pair<std::string, double>> extras;
};

struct SuiteReport {
  std::string name;
  std::vector<ReportRow> rows;
};

struct RunManifest {
  std::string tool = "conelab";
  std::string version;
  std::uint64_t seed = 0;
  ConfigMap config;
  std::map<std::string, std::vector<long>> grid_orders;  // per suite
  std::map<std::string, double> tolerances;                // "<suite>.<key>"
  std::vector<SuiteReport> suites;
  bool timed = false;
  double wall_clock_seconds = 0.0;

  int check_count() const;  // rows with a pass/fail verdict
  int failed_count() const;
};

std::string tool_version();

// ---- persistence -----------------------------------------------------------

std::string format_number(double v);  // %.17g; inf / -inf / nan spelled out
std::string csv_escape(const std::string& field);
std::string suite_csv(const SuiteReport& s);
std::string manifest_json(const RunManifest& m);
RunManifest parse_manifest_json(const std::string& text);
RunManifest load_manifest(const std::string& path);

// Write to a temporary file in the same directory, then rename over `path`.
void write_atomic(const std::string& path, const std::string& content);
// manifest.json plus one <suite>.csv per suite; all-or-nothing per file.
void emit_report(const RunManifest& m, const std::string& out_dir);

// ---- suites ----------------------------------------------------------------

const std::vector<std::string>& suite_names();  // in canonical order
std::vector<std::string> expand_suites(const std::vector<std::string>& names);  // resolves "all"

struct RunContext {
  const Config* cfg;
  std::uint64_t seed;
  int parallelism;
  bool timed;
  bool validate_only = false;  // read and check parameters, compute nothing
};

SuiteReport run_suite(const std::string& name, const RunContext& ctx, RunManifest& m);
RunManifest run_experiment(const Config& cfg, const std::vector<std::string>& suites);

// 0 success, 1 a check failed, 2 configuration error.
int exit_code(const RunManifest& m);

// Full command line entry point (used by the `conelab` tool and the tests).
int cli_main(int argc, char** argv);

}  // namespace conelab::harness
