#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "conelab/harness.hpp"

namespace conelab::harness {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, const std::string& seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string::npos) {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& v, const std::string& where) {
  const std::string t = trim(v);
  if (t.empty()) throw ConfigError(where + ": empty number");
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(t.c_str(), &end);
  if (*end != '\0' || errno == ERANGE) throw ConfigError(where + ": not a number: '" + t + "'");
  return d;
}

}  // namespace

const ConfigMap& config_defaults() {
  static const ConfigMap d = {
      {"run",
       {{"suites", "all"}, {"grid_order", "64"}, {"seed", "20241014"}, {"parallelism", "1"},
        {"record_timing", "false"}}},
      {"spectrum-scan",
       {{"re_min", "0.05"}, {"re_max", "2"}, {"im_min", "-10"}, {"im_max", "10"},
        {"locate_tol", "1e-6"}, {"runtime_limit", "30"}, {"connection_samples", "20"}, {"connection_z", "0.3,0.5,0.7"},
        {"connection_tol", "1e-8"}, {"phi0_rho", "0.05,0.25,0.5,0.75,0.95"}, {"phi0_tol", "1e-9"}}},
      {"green-verify",
       {{"w0_samples", "30"}, {"omega_max", "50"}, {"wronskian_tol", "1e-6"}, {"min_w0", "0.5"},
        {"decay_eps", "0.1"}, {"decay_omegas", "10,20,40,80"}, {"decay_lo", "-1.3"}, {"decay_hi", "-0.7"},
        {"resolvent_order", "32"}, {"resolvent_tol", "1e-6"}, {"reassembly_tol", "1e-8"}}},
      {"semigroup-verify",
       {{"order", "16"}, {"free_order", "12"}, {"taus", "0.5,1,2"}, {"tol", "1e-3"},
        {"stable_samples", "20"}, {"stable_order", "32"}, {"tau_max", "10"}, {"slope_max", "0.01"},
        {"growth_max", "5"}, {"eig_orders", "64,128"}, {"eig_tol", "1e-6"}, {"shrink_factor", "100"}}},
      {"kernel-bounds",
       {{"omega_max", "200"}, {"omega_check", "300"}, {"taus", "0.5,1,2,4"},
        {"s_values", "0.1,0.3,0.5,0.7,0.9"}, {"fit_s", "0.5"}, {"refine_tol", "0.01"},
        {"decay_max", "-1"}}},
      {"osc-check",
       {{"alphas", "0.3,0.9"}, {"a_min", "1e-2"}, {"a_max", "1e2"}, {"a_points", "9"},
        {"rhos", "0.05,0.3,0.8"}, {"exponent_a", "1e-3,1e-2"}, {"exponent_tol", "0.03"},
        {"envelope_orders", "32,64"}, {"envelope_samples", "20"}, {"envelope_drift", "0.05"},
        {"weighted_order", "32"}, {"identity_tol", "1e-8"}}},
      {"stability-sweep",
       {{"deltas", "1e-2,5e-3"}, {"grid_order", "0"}, {"window", "0.1"}, {"tau_max", "10"},
        {"ratio_lo", "2.5"}, {"ratio_hi", "6"}, {"detune", "0.02"}, {"detune_tau", "5"},
        {"detune_factor", "10"}, {"bound_factor", "5"}, {"probe_deltas", "2e-2,5e-2,1e-1"},
        {"runtime_limit", "600"}}},
  };
  return d;
}

Config::Config() : values_(config_defaults()) {}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  auto s = values_.find(section);
  if (s == values_.end()) throw ConfigError("unknown section [" + section + "]");
  auto k = s->second.find(key);
  if (k == s->second.end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
  k->second = trim(value);
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config c;
  std::istringstream in(text);
  std::string line, section;
  std::map<std::string, int> seen;
  for (int no = 1; std::getline(in, line); ++no) {
    const std::string where = origin + ":" + std::to_string(no);
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!c.values_.count(section)) throw ConfigError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    if (section.empty()) throw ConfigError(where + ": key outside of a section");
    const std::string key = trim(line.substr(0, eq));
    if (seen.count(section + "." + key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    seen[section + "." + key] = no;
    try {
      c.set(section, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path);
}

std::string Config::str(const std::string& section, const std::string& key) const {
  auto s = values_.find(section);
  if (s == values_.end() || !s->second.count(key))
    throw ConfigError("no such setting " + section + "." + key);
  return s->second.at(key);
}

double Config::num(const std::string& section, const std::string& key) const {
  return to_double(str(section, key), section + "." + key);
}

long Config::integer(const std::string& section, const std::string& key) const {
  const std::string v = str(section, key);
  char* end = nullptr;
  errno = 0;
  const long n = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno == ERANGE)
    throw ConfigError(section + "." + key + ": not an integer: '" + v + "'");
  return n;
}

std::uint64_t Config::u64(const std::string& section, const std::string& key) const {
  const std::string v = str(section, key);
  char* end = nullptr;
  errno = 0;
  const unsigned long long n = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || v[0] == '-' || *end != '\0' || errno == ERANGE)
    throw ConfigError(section + "." + key + ": not an unsigned 64-bit integer: '" + v + "'");
  return n;
}

bool Config::flag(const std::string& section, const std::string& key) const {
  const std::string v = str(section, key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(section + "." + key + ": not a boolean: '" + v + "'");
}

std::vector<double> Config::list(const std::string& section, const std::string& key) const {
  std::vector<double> out;
  for (const auto& w : split(str(section, key), ",")) out.push_back(to_double(w, section + "." + key));
  return out;
}

std::vector<std::string> Config::words(const std::string& section, const std::string& key) const {
  return split(str(section, key), ", \t");
}

}  // namespace conelab::harness
