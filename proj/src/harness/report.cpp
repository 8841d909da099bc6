#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "conelab/harness.hpp"

namespace conelab::harness {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string tool_version() { return "0.1.0"; }

std::string status_name(Status s) {
  switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::info: return "info";
  }
  return "info";
}

Status parse_status(const std::string& s) {
  if (s == "pass") return Status::pass;
  if (s == "fail") return Status::fail;
  if (s == "info") return Status::info;
  throw IoError("invalid status '" + s + "'");
}

int RunManifest::check_count() const {
  int n = 0;
  for (const auto& s : suites)
    for (const auto& r : s.rows) n += r.status != Status::info;
  return n;
}

int RunManifest::failed_count() const {
  int n = 0;
  for (const auto& s : suites)
    for (const auto& r : s.rows) n += r.status == Status::fail;
  return n;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
  std::string o = "\"";
  for (char c : f) {
    if (c == '"') o += '"';
    o += c;
  }
  return o + "\"";
}

std::string suite_csv(const SuiteReport& s) {
  std::vector<std::string> extra;
  for (const auto& r : s.rows)
    for (const auto& [k, v] : r.extras)
      if (std::find(extra.begin(), extra.end(), k) == extra.end()) extra.push_back(k);
  std::string out = "check,inputs,measured,target,status";
  for (const auto& k : extra) out += "," + csv_escape(k);
  out += "\r\n";
  for (const auto& r : s.rows) {
    out += csv_escape(r.check) + "," + csv_escape(r.inputs) + "," + format_number(r.measured) + "," +
           csv_escape(r.target) + "," + status_name(r.status);
    for (const auto& k : extra) {
      out += ",";
      for (const auto& [ek, ev] : r.extras)
        if (ek == k) out += format_number(ev);
    }
    out += "\r\n";
  }
  return out;
}

namespace {

ojson number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

double read_number(const ojson& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  throw IoError("invalid number '" + s + "'");
}

void dump(const ojson& j, std::string& out, int indent) {
  const std::string pad(indent, ' '), pad2(indent + 2, ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    size_t i = 0;
    for (auto it = j.begin(); it != j.end(); ++it, ++i) {
      out += pad2 + ojson(it.key()).dump() + ": ";
      dump(it.value(), out, indent + 2);
      out += i + 1 < j.size() ? ",\n" : "\n";
    }
    out += pad + "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    out += "[\n";
    for (size_t i = 0; i < j.size(); ++i) {
      out += pad2;
      dump(j[i], out, indent + 2);
      out += i + 1 < j.size() ? ",\n" : "\n";
    }
    out += pad + "]";
  } else if (j.is_number_float()) {
    out += format_number(j.get<double>());
  } else {
    out += j.dump();
  }
}

}  // namespace

std::string manifest_json(const RunManifest& m) {
  ojson j;
  j["tool"] = m.tool;
  j["version"] = m.version;
  j["seed"] = m.seed;
  j["status"] = m.failed_count() ? "fail" : "pass";
  j["checks"] = m.check_count();
  j["failed"] = m.failed_count();
  if (m.timed) j["wall_clock_seconds"] = m.wall_clock_seconds;
  ojson cfg = ojson::object();
  for (const auto& [sec, kv] : m.config) {
    ojson s = ojson::object();
    for (const auto& [k, v] : kv) s[k] = v;
    cfg[sec] = s;
  }
  j["config"] = cfg;
  ojson go = ojson::object();
  for (const auto& [k, v] : m.grid_orders) go[k] = v;
  j["grid_orders"] = go;
  ojson tol = ojson::object();
  for (const auto& [k, v] : m.tolerances) tol[k] = number(v);
  j["tolerances"] = tol;
  ojson suites = ojson::array();
  for (const auto& s : m.suites) {
    ojson rows = ojson::array();
    for (const auto& r : s.rows) {
      ojson row;
      row["check"] = r.check;
      row["inputs"] = r.inputs;
      row["measured"] = number(r.measured);
      row["target"] = r.target;
      row["status"] = status_name(r.status);
      ojson ex = ojson::object();
      for (const auto& [k, v] : r.extras) ex[k] = number(v);
      row["extras"] = ex;
      rows.push_back(row);
    }
    ojson so;
    so["name"] = s.name;
    so["rows"] = rows;
    suites.push_back(so);
  }
  j["suites"] = suites;
  std::string out;
  dump(j, out, 0);
  return out + "\n";
}

RunManifest parse_manifest_json(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const std::exception& e) {
    throw IoError(std::string("manifest is not valid JSON: ") + e.what());
  }
  RunManifest m;
  try {
    m.tool = j.at("tool").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("wall_clock_seconds")) {
      m.timed = true;
      m.wall_clock_seconds = read_number(j["wall_clock_seconds"]);
    }
    for (auto it = j.at("config").begin(); it != j.at("config").end(); ++it)
      for (auto kv = it.value().begin(); kv != it.value().end(); ++kv)
        m.config[it.key()][kv.key()] = kv.value().get<std::string>();
    for (auto it = j.at("grid_orders").begin(); it != j.at("grid_orders").end(); ++it)
      m.grid_orders[it.key()] = it.value().get<std::vector<long>>();
    for (auto it = j.at("tolerances").begin(); it != j.at("tolerances").end(); ++it)
      m.tolerances[it.key()] = read_number(it.value());
    for (const auto& so : j.at("suites")) {
      SuiteReport s;
      s.name = so.at("name").get<std::string>();
      for (const auto& ro : so.at("rows")) {
        ReportRow r;
        r.check = ro.at("check").get<std::string>();
        r.inputs = ro.at("inputs").get<std::string>();
        r.measured = read_number(ro.at("measured"));
        r.target = ro.at("target").get<std::string>();
        r.status = parse_status(ro.at("status").get<std::string>());
        for (auto e = ro.at("extras").begin(); e != ro.at("extras").end(); ++e)
          r.extras.emplace_back(e.key(), read_number(e.value()));
        s.rows.push_back(std::move(r));
      }
      m.suites.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("manifest has an unexpected layout: ") + e.what());
  }
  return m;
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read manifest '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_manifest_json(ss.str());
}

void write_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + tmp.string() + "' for writing");
    f << content;
    f.flush();
    if (!f) {
      f.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code ec2;
    fs::remove(tmp, ec2);
    throw IoError("cannot rename '" + tmp.string() + "' to '" + path + "': " + ec.message());
  }
}

void emit_report(const RunManifest& m, const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());
  // render everything first so that a formatting failure writes nothing
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& s : m.suites) files.emplace_back((fs::path(out_dir) / (s.name + ".csv")).string(), suite_csv(s));
  files.emplace_back((fs::path(out_dir) / "manifest.json").string(), manifest_json(m));
  for (const auto& [p, c] : files) write_atomic(p, c);
}

int exit_code(const RunManifest& m) { return m.failed_count() ? 1 : 0; }

}  // namespace conelab::harness
