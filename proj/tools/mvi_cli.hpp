// Copyright 2026 The mvi-toolkit Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// In-process implementation of the `mvi` command-line tool. main() forwards to
// run(); tests call run() directly.
//
// Subcommands: solve | simulate | check | bench | catalog.
// Settings come from an optional `--config` file (flat `key = value`, `#`
// comments) and are overridden by flags of the same name (`max_iter` is
// spelled `--max-iter` on the command line).

#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mvi/mvi.hpp"

namespace mvi::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int {
  kOk = 0,
  kBadConfig = 1,
  kMaxIter = 2,
  kInnerFailed = 3,
  kDiverged = 4,
  kViolations = 5,
};

/// Malformed configuration or input; maps to exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Formatting

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_list(const ConstRef& x, char sep = ' ') {
  std::string s;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) s += sep;
    s += fmt(x[i]);
  }
  return s;
}

inline json to_json(const ConstRef& x) {
  json a = json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back(x[i]);
  return a;
}

// ---------------------------------------------------------------------------
// Scalar parsing

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError("field '" + key + "': expected a number, got '" + text + "'");
  }
  return v;
}

inline long parse_long(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError("field '" + key + "': expected an integer, got '" + text + "'");
  }
  return v;
}

/// "1, 2.5, -3" or "1 2.5 -3".
inline Point parse_point(const std::string& key, const std::string& text) {
  std::string t = text;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream is(t);
  std::vector<double> xs;
  std::string tok;
  while (is >> tok) xs.push_back(parse_double(key, tok));
  if (xs.empty()) throw ConfigError("field '" + key + "': empty vector");
  Point p(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) p[static_cast<Eigen::Index>(i)] = xs[i];
  return p;
}

// ---------------------------------------------------------------------------
// Config file

struct ConfigLine {
  std::string key;
  std::string value;
  int line = 0;
};

/// Parses flat `key = value` text. Every key must be in `allowed`.
inline std::vector<ConfigLine> parse_config_text(std::string_view text, const std::set<std::string>& allowed) {
  std::vector<ConfigLine> out;
  std::set<std::string> seen;
  std::istringstream is{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    ConfigLine cl{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno};
    if (cl.key.empty()) throw ConfigError(where + "missing key");
    if (!allowed.count(cl.key)) throw ConfigError(where + "unknown key '" + cl.key + "'");
    if (!seen.insert(cl.key).second) throw ConfigError(where + "duplicate key '" + cl.key + "'");
    out.push_back(std::move(cl));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Problem selection

struct ProblemSpec {
  std::string label;   // catalog name or "inline"
  std::string source;  // text that selected the problem, echoed into outputs
  MviProblem problem;
  std::optional<Point> start;
};

namespace detail {

inline Point json_point(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError("problem spec: '" + what + "' must be a non-empty array");
  Point p(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError("problem spec: '" + what + "' must contain numbers");
    p[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return p;
}

inline Matrix json_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ConfigError("problem spec: '" + what + "' must be an array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Point row = json_point(j[static_cast<std::size_t>(r)], what);
    if (row.size() != cols) throw ConfigError("problem spec: '" + what + "' rows differ in length");
    m.row(r) = row.transpose();
  }
  return m;
}

inline double json_number(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw ConfigError(std::string("problem spec: missing number '") + key + "'");
  }
  return j[key].get<double>();
}

inline std::string json_kind(const json& j, const char* what) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw ConfigError(std::string("problem spec: '") + what + "' needs a string 'kind'");
  }
  return j["kind"].get<std::string>();
}

inline MonotoneMap operator_from_json(const json& j) {
  const std::string kind = json_kind(j, "operator");
  std::optional<MonotoneMap> op;
  if (kind == "affine") {
    op = MonotoneMap::affine(json_matrix(j.at("A"), "A"), json_point(j.at("b"), "b"));
  } else if (kind == "gradient_quadratic") {
    op = MonotoneMap::gradient_quadratic(json_matrix(j.at("Q"), "Q"), json_point(j.at("c"), "c"));
  } else if (kind == "scalar_nonlinear") {
    op = MonotoneMap::scalar_nonlinear(static_cast<Eigen::Index>(json_number(j, "dim")), json_number(j, "cubic"),
                                       json_number(j, "linear"), json_number(j, "offset"));
  } else if (kind == "rotation") {
    op = MonotoneMap::rotation(json_number(j, "skew"), json_number(j, "diag"));
  } else {
    throw ConfigError("problem spec: unknown operator kind '" + kind + "'");
  }
  std::optional<double> l, mu;
  if (j.contains("lipschitz")) l = json_number(j, "lipschitz");
  if (j.contains("strong_modulus")) mu = json_number(j, "strong_modulus");
  if (l || mu) return op->with_hints(l, mu);
  return *op;
}

inline ProxFunction phi_from_json(const json& j, Eigen::Index dim) {
  const std::string kind = json_kind(j, "phi");
  if (kind == "zero") return ProxFunction::zero(dim);
  if (kind == "indicator_box") return ProxFunction::box(json_point(j.at("lo"), "lo"), json_point(j.at("hi"), "hi"));
  if (kind == "indicator_ball") return ProxFunction::ball(json_point(j.at("center"), "center"), json_number(j, "radius"));
  if (kind == "indicator_orthant") return ProxFunction::orthant(dim);
  if (kind == "l1") return ProxFunction::l1(dim, json_number(j, "weight"));
  if (kind == "quadratic") return ProxFunction::quadratic(json_point(j.at("diag"), "diag"), json_point(j.at("linear"), "linear"));
  throw ConfigError("problem spec: unknown phi kind '" + kind + "'");
}

}  // namespace detail

/// Catalog name, or an inline JSON object
///   {"operator": {...}, "phi": {...}, "solution": [...], "start": [...]}.
inline ProblemSpec resolve_problem(const std::string& selector) {
  const std::string s = trim(selector);
  if (s.empty()) throw ConfigError("field 'problem': empty");
  if (s.front() != '{') {
    auto e = find_entry(s);
    if (!e) throw ConfigError("field 'problem': unknown catalog entry '" + s + "'");
    return ProblemSpec{e->name, s, std::move(e->problem), e->start};
  }
  json j;
  try {
    j = json::parse(s);
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("field 'problem': invalid JSON: ") + ex.what());
  }
  try {
    if (!j.contains("operator") || !j.contains("phi")) {
      throw ConfigError("problem spec: needs 'operator' and 'phi'");
    }
    MonotoneMap op = detail::operator_from_json(j["operator"]);
    ProxFunction phi = detail::phi_from_json(j["phi"], op.dim());
    std::optional<ReferenceSolution> ref;
    if (j.contains("solution")) ref = ReferenceSolution{detail::json_point(j["solution"], "solution"), Provenance::closed_form};
    std::optional<Point> start;
    if (j.contains("start")) start = detail::json_point(j["start"], "start");
    return ProblemSpec{"inline", s, MviProblem(std::move(op), std::move(phi), std::move(ref)), std::move(start)};
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("problem spec: ") + ex.what());
  } catch (const Error& ex) {
    throw ConfigError(std::string("problem spec: ") + ex.what());
  }
}

// ---------------------------------------------------------------------------
// Run configuration

enum class Format { csv, json };

inline Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw ConfigError("field 'format': expected csv or json, got '" + s + "'");
}

/// Effective settings of one invocation after merging file and flags. Keys
/// absent from `values` take the documented defaults.
struct RunConfig {
  std::string command;
  std::map<std::string, std::string> values;

  bool has(const std::string& k) const { return values.count(k) != 0; }
  std::string get(const std::string& k, std::string fallback = {}) const {
    auto it = values.find(k);
    return it == values.end() ? fallback : it->second;
  }
  double number(const std::string& k, double fallback) const { return has(k) ? parse_double(k, get(k)) : fallback; }
  long integer(const std::string& k, long fallback) const { return has(k) ? parse_long(k, get(k)) : fallback; }

  Format format() const {
    if (has("format")) return parse_format(get("format"));
    const std::string out = get("output");
    if (out.size() >= 5 && out.compare(out.size() - 5, 5, ".json") == 0) return Format::json;
    return Format::csv;
  }
  long seed() const { return integer("seed", 0); }
};

inline const std::vector<std::string>& solver_keys() {
  static const std::vector<std::string> k = {"h", "lambda", "alpha", "beta", "gamma", "tol",
                                             "max_iter", "inner_tol", "inner_max", "inner_damping"};
  return k;
}

inline std::vector<std::string> keys_for(const std::string& command) {
  std::vector<std::string> k = {"output", "format", "seed"};
  auto add = [&](std::initializer_list<const char*> xs) { k.insert(k.end(), xs.begin(), xs.end()); };
  if (command == "solve" || command == "check") {
    add({"problem", "method", "x0"});
    k.insert(k.end(), solver_keys().begin(), solver_keys().end());
    if (command == "check") add({"report"});
  } else if (command == "simulate") {
    add({"problem", "alpha", "beta", "gamma", "lambda", "dt", "t_end", "integrator", "record_every", "x0", "v0", "a0"});
  } else if (command == "bench") {
    add({"method"});
    k.insert(k.end(), solver_keys().begin(), solver_keys().end());
  }
  return k;
}

inline std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

inline SolverConfig solver_config(const RunConfig& rc, const MviProblem* p) {
  SolverConfig c = p ? SolverConfig::for_problem(*p) : SolverConfig{};
  c.h = rc.number("h", c.h);
  c.lambda = rc.number("lambda", c.lambda);
  c.alpha = rc.number("alpha", c.alpha);
  c.beta = rc.number("beta", c.beta);
  c.gamma = rc.number("gamma", c.gamma);
  c.tol = rc.number("tol", c.tol);
  c.max_iter = rc.integer("max_iter", c.max_iter);
  c.inner_tol = rc.number("inner_tol", c.inner_tol);
  c.inner_max = rc.integer("inner_max", c.inner_max);
  c.inner_damping = rc.number("inner_damping", c.inner_damping);
  try {
    c.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline Method method_of(const RunConfig& rc, Method fallback) {
  if (!rc.has("method")) return fallback;
  auto m = parse_method(rc.get("method"));
  if (!m) throw ConfigError("field 'method': unknown method '" + rc.get("method") + "'");
  return *m;
}

inline json solver_echo(const SolverConfig& c) {
  json j;
  j["h"] = c.h;
  j["lambda"] = c.lambda;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["gamma"] = c.gamma;
  j["tol"] = c.tol;
  j["max_iter"] = c.max_iter;
  j["inner_tol"] = c.inner_tol;
  j["inner_max"] = c.inner_max;
  j["inner_damping"] = c.inner_damping;
  return j;
}

inline SolverConfig solver_from_echo(const json& j) {
  SolverConfig c;
  auto num = [&](const char* k, double& dst) {
    if (j.contains(k)) dst = j.at(k).get<double>();
  };
  auto lng = [&](const char* k, long& dst) {
    if (j.contains(k)) dst = j.at(k).get<long>();
  };
  num("h", c.h);
  num("lambda", c.lambda);
  num("alpha", c.alpha);
  num("beta", c.beta);
  num("gamma", c.gamma);
  num("tol", c.tol);
  lng("max_iter", c.max_iter);
  num("inner_tol", c.inner_tol);
  lng("inner_max", c.inner_max);
  num("inner_damping", c.inner_damping);
  return c;
}

/// Config echo as `# key = value` lines, in the order of `echo`.
inline std::string csv_echo(const json& echo) {
  std::string s;
  for (const auto& [k, v] : echo.items()) {
    s += "# " + k + " = ";
    if (v.is_string()) {
      s += v.get<std::string>();
    } else if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ' ';
        s += v[i].is_number_float() ? fmt(v[i].get<double>()) : v[i].dump();
      }
    } else if (v.is_number_float()) {
      s += fmt(v.get<double>());
    } else {
      s += v.dump();
    }
    s += '\n';
  }
  return s;
}

// ---------------------------------------------------------------------------
// Output

/// Default file name inside $MVI_OUTPUT_DIR (or the working directory) when
/// no `output` is given; "-" writes to stdout.
inline std::filesystem::path output_path(const RunConfig& rc, const std::string& stem) {
  if (rc.has("output")) return rc.get("output");
  const char* dir = std::getenv("MVI_OUTPUT_DIR");
  const std::string ext = rc.format() == Format::json ? ".json" : ".csv";
  return std::filesystem::path(dir && *dir ? dir : ".") / (stem + ext);
}

inline void write_output(const std::filesystem::path& path, const std::string& content, std::ostream& out) {
  if (path == "-") {
    out << content;
    return;
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open output file '" + path.string() + "'");
  f << content;
  if (!f) throw ConfigError("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// solve

inline json report_to_json(const SolveReport& rep, json echo) {
  json j;
  j["method"] = to_string(rep.method);
  json its = json::array();
  for (const auto& x : rep.iterates) its.push_back(to_json(x));
  j["iterates"] = std::move(its);
  j["residuals"] = rep.residuals;
  j["successive_diffs"] = rep.successive_diffs;
  j["status"] = to_string(rep.status);
  j["config_echo"] = std::move(echo);
  j["warmup_count"] = rep.warmup_count;
  j["iterations"] = rep.iterations;
  if (rep.inner_failure) {
    j["inner_failure"] = {{"last", to_json(rep.inner_failure->last)},
                          {"defect", rep.inner_failure->defect},
                          {"outer_step", rep.inner_failure->outer_step}};
  } else {
    j["inner_failure"] = nullptr;
  }
  j["warnings"] = rep.warnings;
  return j;
}

inline std::string report_to_csv(const SolveReport& rep, const json& echo) {
  std::string s = csv_echo(echo);
  s += "# status = " + std::string(to_string(rep.status)) + '\n';
  s += "# iterations = " + std::to_string(rep.iterations) + '\n';
  s += "# warmup_count = " + std::to_string(rep.warmup_count) + '\n';
  for (const auto& w : rep.warnings) s += "# warning = " + w + '\n';
  const auto n = rep.iterates.empty() ? 0 : rep.iterates.front().size();
  s += "k";
  for (Eigen::Index i = 0; i < n; ++i) s += ",x_" + std::to_string(i);
  s += ",residual,successive_diff\n";
  for (std::size_t k = 0; k < rep.iterates.size(); ++k) {
    s += std::to_string(k);
    for (Eigen::Index i = 0; i < n; ++i) s += ',' + fmt(rep.iterates[k][i]);
    s += ',' + fmt(rep.residuals[k]) + ',';
    if (k > 0) s += fmt(rep.successive_diffs[k - 1]);
    s += '\n';
  }
  return s;
}

struct SolveRun {
  ProblemSpec spec;
  Method method;
  SolverConfig config;
  Point x0;
  json echo;
};

inline SolveRun prepare_solve(const RunConfig& rc, Method fallback_method) {
  if (!rc.has("problem")) throw ConfigError("field 'problem': required");
  ProblemSpec spec = resolve_problem(rc.get("problem"));
  const Method method = method_of(rc, fallback_method);
  SolverConfig cfg = solver_config(rc, &spec.problem);
  if (method == Method::explicit_recurrence && (cfg.alpha != 1.0 || cfg.beta != 1.0 || cfg.gamma != 1.0)) {
    throw ConfigError("method 'explicit' requires alpha = beta = gamma = 1");
  }
  Point x0 = rc.has("x0") ? parse_point("x0", rc.get("x0"))
                          : spec.start.value_or(Point::Zero(spec.problem.dim()));
  if (x0.size() != spec.problem.dim()) {
    throw ConfigError("field 'x0': expected " + std::to_string(spec.problem.dim()) + " entries, got " +
                      std::to_string(x0.size()));
  }
  json echo;
  echo["command"] = rc.command;
  echo["problem"] = spec.source;
  echo["method"] = to_string(method);
  const json solver_fields = solver_echo(cfg);
  for (auto& [k, v] : solver_fields.items()) echo[k] = v;
  echo["x0"] = to_json(x0);
  echo["seed"] = rc.seed();
  return SolveRun{std::move(spec), method, cfg, std::move(x0), std::move(echo)};
}

inline int status_exit_code(Status s) {
  switch (s) {
    case Status::converged: return kOk;
    case Status::max_iter: return kMaxIter;
    case Status::inner_solve_failed: return kInnerFailed;
    case Status::diverged: return kDiverged;
  }
  return kBadConfig;
}

inline int cmd_solve(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  SolveRun run = prepare_solve(rc, Method::algorithm1);
  SolveReport rep;
  try {
    rep = solve(run.spec.problem, run.method, run.config, run.x0);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const std::string content =
      rc.format() == Format::json ? report_to_json(rep, run.echo).dump(2) + "\n" : report_to_csv(rep, run.echo);
  write_output(output_path(rc, "solve_" + run.spec.label + "_" + to_string(run.method)), content, out);
  err << "solve: " << to_string(rep.status) << " after " << rep.iterations << " iterations, residual "
      << fmt(rep.residuals.back()) << '\n';
  return status_exit_code(rep.status);
}

// ---------------------------------------------------------------------------
// simulate

inline Integrator parse_integrator(const std::string& s) {
  if (s == "euler") return Integrator::euler;
  if (s == "rk4") return Integrator::rk4;
  throw ConfigError("field 'integrator': expected euler or rk4, got '" + s + "'");
}

inline int cmd_simulate(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  if (!rc.has("problem")) throw ConfigError("field 'problem': required");
  ProblemSpec spec = resolve_problem(rc.get("problem"));
  const auto n = spec.problem.dim();
  DynamicsParams params;
  params.alpha = rc.number("alpha", params.alpha);
  params.beta = rc.number("beta", params.beta);
  params.gamma = rc.number("gamma", params.gamma);
  params.lambda = rc.number("lambda", params.lambda);
  IntegrateOptions opt;
  opt.t_end = rc.number("t_end", opt.t_end);
  opt.dt = rc.number("dt", opt.dt);
  opt.method = parse_integrator(rc.get("integrator", "rk4"));
  const long every = rc.integer("record_every", 1);
  if (every < 1) throw ConfigError("field 'record_every': must be >= 1");
  opt.record_every = static_cast<std::size_t>(every);
  try {
    params.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (!(opt.dt > 0.0) || !(opt.t_end > 0.0)) throw ConfigError("fields 'dt' and 't_end' must be > 0");
  if (opt.dt > opt.t_end) throw ConfigError("field 'dt': must not exceed t_end");

  const int order = params.order();
  auto vec = [&](const char* key, std::optional<Point> fallback) -> Point {
    Point p = rc.has(key) ? parse_point(key, rc.get(key)) : fallback.value_or(Point::Zero(n));
    if (p.size() != n) throw ConfigError(std::string("field '") + key + "': wrong dimension");
    return p;
  };
  PhaseState init;
  init.x = vec("x0", spec.start);
  if (order >= 2) init.v = vec("v0", std::nullopt);
  else if (rc.has("v0")) throw ConfigError("field 'v0': not used by first-order dynamics");
  if (order == 3) init.a = vec("a0", std::nullopt);
  else if (rc.has("a0")) throw ConfigError("field 'a0': only used by third-order dynamics");

  Trajectory traj;
  try {
    traj = integrate(spec.problem, params, init, opt);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  json echo;
  echo["command"] = rc.command;
  echo["problem"] = spec.source;
  echo["alpha"] = params.alpha;
  echo["beta"] = params.beta;
  echo["gamma"] = params.gamma;
  echo["lambda"] = params.lambda;
  echo["order"] = order;
  echo["dt"] = opt.dt;
  echo["t_end"] = opt.t_end;
  echo["integrator"] = to_string(opt.method);
  echo["record_every"] = every;
  echo["x0"] = to_json(init.x);
  if (order >= 2) echo["v0"] = to_json(init.v);
  if (order == 3) echo["a0"] = to_json(init.a);
  echo["seed"] = rc.seed();

  std::vector<std::string> columns = {"t"};
  for (const char* block : {"x", "v", "a"}) {
    if ((block[0] == 'v' && order < 2) || (block[0] == 'a' && order < 3)) continue;
    for (Eigen::Index i = 0; i < n; ++i) columns.push_back(std::string(block) + "_" + std::to_string(i));
  }
  columns.push_back("residual");
  columns.push_back("lyapunov");

  const auto& ref = spec.problem.reference();
  std::vector<std::vector<double>> rows;
  rows.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const PhaseState& s = traj.states[k];
    std::vector<double> row = {traj.times[k]};
    for (const Point* b : {&s.x, &s.v, &s.a})
      for (Eigen::Index i = 0; i < b->size(); ++i) row.push_back((*b)[i]);
    row.push_back(traj.residuals[k]);
    row.push_back(ref ? lyapunov_value_shifted(s, ref->point) : lyapunov_value(s));
    rows.push_back(std::move(row));
  }

  std::string content;
  if (rc.format() == Format::json) {
    json j;
    j["config_echo"] = echo;
    j["order"] = order;
    j["diverged"] = traj.diverged;
    j["columns"] = columns;
    j["rows"] = rows;
    content = j.dump(2) + "\n";
  } else {
    content = csv_echo(echo);
    content += "# diverged = " + std::string(traj.diverged ? "true" : "false") + '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) content += (i ? "," : "") + columns[i];
    content += '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) content += (i ? "," : "") + fmt(row[i]);
      content += '\n';
    }
  }
  write_output(output_path(rc, "simulate_" + spec.label), content, out);
  if (traj.diverged) {
    err << "simulate: trajectory diverged at t = " << fmt(traj.times.empty() ? 0.0 : traj.times.back()) << '\n';
    return kDiverged;
  }
  err << "simulate: order " << order << ", " << traj.size() << " samples\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// check

inline SolveReport report_from_json(const json& j) {
  SolveReport rep;
  auto m = parse_method(j.at("method").get<std::string>());
  if (!m) throw ConfigError("report: unknown method");
  rep.method = *m;
  for (const auto& x : j.at("iterates")) rep.iterates.push_back(detail::json_point(x, "iterates"));
  if (j.contains("residuals")) rep.residuals = j["residuals"].get<std::vector<double>>();
  for (std::size_t k = 1; k < rep.iterates.size(); ++k) {
    rep.successive_diffs.push_back((rep.iterates[k] - rep.iterates[k - 1]).norm());
  }
  if (j.contains("status")) {
    auto st = parse_status(j["status"].get<std::string>());
    if (!st) throw ConfigError("report: unknown status");
    rep.status = *st;
  }
  rep.config_echo = solver_from_echo(j.at("config_echo"));
  rep.warmup_count = j.at("warmup_count").get<int>();
  if (j.contains("iterations")) rep.iterations = j["iterations"].get<long>();
  return rep;
}

inline int cmd_check(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  SolveReport rep;
  std::optional<ProblemSpec> spec;
  json echo;
  if (rc.has("report")) {
    std::ifstream f(rc.get("report"), std::ios::binary);
    if (!f) throw ConfigError("field 'report': cannot open '" + rc.get("report") + "'");
    json j;
    try {
      j = json::parse(f);
      rep = report_from_json(j);
      const std::string problem =
          rc.has("problem") ? rc.get("problem") : j.at("config_echo").at("problem").get<std::string>();
      spec = resolve_problem(problem);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("report: ") + e.what());
    }
    if (rc.has("method") && method_of(rc, rep.method) != rep.method) {
      throw ConfigError("report method '" + std::string(to_string(rep.method)) + "' does not match requested '" +
                        rc.get("method") + "'");
    }
    echo["command"] = rc.command;
    echo["report"] = rc.get("report");
    echo["problem"] = spec->source;
    echo["method"] = to_string(rep.method);
    const json solver_fields = solver_echo(rep.config_echo);
    for (auto& [k, v] : solver_fields.items()) echo[k] = v;
    echo["seed"] = rc.seed();
  } else {
    SolveRun run = prepare_solve(rc, Method::algorithm1);
    try {
      rep = solve(run.spec.problem, run.method, run.config, run.x0);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    spec = std::move(run.spec);
    echo = std::move(run.echo);
  }
  if (rep.method != Method::algorithm1) {
    throw ConfigError("check: report comes from method '" + std::string(to_string(rep.method)) +
                      "', the energy inequality applies to algorithm1 only");
  }
  const auto& ref = spec->problem.reference();
  if (!ref) throw ConfigError("check: problem has no reference solution");
  for (const auto& x : rep.iterates) {
    if (x.size() != spec->problem.dim()) throw ConfigError("report: iterate dimension does not match the problem");
  }

  const InequalityScan scan = energy_inequality_scan(rep, ref->point);
  if (scan.records.empty()) throw ConfigError("check: report holds no outer steps past the warm-up");
  const SummabilityReport sum = summability_report(rep);
  const double tail_increase = distance_tail_increase(rep, ref->point);

  std::string content;
  if (rc.format() == Format::json) {
    json j;
    j["config_echo"] = echo;
    json recs = json::array();
    for (const auto& r : scan.records) {
      recs.push_back({{"n", r.n}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"gap", r.gap}});
    }
    j["records"] = std::move(recs);
    j["violations"] = scan.violations;
    j["tolerance"] = scan.tolerance;
    j["min_gap"] = scan.min_gap;
    j["summability"] = {{"tail_max_diff", sum.tail_max_diff},
                        {"partial_sums", sum.partial_sums},
                        {"cauchy_ok", sum.cauchy_ok}};
    j["distance_tail_increase"] = tail_increase;
    content = j.dump(2) + "\n";
  } else {
    content = csv_echo(echo);
    content += "# violations = " + std::to_string(scan.violations) + '\n';
    content += "# tolerance = " + fmt(scan.tolerance) + '\n';
    content += "# min_gap = " + fmt(scan.min_gap) + '\n';
    content += "# tail_max_diff = " + fmt(sum.tail_max_diff) + '\n';
    content += "# partial_sum = " + fmt(sum.partial_sums.back()) + '\n';
    content += "# cauchy_ok = " + std::string(sum.cauchy_ok ? "true" : "false") + '\n';
    content += "# distance_tail_increase = " + fmt(tail_increase) + '\n';
    content += "n,lhs,rhs,gap,violated\n";
    for (const auto& r : scan.records) {
      content += std::to_string(r.n) + ',' + fmt(r.lhs) + ',' + fmt(r.rhs) + ',' + fmt(r.gap) + ',' +
                 (r.gap < -scan.tolerance ? "1" : "0") + '\n';
    }
  }
  write_output(output_path(rc, "check_" + spec->label), content, out);
  err << "check: " << scan.records.size() << " steps, " << scan.violations << " violations\n";
  return scan.violations == 0 ? kOk : kViolations;
}

// ---------------------------------------------------------------------------
// bench

struct BenchRow {
  std::string problem;
  std::string method;
  std::string status;
  long iterations = 0;
  double residual = 0.0;
  double distance = 0.0;
};

inline int cmd_bench(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  std::vector<Method> methods(kAllMethods.begin(), kAllMethods.end());
  if (rc.has("method")) methods = {method_of(rc, Method::algorithm1)};
  solver_config(rc, nullptr);  // validate overrides up front

  const auto entries = catalog();
  std::vector<std::future<std::vector<BenchRow>>> jobs;
  for (const auto& e : entries) {
    jobs.push_back(std::async(std::launch::async, [&rc, &e, &methods] {
      std::vector<BenchRow> rows;
      const SolverConfig cfg = solver_config(rc, &e.problem);
      for (Method m : methods) {
        BenchRow row{e.name, to_string(m), "", 0, 0.0, 0.0};
        try {
          const SolveReport rep = solve(e.problem, m, cfg, e.start);
          row.status = to_string(rep.status);
          row.iterations = rep.iterations;
          row.residual = rep.residuals.back();
          row.distance = (rep.iterates.back() - e.solution()).norm();
        } catch (const Error&) {
          row.status = "invalid_config";
        }
        rows.push_back(std::move(row));
      }
      return rows;
    }));
  }
  std::vector<BenchRow> rows;
  for (auto& j : jobs) {
    auto part = j.get();
    rows.insert(rows.end(), part.begin(), part.end());
  }

  json echo;
  echo["command"] = rc.command;
  if (rc.has("method")) echo["method"] = rc.get("method");
  const json solver_fields = solver_echo(solver_config(rc, nullptr));
  for (auto& [k, v] : solver_fields.items()) {
    if (k != "lambda" || rc.has("lambda")) echo[k] = v;
  }
  if (!rc.has("lambda")) echo["lambda"] = "per-problem default";
  echo["seed"] = rc.seed();

  std::string content;
  if (rc.format() == Format::json) {
    json j;
    j["config_echo"] = echo;
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back({{"problem", r.problem},
                     {"method", r.method},
                     {"status", r.status},
                     {"iterations", r.iterations},
                     {"final_residual", r.residual},
                     {"distance_to_reference", r.distance}});
    }
    j["runs"] = std::move(arr);
    content = j.dump(2) + "\n";
  } else {
    content = csv_echo(echo);
    content += "problem,method,status,iterations,final_residual,distance_to_reference\n";
    for (const auto& r : rows) {
      content += r.problem + ',' + r.method + ',' + r.status + ',' + std::to_string(r.iterations) + ',' +
                 fmt(r.residual) + ',' + fmt(r.distance) + '\n';
    }
  }
  write_output(output_path(rc, "bench"), content, out);
  err << "bench: " << rows.size() << " runs\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// catalog

inline int cmd_catalog(const RunConfig& rc, std::ostream& out, std::ostream&) {
  const auto entries = catalog();
  const auto seed = static_cast<std::uint64_t>(rc.seed());
  constexpr int kSamples = 2000;
  std::string content;
  if (rc.format() == Format::json) {
    json arr = json::array();
    for (const auto& e : entries) {
      const auto mono = estimate_monotonicity(e.problem.op(), e.region, kSamples, seed);
      arr.push_back({{"name", e.name},
                     {"description", e.description},
                     {"dim", e.problem.dim()},
                     {"phi", to_string(e.problem.phi().kind())},
                     {"class", to_string(e.monotonicity_class)},
                     {"provenance", to_string(e.solution_provenance)},
                     {"solution", to_json(e.solution())},
                     {"start", to_json(e.start)},
                     {"min_monotonicity_quotient", mono.min_quotient},
                     {"lipschitz_estimate", estimate_lipschitz(e.problem.op(), e.region, kSamples, seed)}});
    }
    json j;
    j["config_echo"] = {{"command", "catalog"}, {"seed", rc.seed()}};
    j["entries"] = std::move(arr);
    content = j.dump(2) + "\n";
  } else {
    content = "# command = catalog\n# seed = " + std::to_string(rc.seed()) + '\n';
    content += "name,dim,phi,class,provenance,solution,start,min_monotonicity_quotient,lipschitz_estimate\n";
    for (const auto& e : entries) {
      const auto mono = estimate_monotonicity(e.problem.op(), e.region, kSamples, seed);
      content += e.name + ',' + std::to_string(e.problem.dim()) + ',' + to_string(e.problem.phi().kind()) + ',' +
                 to_string(e.monotonicity_class) + ',' + to_string(e.solution_provenance) + ',' +
                 fmt_list(e.solution()) + ',' + fmt_list(e.start) + ',' + fmt(mono.min_quotient) + ',' +
                 fmt(estimate_lipschitz(e.problem.op(), e.region, kSamples, seed)) + '\n';
    }
  }
  write_output(rc.has("output") ? std::filesystem::path(rc.get("output")) : std::filesystem::path("-"), content, out);
  return kOk;
}

// ---------------------------------------------------------------------------
// Entry point

/// Merges the optional config file with the flags that were given.
inline RunConfig merge_config(const std::string& command, const std::string& config_file,
                              const std::map<std::string, std::string>& flags) {
  const auto keys = keys_for(command);
  RunConfig rc{command, {}};
  if (!config_file.empty()) {
    std::ifstream f(config_file, std::ios::binary);
    if (!f) throw ConfigError("cannot open config file '" + config_file + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    for (auto& cl : parse_config_text(ss.str(), {keys.begin(), keys.end()})) rc.values[cl.key] = cl.value;
  }
  for (const auto& [k, v] : flags) rc.values[k] = v;
  return rc;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Solvers, dynamics and diagnostics for mixed variational inequalities", "mvi"};
  app.require_subcommand(1);

  const std::vector<std::string> commands = {"solve", "simulate", "check", "bench", "catalog"};
  const std::map<std::string, std::string> help = {
      {"solve", "Run a discrete method and write its report"},
      {"simulate", "Integrate the resolvent dynamics and write the trajectory"},
      {"check", "Scan the energy inequality and summability of an algorithm1 run"},
      {"bench", "Run every catalog entry with every method"},
      {"catalog", "List the benchmark catalog"}};

  std::map<std::string, std::map<std::string, std::string>> flag_values;
  std::map<std::string, std::map<std::string, CLI::Option*>> flag_opts;
  std::map<std::string, std::string> config_files;
  for (const auto& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd, help.at(cmd));
    sub->set_help_flag("--help", "Print this help message and exit");
    if (cmd != "catalog") sub->add_option("--config", config_files[cmd], "Config file with key = value lines");
    for (const auto& key : keys_for(cmd)) {
      flag_opts[cmd][key] = sub->add_option(flag_name(key), flag_values[cmd][key]);
    }
  }

  std::vector<const char*> argv = {"mvi"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kBadConfig;
  }

  for (const auto& cmd : commands) {
    if (!app.got_subcommand(cmd)) continue;
    std::map<std::string, std::string> given;
    for (const auto& [key, opt] : flag_opts[cmd]) {
      if (opt->count() > 0) given[key] = flag_values[cmd][key];
    }
    try {
      const RunConfig rc = merge_config(cmd, config_files[cmd], given);
      if (cmd == "solve") return cmd_solve(rc, out, err);
      if (cmd == "simulate") return cmd_simulate(rc, out, err);
      if (cmd == "check") return cmd_check(rc, out, err);
      if (cmd == "bench") return cmd_bench(rc, out, err);
      return cmd_catalog(rc, out, err);
    } catch (const Error& e) {
      err << "mvi " << cmd << ": " << e.what() << '\n';
      return kBadConfig;
    } catch (const std::filesystem::filesystem_error& e) {
      err << "mvi " << cmd << ": " << e.what() << '\n';
      return kBadConfig;
    }
  }
  return kBadConfig;
}

}  // namespace mvi::cli
