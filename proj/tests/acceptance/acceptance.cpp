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

// Acceptance gate. Runs every criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion; exits nonzero if any fails.
//
//   acceptance [output_dir] [criteria, e.g. 6,8]

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mvi/mvi.hpp"
#include "mvi_cli.hpp"
#include "oracles.hpp"

namespace {

namespace fs = std::filesystem;
using mvi::Method;
using mvi::Point;
using mvi::SolverConfig;
using mvi::Status;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few failure messages of a criterion.
struct Tally {
  bool pass = true;
  std::vector<std::string> notes;
  void fail(const std::string& why) {
    pass = false;
    if (notes.size() < 6) notes.push_back(why);
  }
  void check(bool ok, const std::string& why) {
    if (!ok) fail(why);
  }
  Outcome outcome(std::string summary) const {
    for (const auto& n : notes) summary += "; " + n;
    return {pass, summary};
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome prox_correctness() {
  Tally t;
  double worst_firm = -mvi::kInfinity, worst_lemma = -mvi::kInfinity, worst_margin = mvi::kInfinity;
  for (mvi::ProxKind kind : oracle::kAllKinds) {
    oracle::Gen g(100 + static_cast<int>(kind));
    for (int i = 0; i < 10000; ++i) {
      const int n = g.integer(1, 5);
      const auto phi = g.prox(kind, n);
      const double rho = g.uniform(0.05, 5.0);
      const Point x = g.point(n, -4, 4), y = g.point(n, -4, 4);
      const Point jx = phi.prox(x, rho), jy = phi.prox(y, rho);
      worst_firm = std::max(worst_firm, (jx - jy).squaredNorm() - (jx - jy).dot(x - y));
      worst_lemma = std::max(worst_lemma, mvi::resolvent_lemma_gap(phi, x, g.inside(phi, n), rho));
    }
    for (int n : {1, 2}) {
      for (int i = 0; i < 50; ++i) {
        const auto phi = g.prox(kind, n);
        const double rho = g.uniform(0.05, 5.0);
        const Point x = g.point(n, -4, 4);
        const double mine = oracle::prox_objective(phi, x, rho, phi.prox(x, rho));
        const double brute = oracle::brute_prox_min(phi, x, rho, static_cast<std::uint64_t>(1000 * n + i));
        worst_margin = std::min(worst_margin, brute - mine);
        t.check(brute - mine >= -1e-8, std::string(mvi::to_string(kind)) + " brute force beats prox by " +
                                           num(mine - brute));
      }
    }
  }
  t.check(worst_firm <= 1e-10, "firm nonexpansiveness defect " + num(worst_firm));
  t.check(worst_lemma <= 1e-10, "resolvent lemma gap " + num(worst_lemma));
  return t.outcome("firm " + num(worst_firm) + ", lemma " + num(worst_lemma) + ", brute margin " +
                   num(worst_margin));
}

Outcome fixed_point_characterization() {
  Tally t;
  double worst_ref = 0.0;
  int converged = 0;
  for (const auto& e : mvi::catalog()) {
    const double r = mvi::natural_residual(e.problem, e.solution(), 1.0);
    worst_ref = std::max(worst_ref, r);
    t.check(r <= 1e-8, e.name + " reference residual " + num(r));
    SolverConfig c = SolverConfig::for_problem(e.problem);
    c.tol = 1e-6;
    for (Method m : mvi::kAllMethods) {
      const auto rep = mvi::solve(e.problem, m, c, e.start);
      if (rep.status != Status::converged) continue;
      ++converged;
      t.check(rep.residuals.back() <= 1e-6, e.name + "/" + mvi::to_string(m) + " residual " +
                                                num(rep.residuals.back()));
    }
  }
  return t.outcome("max reference residual " + num(worst_ref) + ", " + std::to_string(converged) +
                   " converged runs checked");
}

// Algorithm 1 runs shared by the energy-inequality and summability criteria.
struct Alg1Run {
  mvi::CatalogEntry entry;
  mvi::SolveReport report;
};

std::vector<Alg1Run> algorithm1_runs() {
  std::vector<Alg1Run> runs;
  for (const auto& e : mvi::catalog()) {
    SolverConfig c = SolverConfig::for_problem(e.problem);
    c.h = 2.0;
    c.inner_tol = 1e-10;
    c.tol = 1e-11;
    c.max_iter = 200000;
    runs.push_back({e, mvi::solve(e.problem, Method::algorithm1, c, e.start)});
  }
  return runs;
}

Outcome energy_inequality(const std::vector<Alg1Run>& runs) {
  Tally t;
  long records = 0, violations = 0;
  double min_gap = mvi::kInfinity;
  for (const auto& r : runs) {
    t.check(r.report.config_echo.descent_coefficient() > 0.0, r.entry.name + " descent coefficient not positive");
    const auto scan = mvi::energy_inequality_scan(r.report, r.entry.solution());
    records += static_cast<long>(scan.records.size());
    violations += scan.violations;
    min_gap = std::min(min_gap, scan.min_gap);
    if (scan.violations > 0) {
      t.fail(r.entry.name + ": " + std::to_string(scan.violations) + " of " + std::to_string(scan.records.size()) +
             " steps violate, min gap " + num(scan.min_gap));
    }
  }
  return t.outcome(std::to_string(violations) + " violations over " + std::to_string(records) +
                   " steps, min gap " + num(min_gap));
}

Outcome summability(const std::vector<Alg1Run>& runs) {
  Tally t;
  double worst_inc = -mvi::kInfinity, worst_tail = 0.0;
  for (const auto& r : runs) {
    t.check(r.report.status == Status::converged, r.entry.name + " status " + mvi::to_string(r.report.status));
    const double inc = mvi::distance_tail_increase(r.report, r.entry.solution());
    const auto s = mvi::summability_report(r.report);
    worst_inc = std::max(worst_inc, inc);
    worst_tail = std::max(worst_tail, s.tail_max_diff);
    t.check(inc <= 1e-8, r.entry.name + " distance increases by " + num(inc));
    t.check(s.tail_max_diff <= 1e-8, r.entry.name + " tail difference " + num(s.tail_max_diff));
    t.check(s.cauchy_ok, r.entry.name + " partial sums not Cauchy");
  }
  return t.outcome("max distance increase " + num(worst_inc) + ", max tail difference " + num(worst_tail));
}

// Consistent third-order start: the acceleration the reduced second-order
// system prescribes at rest.
Point reduced_acceleration(const mvi::MviProblem& p, const mvi::DynamicsParams& d, const Point& x0) {
  return (p.fixed_point_map(x0, d.lambda) - x0) / d.beta;
}

Outcome special_case_reductions() {
  Tally t;
  double worst_euler = 0.0;
  for (const auto& e : mvi::catalog()) {
    const SolverConfig c = SolverConfig::for_problem(e.problem);
    std::vector<Point> base = {e.start};
    for (int k = 0; k < 50; ++k) base.push_back(mvi::step_baseline(e.problem, c, base.back()));
    mvi::DynamicsParams d;
    d.alpha = d.beta = 0.0;
    d.gamma = 1.0;
    d.lambda = c.lambda;
    mvi::IntegrateOptions opt;
    opt.t_end = 50.0;
    opt.dt = 1.0;
    opt.method = mvi::Integrator::euler;
    const auto traj = mvi::integrate(e.problem, d, oracle::rest_state(e.start, 1), opt);
    t.check(traj.size() == base.size(), e.name + " trajectory has " + std::to_string(traj.size()) + " samples");
    const std::size_t m = std::min(traj.size(), base.size());
    for (std::size_t k = 0; k < m; ++k) {
      const double err = (traj.states[k].x - base[k]).norm();
      const double scale = 1.0 + base[k].norm();
      worst_euler = std::max(worst_euler, err / scale);
      t.check(err <= 1e-12 * scale, e.name + " euler step " + std::to_string(k) + " differs by " + num(err));
    }
  }

  // alpha = 1e-8 against alpha = 0 on the smooth entries. Forward Euler with
  // dt = alpha resolves the fast mode -beta/alpha.
  constexpr double kAlpha = 1e-8;
  constexpr double kSampleDt = 1e-3;
  std::vector<std::future<std::pair<std::string, double>>> jobs;
  for (const auto& e : mvi::catalog()) {
    if (!e.smooth()) continue;
    jobs.push_back(std::async(std::launch::async, [e] {
      mvi::DynamicsParams reduced;
      reduced.alpha = 0.0;
      reduced.beta = 1.0;
      reduced.gamma = 1.0;
      reduced.lambda = std::min(1.0, 1.0 / *e.problem.op().lipschitz_hint());
      mvi::IntegrateOptions ro;
      ro.t_end = 5.0;
      ro.dt = 1e-4;
      ro.record_every = 10;
      const auto ref = mvi::integrate(e.problem, reduced, oracle::rest_state(e.start, 2), ro);

      mvi::DynamicsParams full = reduced;
      full.alpha = kAlpha;
      mvi::PhaseState s0 = oracle::rest_state(e.start, 3);
      s0.a = reduced_acceleration(e.problem, reduced, e.start);
      mvi::IntegrateOptions fo;
      fo.t_end = 5.0;
      fo.dt = kAlpha;
      fo.method = mvi::Integrator::euler;
      fo.record_every = static_cast<std::size_t>(std::llround(kSampleDt / kAlpha));
      const auto tr = mvi::integrate(e.problem, full, s0, fo);
      double sup = tr.diverged || tr.size() != ref.size() ? mvi::kInfinity : 0.0;
      if (sup == 0.0) {
        for (std::size_t k = 0; k < tr.size(); ++k) sup = std::max(sup, (tr.states[k].x - ref.states[k].x).norm());
      }
      return std::make_pair(e.name, sup);
    }));
  }
  double worst_sup = 0.0;
  for (auto& j : jobs) {
    const auto [name, sup] = j.get();
    worst_sup = std::max(worst_sup, sup);
    t.check(sup <= 1e-3, name + " small-alpha sup error " + num(sup));
  }
  return t.outcome("euler/baseline max relative gap " + num(worst_euler) + ", small-alpha sup error " +
                   num(worst_sup));
}

Outcome integrator_order() {
  Tally t;
  double min_ratio = mvi::kInfinity;
  for (const auto& e : mvi::catalog()) {
    if (!e.smooth()) continue;
    mvi::DynamicsParams d;
    d.lambda = std::min(1.0, 1.0 / *e.problem.op().lipschitz_hint());
    const auto s0 = oracle::rest_state(e.start, 3);
    const double dt0 = 0.1, t_end = 4.0;
    // Sampled on the coarsest grid; the error is the sup over those samples.
    auto run = [&](int halvings) {
      mvi::IntegrateOptions o;
      o.t_end = t_end;
      o.dt = dt0 / (1 << halvings);
      o.record_every = static_cast<std::size_t>(1) << halvings;
      return mvi::integrate(e.problem, d, s0, o);
    };
    const auto ref = run(4);
    std::vector<double> err;
    for (int k = 0; k < 4; ++k) {
      const auto tr = run(k);
      double sup = 0.0;
      for (std::size_t i = 0; i < tr.size() && i < ref.size(); ++i) {
        sup = std::max(sup, (tr.states[i].x - ref.states[i].x).norm());
      }
      err.push_back(sup);
    }
    for (int k = 0; k < 3; ++k) {
      const double ratio = err[k] / err[k + 1];
      min_ratio = std::min(min_ratio, ratio);
      t.check(ratio >= 12.0, e.name + " halving " + std::to_string(k + 1) + " ratio " + num(ratio));
    }
  }
  return t.outcome("min error ratio per halving " + num(min_ratio));
}

Outcome exponential_stability() {
  Tally t;
  std::string recorded;
  double worst = 0.0, min_eta = mvi::kInfinity;
  for (const auto& e : mvi::catalog()) {
    const auto d = oracle::overdamped_params(e.problem);
    mvi::IntegrateOptions o;
    o.t_end = 40.0;
    o.dt = 1e-3;
    o.record_every = 10;
    const auto tr = mvi::integrate(e.problem, d, oracle::rest_state(e.start, 3), o);
    const auto fit = mvi::estimate_decay_rate(tr, e.solution(), 0.5);
    const auto chk = mvi::exp_stability_report(tr, e.solution(), fit);
    if (e.monotonicity_class != mvi::MonotonicityClass::strongly_monotone) {
      recorded += " " + e.name + " eta " + num(fit.eta) + " (recorded)";
      continue;
    }
    worst = std::max(worst, chk.max_violation);
    min_eta = std::min(min_eta, fit.eta);
    t.check(!tr.diverged, e.name + " diverged");
    t.check(fit.eta > 0.0, e.name + " eta " + num(fit.eta));
    t.check(chk.pass, e.name + " bound ratio " + num(chk.max_violation));
  }
  return t.outcome("min eta " + num(min_eta) + ", max bound ratio " + num(worst) + ";" + recorded);
}

Outcome oracle_equivalence() {
  Tally t;
  int compared = 0;
  for (const auto& e : mvi::catalog()) {
    const int res = e.problem.dim() == 1 ? 6001 : 601;
    const Point g = mvi::grid_oracle(e.problem, e.region, res);
    const Point cell = (e.region.hi - e.region.lo) / (res - 1);
    const SolverConfig c = SolverConfig::for_problem(e.problem);
    for (Method m : mvi::kAllMethods) {
      const auto rep = mvi::solve(e.problem, m, c, e.start);
      if (rep.status != Status::converged) continue;
      ++compared;
      const Point diff = (rep.iterates.back() - g).cwiseAbs();
      t.check((diff.array() <= cell.array()).all(),
              e.name + "/" + mvi::to_string(m) + " is " + num(diff.maxCoeff()) + " from the grid point");
    }
  }
  const auto lcp = *mvi::find_entry("lcp");
  SolverConfig c = SolverConfig::for_problem(lcp.problem);
  c.tol = 1e-13;
  const auto rep = mvi::solve(lcp.problem, Method::algorithm1, c, lcp.start);
  const auto cc = mvi::complementarity_check(lcp, rep.iterates.back());
  t.check(rep.status == Status::converged, "lcp solve did not converge");
  t.check(cc.feasible && cc.dual_feasible, "lcp limit infeasible");
  t.check(std::abs(cc.gap) <= 1e-8, "lcp complementarity gap " + num(cc.gap));
  return t.outcome(std::to_string(compared) + " limits within one cell, lcp gap " + num(cc.gap));
}

// Runs a fixed list of CLI invocations into `dir`.
void cli_suite(const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<std::vector<std::string>> calls;
  auto out = [&](const std::string& name) { return (dir / name).string(); };
  for (const auto& e : mvi::catalog()) {
    calls.push_back({"solve", "--problem", e.name, "--format", "json", "--output", out("solve_" + e.name + ".json")});
    calls.push_back({"solve", "--problem", e.name, "--method", "baseline", "--output", out("base_" + e.name + ".csv")});
    calls.push_back({"simulate", "--problem", e.name, "--t-end", "5", "--dt", "0.01", "--output",
                     out("sim_" + e.name + ".csv")});
    calls.push_back({"check", "--report", out("solve_" + e.name + ".json"), "--format", "json", "--output",
                     out("check_" + e.name + ".json")});
  }
  calls.push_back({"bench", "--output", out("bench.csv")});
  calls.push_back({"bench", "--format", "json", "--output", out("bench.json")});
  calls.push_back({"catalog", "--seed", "7", "--output", out("catalog.csv")});
  std::ostringstream sink;
  for (const auto& a : calls) mvi::cli::run(a, sink, sink);
}

Outcome determinism(const fs::path& root) {
  Tally t;
  // Both runs write into the same directory (the check echo records the
  // report path); the first run's files are moved aside before the second.
  const fs::path work = root / "run", a = root / "run_first", b = work;
  fs::remove_all(work);
  fs::remove_all(a);
  cli_suite(work);
  fs::rename(work, a);
  cli_suite(work);
  int files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    ++files;
    const fs::path other = b / entry.path().filename();
    auto slurp = [](const fs::path& p) {
      std::ifstream f(p, std::ios::binary);
      std::stringstream ss;
      ss << f.rdbuf();
      return ss.str();
    };
    t.check(fs::exists(other) && slurp(entry.path()) == slurp(other), entry.path().filename().string() + " differs");
  }
  t.check(files > 0, "no output files");
  return t.outcome(std::to_string(files) + " files compared");
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "mvi_acceptance";
  // Optional second argument: run only the listed criteria, e.g. "6,8".
  std::set<std::size_t> only;
  if (argc > 2) {
    std::stringstream ss(argv[2]);
    for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoul(tok));
  }
  fs::create_directories(root);

  struct Criterion {
    const char* name;
    double budget_s;  // 0 = no stated budget
    std::function<Outcome()> run;
  };
  std::vector<Alg1Run> runs;
  double runs_s = 0.0;
  auto with_runs = [&](auto f) {
    return [&, f] {
      if (runs.empty()) {
        const auto t0 = std::chrono::steady_clock::now();
        runs = algorithm1_runs();
        runs_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      }
      return f(runs);
    };
  };
  const std::vector<Criterion> criteria = {
      {"prox correctness", 10.0, prox_correctness},
      {"fixed-point characterization", 30.0, fixed_point_characterization},
      {"energy inequality of algorithm1", 60.0, with_runs(energy_inequality)},
      {"vanishing differences of algorithm1", 0.0, with_runs(summability)},
      {"special-case reductions", 0.0, special_case_reductions},
      {"integrator order", 0.0, integrator_order},
      {"exponential stability", 0.0, exponential_stability},
      {"oracle equivalence", 0.0, oracle_equivalence},
      {"determinism", 0.0, [&] { return determinism(root); }},
  };

  int failures = 0;
  std::ofstream summary(root / "summary.txt");
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    if (!only.empty() && !only.count(i + 1)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (i == 2) secs = std::max(secs, runs_s);
    if (c.budget_s > 0.0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += "; over the " + num(c.budget_s) + " s budget";
    }
    if (!o.pass) ++failures;
    char line[64];
    std::snprintf(line, sizeof line, "%s [%zu] ", o.pass ? "PASS" : "FAIL", i + 1);
    std::ostringstream msg;
    msg << line << c.name << " (" << num(secs) << " s): " << o.detail;
    std::cout << msg.str() << std::endl;
    summary << msg.str() << '\n';
  }
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
