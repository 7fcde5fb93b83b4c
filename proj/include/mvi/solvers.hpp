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

// Discrete-time inertial proximal methods obtained from finite-difference
// discretizations of the third-order resolvent dynamics.
//
// Every multi-step method advances a window of four back-values
// (x_{n-2}, x_{n-1}, x_n, x_{n+1}) to x_{n+2}. With
//
//   stencil = x_{n+2} - 2 x_{n+1} + 2 x_{n-1} - x_{n-2}   (~ 2h^3 x''')
//
// the methods are:
//
//   algorithm1  x_{n+2} = J[x_n - lambda T(x_{n+2}) - S1(x_{n+2}) / 2h^3]
//   algorithm2  x_{n+2} = J[x_n - lambda T(x_{n+1}) - S2(x_{n+2}) / 2h^3]
//   explicit    x_{n+2} = (H/(1+H)) J[(1 - 1/h + 2/h^2) x_n - lambda T(x_n)
//                           - ((2h-2) x_{n+1} + (2+2h-2h^2) x_{n-1} - x_{n-2}) / 2h^3],
//               H = 2h^3, alpha = beta = gamma = 1 only
//   direct      alpha D3 + beta D2 + gamma D1 + x_{n+2} = J(x_n - lambda T(x_{n+2}))
//               solved exactly for x_{n+2}
//   baseline    x_{k+1} = J(x_k - lambda T(x_k))
//
// S1 and S2 are the weighted stencils written out in weighted_stencil_1/2.
// Implicit relations are solved by damped fixed-point iteration.

#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mvi/common.hpp"
#include "mvi/core.hpp"

namespace mvi {

enum class Method { algorithm1, algorithm2, explicit_recurrence, direct, baseline };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::algorithm1: return "algorithm1";
    case Method::algorithm2: return "algorithm2";
    case Method::explicit_recurrence: return "explicit";
    case Method::direct: return "direct";
    case Method::baseline: return "baseline";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view s) {
  for (Method m : {Method::algorithm1, Method::algorithm2, Method::explicit_recurrence,
                   Method::direct, Method::baseline}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

inline constexpr std::array<Method, 5> kAllMethods = {Method::algorithm1, Method::algorithm2,
                                                      Method::explicit_recurrence, Method::direct,
                                                      Method::baseline};

enum class Status { converged, max_iter, inner_solve_failed, diverged };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::converged: return "converged";
    case Status::max_iter: return "max_iter";
    case Status::inner_solve_failed: return "inner_solve_failed";
    case Status::diverged: return "diverged";
  }
  return "?";
}

inline std::optional<Status> parse_status(std::string_view s) {
  for (Status st : {Status::converged, Status::max_iter, Status::inner_solve_failed, Status::diverged}) {
    if (s == to_string(st)) return st;
  }
  return std::nullopt;
}

struct SolverConfig {
  double h = 2.0;
  double lambda = 0.1;
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double tol = 1e-6;
  long max_iter = 10000;
  double inner_tol = 1e-12;
  long inner_max = 1000;
  double inner_damping = 0.5;

  /// alpha - beta h + gamma h^2, the coefficient of |x* - x_{n+2}|^2 in the
  /// per-step inequality of algorithm1.
  double descent_coefficient() const { return alpha - beta * h + gamma * h * h; }
  bool descent_warning() const { return !(descent_coefficient() > 0.0); }

  void validate() const {
    auto pos = [](double v) { return std::isfinite(v) && v > 0.0; };
    require(pos(h), "SolverConfig: h must be > 0");
    require(pos(lambda), "SolverConfig: lambda must be > 0");
    require(std::isfinite(alpha) && alpha >= 0.0, "SolverConfig: alpha must be >= 0");
    require(std::isfinite(beta) && beta >= 0.0, "SolverConfig: beta must be >= 0");
    require(std::isfinite(gamma) && gamma >= 0.0, "SolverConfig: gamma must be >= 0");
    require(pos(tol), "SolverConfig: tol must be > 0");
    require(max_iter >= 0, "SolverConfig: max_iter must be >= 0");
    require(pos(inner_tol), "SolverConfig: inner_tol must be > 0");
    require(inner_max >= 1, "SolverConfig: inner_max must be >= 1");
    require(std::isfinite(inner_damping) && inner_damping > 0.0 && inner_damping <= 1.0,
            "SolverConfig: inner_damping must be in (0, 1]");
  }

  /// Default lambda = min(0.9 / L, 1) when the operator carries a Lipschitz
  /// hint, else 0.1.
  static double default_lambda(const MviProblem& p) {
    if (auto l = p.op().lipschitz_hint(); l && *l > 0.0) return std::min(0.9 / *l, 1.0);
    return 0.1;
  }

  static SolverConfig for_problem(const MviProblem& p) {
    SolverConfig c;
    c.lambda = default_lambda(p);
    return c;
  }
};

/// Window of the last four iterates, oldest first.
struct History {
  std::array<Point, 4> x;

  const Point& x_nm2() const { return x[0]; }
  const Point& x_nm1() const { return x[1]; }
  const Point& x_n() const { return x[2]; }
  const Point& x_np1() const { return x[3]; }

  static History constant(const Point& p) { return {{p, p, p, p}}; }

  void push(Point next) {
    x[0] = std::move(x[1]);
    x[1] = std::move(x[2]);
    x[2] = std::move(x[3]);
    x[3] = std::move(next);
  }
};

struct StepResult {
  Point x;
  bool converged = true;
  long inner_iterations = 0;
  /// |u - RHS(u)| of the implicit relation at the returned point.
  double defect = 0.0;
};

/// J_phi(x - lambda T(x)).
inline Point step_baseline(const MviProblem& p, const SolverConfig& c, const ConstRef& x) {
  return p.fixed_point_map(x, c.lambda);
}

/// (x0, p(x0), p^2(x0), p^3(x0)) with p the baseline map.
inline History warm_up(const MviProblem& p, const SolverConfig& c, const ConstRef& x0) {
  require_dim(x0, p.dim(), "warm_up");
  require_finite(x0, "warm_up");
  History hist;
  hist.x[0] = x0;
  for (int i = 1; i < 4; ++i) {
    hist.x[i] = step_baseline(p, c, hist.x[i - 1]);
    if (!hist.x[i].allFinite()) {
      throw Error("warm_up: non-finite iterate " + std::to_string(i) + " from x0 = " + format_point(x0));
    }
  }
  return hist;
}

/// Known part of algorithm1's weighted stencil, i.e. S1(u) - alpha u:
/// -2(a - bh) x_{n+1} - 2(2bh - gh^2) x_n + 2(a + bh - gh^2) x_{n-1} - a x_{n-2}.
inline Point weighted_stencil_1(const SolverConfig& c, const History& hs) {
  const double a = c.alpha, bh = c.beta * c.h, gh2 = c.gamma * c.h * c.h;
  return -2.0 * (a - bh) * hs.x_np1() - 2.0 * (2.0 * bh - gh2) * hs.x_n() +
         2.0 * (a + bh - gh2) * hs.x_nm1() - a * hs.x_nm2();
}

/// Known part of algorithm2's weighted stencil, S2(u) - alpha u:
/// -2(a - bh - gh^2) x_{n+1} - 2(2bh + gh^2) x_n + 2(a + bh) x_{n-1} - a x_{n-2}.
inline Point weighted_stencil_2(const SolverConfig& c, const History& hs) {
  const double a = c.alpha, bh = c.beta * c.h, gh2 = c.gamma * c.h * c.h;
  return -2.0 * (a - bh - gh2) * hs.x_np1() - 2.0 * (2.0 * bh + gh2) * hs.x_n() +
         2.0 * (a + bh) * hs.x_nm1() - a * hs.x_nm2();
}

namespace solver_detail {

// Damped iteration u <- (1 - theta) u + theta rhs(u) from u0, stopping at
// |u_{k+1} - u_k| <= inner_tol.
template <class Rhs>
StepResult damped_fixed_point(Rhs&& rhs, Point u, const SolverConfig& c) {
  const double theta = c.inner_damping;
  StepResult res;
  for (long k = 1; k <= c.inner_max; ++k) {
    Point next = (1.0 - theta) * u + theta * rhs(u);
    const double diff = (next - u).norm();
    u = std::move(next);
    res.inner_iterations = k;
    if (!u.allFinite()) break;
    if (diff <= c.inner_tol) {
      res.defect = (u - rhs(u)).norm();
      res.x = std::move(u);
      return res;
    }
  }
  res.converged = false;
  res.defect = u.allFinite() ? (u - rhs(u)).norm() : kInfinity;
  res.x = std::move(u);
  return res;
}

inline void check_history(const MviProblem& p, const History& hs) {
  for (const auto& v : hs.x) require_dim(v, p.dim(), "History");
}

// Right-hand side maps of the implicit relations, u -> RHS(u).
struct Algorithm1Rhs {
  const MviProblem& p;
  const SolverConfig& c;
  Point known;  // x_n - S1_known / 2h^3
  Point scratch;

  Algorithm1Rhs(const MviProblem& p_, const SolverConfig& c_, const History& hs)
      : p(p_), c(c_), scratch(p_.dim()) {
    const double h3 = 2.0 * c.h * c.h * c.h;
    known = hs.x_n() - weighted_stencil_1(c, hs) / h3;
  }

  Point operator()(const ConstRef& u) {
    const double h3 = 2.0 * c.h * c.h * c.h;
    p.op().eval_into(u, scratch);
    Point arg = known - c.lambda * scratch - (c.alpha / h3) * u;
    p.phi().prox_into(arg, c.lambda, arg);
    return arg;
  }
};

struct Algorithm2Rhs {
  const MviProblem& p;
  const SolverConfig& c;
  Point known;  // x_n - lambda T(x_{n+1}) - S2_known / 2h^3

  Algorithm2Rhs(const MviProblem& p_, const SolverConfig& c_, const History& hs) : p(p_), c(c_) {
    const double h3 = 2.0 * c.h * c.h * c.h;
    Point t(p.dim());
    p.op().eval_into(hs.x_np1(), t);
    known = hs.x_n() - c.lambda * t - weighted_stencil_2(c, hs) / h3;
  }

  Point operator()(const ConstRef& u) const {
    const double h3 = 2.0 * c.h * c.h * c.h;
    Point arg = known - (c.alpha / h3) * u;
    p.phi().prox_into(arg, c.lambda, arg);
    return arg;
  }
};

struct DirectRhs {
  const MviProblem& p;
  const SolverConfig& c;
  Point shift;  // 2h^3 (-beta D2 - gamma D1) + alpha (2 x_{n+1} - 2 x_{n-1} + x_{n-2})
  Point x_n;
  Point scratch, jbuf;

  DirectRhs(const MviProblem& p_, const SolverConfig& c_, const History& hs)
      : p(p_), c(c_), x_n(hs.x_n()), scratch(p_.dim()), jbuf(p_.dim()) {
    const double h = c.h;
    const double h3 = 2.0 * h * h * h;
    const Point d2 = (hs.x_np1() - 2.0 * hs.x_n() + hs.x_nm1()) / (h * h);
    const Point d1 = (hs.x_n() - hs.x_nm1()) / h;
    shift = h3 * (-c.beta * d2 - c.gamma * d1) +
            c.alpha * (2.0 * hs.x_np1() - 2.0 * hs.x_nm1() + hs.x_nm2());
  }

  Point operator()(const ConstRef& u) {
    const double h3 = 2.0 * c.h * c.h * c.h;
    p.op().eval_into(u, scratch);
    jbuf = x_n - c.lambda * scratch;
    p.phi().prox_into(jbuf, c.lambda, jbuf);
    return (h3 * jbuf + shift) / (h3 + c.alpha);
  }
};

}  // namespace solver_detail

/// Implicit step of algorithm1 (T evaluated at the new point).
inline StepResult step_algorithm1(const MviProblem& p, const SolverConfig& c, const History& hs) {
  solver_detail::check_history(p, hs);
  solver_detail::Algorithm1Rhs rhs(p, c, hs);
  return solver_detail::damped_fixed_point(rhs, hs.x_np1(), c);
}

/// Step of algorithm2 (T evaluated once at x_{n+1}). Only the alpha-weighted
/// x_{n+2} term is implicit; with alpha = 0 a single evaluation is exact.
inline StepResult step_algorithm2(const MviProblem& p, const SolverConfig& c, const History& hs) {
  solver_detail::check_history(p, hs);
  solver_detail::Algorithm2Rhs rhs(p, c, hs);
  if (c.alpha == 0.0) {
    StepResult res;
    res.x = rhs(hs.x_np1());
    res.inner_iterations = 1;
    res.defect = (res.x - rhs(res.x)).norm();
    return res;
  }
  return solver_detail::damped_fixed_point(rhs, hs.x_np1(), c);
}

inline void require_unit_coefficients(const SolverConfig& c) {
  if (c.alpha != 1.0 || c.beta != 1.0 || c.gamma != 1.0) {
    throw Error("explicit recurrence is defined only for alpha = beta = gamma = 1; "
                "use algorithm1, algorithm2 or direct");
  }
}

/// Explicit recurrence, evaluated exactly as written (alpha = beta = gamma = 1).
inline Point step_explicit(const MviProblem& p, const SolverConfig& c, const History& hs) {
  require_unit_coefficients(c);
  solver_detail::check_history(p, hs);
  const double h = c.h;
  const double hh = 2.0 * h * h * h;
  const Point t = [&] {
    Point out(p.dim());
    p.op().eval_into(hs.x_n(), out);
    return out;
  }();
  Point arg = (1.0 - 1.0 / h + 2.0 / (h * h)) * hs.x_n() - c.lambda * t -
              ((2.0 * h - 2.0) * hs.x_np1() + (2.0 + 2.0 * h - 2.0 * h * h) * hs.x_nm1() - hs.x_nm2()) / hh;
  p.phi().prox_into(arg, c.lambda, arg);
  return (hh / (1.0 + hh)) * arg;
}

/// Exact rearrangement of the discretized dynamics for x_{n+2}:
///   u = [2h^3 (J(x_n - lambda T(u)) - beta D2 - gamma D1) + alpha(2x_{n+1} - 2x_{n-1} + x_{n-2})] / (2h^3 + alpha)
inline StepResult step_direct_discretization(const MviProblem& p, const SolverConfig& c,
                                             const History& hs) {
  solver_detail::check_history(p, hs);
  solver_detail::DirectRhs rhs(p, c, hs);
  return solver_detail::damped_fixed_point(rhs, hs.x_np1(), c);
}

/// |u - RHS(u)| of the relation that defines `method`'s next iterate, at u.
inline double implicit_defect(const MviProblem& p, Method method, const SolverConfig& c,
                              const History& hs, const ConstRef& u) {
  solver_detail::check_history(p, hs);
  require_dim(u, p.dim(), "implicit_defect");
  switch (method) {
    case Method::algorithm1: {
      solver_detail::Algorithm1Rhs rhs(p, c, hs);
      return (u - rhs(u)).norm();
    }
    case Method::algorithm2: {
      solver_detail::Algorithm2Rhs rhs(p, c, hs);
      return (u - rhs(u)).norm();
    }
    case Method::direct: {
      solver_detail::DirectRhs rhs(p, c, hs);
      return (u - rhs(u)).norm();
    }
    case Method::explicit_recurrence:
      return (u - step_explicit(p, c, hs)).norm();
    case Method::baseline:
      return (u - step_baseline(p, c, hs.x_np1())).norm();
  }
  return kInfinity;
}

struct InnerFailure {
  Point last;
  double defect = 0.0;
  long outer_step = 0;
};

struct SolveReport {
  Method method = Method::baseline;
  /// x0, the warm-up iterates (multi-step methods), then one entry per outer step.
  std::vector<Point> iterates;
  /// Natural residual (at config lambda) of each iterate.
  std::vector<double> residuals;
  /// |x_k - x_{k-1}|, one entry per iterate after the first.
  std::vector<double> successive_diffs;
  Status status = Status::max_iter;
  SolverConfig config_echo;
  /// Number of warm-up iterates following x0 (0 or 3).
  int warmup_count = 0;
  long iterations = 0;
  std::optional<InnerFailure> inner_failure;
  std::vector<std::string> warnings;
};

inline bool is_multistep(Method m) { return m != Method::baseline; }

/// Runs `method` from x0 until the natural residual drops to config.tol or
/// config.max_iter outer steps were taken. Numerical failures end up in
/// report.status; only invalid configuration throws.
inline SolveReport solve(const MviProblem& p, Method method, const SolverConfig& c, const ConstRef& x0) {
  c.validate();
  if (method == Method::explicit_recurrence) require_unit_coefficients(c);
  require_dim(x0, p.dim(), "solve: x0");
  require_finite(x0, "solve: x0");

  SolveReport rep;
  rep.method = method;
  rep.config_echo = c;
  if (is_multistep(method) && c.descent_warning()) {
    rep.warnings.push_back("descent coefficient alpha - beta*h + gamma*h^2 = " +
                           std::to_string(c.descent_coefficient()) + " is not positive");
  }

  auto append = [&](Point x) -> bool {
    if (!x.allFinite() || x.norm() >= kDivergenceNorm) return false;
    if (!rep.iterates.empty()) rep.successive_diffs.push_back((x - rep.iterates.back()).norm());
    rep.residuals.push_back(natural_residual(p, x, c.lambda));
    rep.iterates.push_back(std::move(x));
    return true;
  };

  append(Point(x0));
  if (rep.residuals.back() <= c.tol) {
    rep.status = Status::converged;
    return rep;
  }
  if (c.max_iter == 0) {
    rep.status = Status::max_iter;
    return rep;
  }

  History hs;
  if (is_multistep(method)) {
    hs.x[0] = x0;
    for (int i = 1; i < 4; ++i) {
      Point next = step_baseline(p, c, hs.x[i - 1]);
      if (!append(next)) {
        rep.status = Status::diverged;
        return rep;
      }
      hs.x[i] = std::move(next);
    }
    rep.warmup_count = 3;
  }

  for (;;) {
    if (rep.residuals.back() <= c.tol) {
      rep.status = Status::converged;
      break;
    }
    if (rep.iterations >= c.max_iter) {
      rep.status = Status::max_iter;
      break;
    }
    Point next;
    StepResult sr;
    switch (method) {
      case Method::baseline: next = step_baseline(p, c, rep.iterates.back()); break;
      case Method::explicit_recurrence: next = step_explicit(p, c, hs); break;
      case Method::algorithm1: sr = step_algorithm1(p, c, hs); break;
      case Method::algorithm2: sr = step_algorithm2(p, c, hs); break;
      case Method::direct: sr = step_direct_discretization(p, c, hs); break;
    }
    if (method == Method::algorithm1 || method == Method::algorithm2 || method == Method::direct) {
      if (!sr.converged) {
        if (!sr.x.allFinite()) {
          rep.status = Status::diverged;
        } else {
          rep.status = Status::inner_solve_failed;
          rep.inner_failure = InnerFailure{sr.x, sr.defect, rep.iterations + 1};
        }
        break;
      }
      next = std::move(sr.x);
    }
    if (is_multistep(method)) hs.push(next);
    if (!append(std::move(next))) {
      rep.status = Status::diverged;
      break;
    }
    ++rep.iterations;
  }
  return rep;
}

}  // namespace mvi
