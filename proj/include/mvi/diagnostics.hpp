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

// Post-processing checks over solver reports and trajectories:
//
// * the per-step energy inequality of algorithm1 at the reference solution x*,
//     (a - bh + gh^2)|x* - x_{n+2}|^2
//       <= a|x* - 2x_{n+1} + 2x_{n-1} - x_{n-2}|^2 - a|x_{n+2} - 2x_{n+1} + 2x_{n-1} - x_{n-2}|^2
//        + bh|x_{n+1} - 2x_n + x_{n-1}|^2
//        + gh^2|x_n - x_{n-1} + x* - x_{n+2}|^2 - gh^2|x_n - x_{n-1}|^2,
// * vanishing / square-summable successive differences,
// * the pointwise exponential-stability bound of a fitted decay rate.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "mvi/common.hpp"
#include "mvi/dynamics.hpp"
#include "mvi/solvers.hpp"

namespace mvi {

struct InequalityRecord {
  long n = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  /// rhs - lhs; negative means the inequality fails at this step.
  double gap = 0.0;
};

/// stencil = (x_{n-2}, x_{n-1}, x_n, x_{n+1}, x_{n+2}).
inline InequalityRecord energy_inequality_record(const ConstRef& x_star, const std::array<Point, 5>& stencil,
                                         double alpha, double beta, double gamma, double h) {
  for (const auto& s : stencil) require_dim(s, x_star.size(), "energy_inequality_record");
  const Point& xm2 = stencil[0];
  const Point& xm1 = stencil[1];
  const Point& xn = stencil[2];
  const Point& xp1 = stencil[3];
  const Point& xp2 = stencil[4];
  const double bh = beta * h, gh2 = gamma * h * h;
  const Point tail = -2.0 * xp1 + 2.0 * xm1 - xm2;
  InequalityRecord r;
  r.lhs = (alpha - bh + gh2) * (x_star - xp2).squaredNorm();
  r.rhs = alpha * (x_star + tail).squaredNorm() - alpha * (xp2 + tail).squaredNorm() +
          bh * (xp1 - 2.0 * xn + xm1).squaredNorm() + gh2 * (xn - xm1 + x_star - xp2).squaredNorm() -
          gh2 * (xn - xm1).squaredNorm();
  r.gap = r.rhs - r.lhs;
  return r;
}

struct InequalityScan {
  std::vector<InequalityRecord> records;
  long violations = 0;
  /// Violation threshold: max(1e-8, 10 * inner_tol).
  double tolerance = 0.0;
  double min_gap = kInfinity;
};

inline double energy_inequality_tolerance(double inner_tol) { return std::max(1e-8, 10.0 * inner_tol); }

/// One record per algorithm1 outer step (warm-up iterates are skipped).
inline InequalityScan energy_inequality_scan(const SolveReport& rep, const ConstRef& x_star) {
  if (rep.method != Method::algorithm1) {
    throw Error(std::string("energy_inequality_scan: report comes from method '") + to_string(rep.method) +
                "', expected algorithm1");
  }
  const auto& cfg = rep.config_echo;
  InequalityScan scan;
  scan.tolerance = energy_inequality_tolerance(cfg.inner_tol);
  const std::size_t first = static_cast<std::size_t>(rep.warmup_count) + 1;
  for (std::size_t k = std::max<std::size_t>(first, 4); k < rep.iterates.size(); ++k) {
    const std::array<Point, 5> st = {rep.iterates[k - 4], rep.iterates[k - 3], rep.iterates[k - 2],
                                     rep.iterates[k - 1], rep.iterates[k]};
    InequalityRecord r = energy_inequality_record(x_star, st, cfg.alpha, cfg.beta, cfg.gamma, cfg.h);
    r.n = static_cast<long>(k) - 2;
    if (r.gap < -scan.tolerance) ++scan.violations;
    scan.min_gap = std::min(scan.min_gap, r.gap);
    scan.records.push_back(r);
  }
  return scan;
}

struct SummabilityReport {
  /// max |x_k - x_{k-1}| over the last 10% of differences.
  double tail_max_diff = 0.0;
  /// Cumulative sums of |x_k - x_{k-1}|^2.
  std::vector<double> partial_sums;
  /// Partial sums vary by at most 1e-6 over the last half.
  bool cauchy_ok = false;
};

inline constexpr double kCauchyTolerance = 1e-6;

inline SummabilityReport summability_report(const SolveReport& rep) {
  if (rep.iterates.size() < 2 || rep.successive_diffs.empty()) {
    throw Error("summability_report: need at least 2 iterates");
  }
  const auto& d = rep.successive_diffs;
  const std::size_t m = d.size();
  SummabilityReport out;
  const std::size_t tail = std::max<std::size_t>(1, m / 10);
  out.tail_max_diff = *std::max_element(d.end() - static_cast<std::ptrdiff_t>(tail), d.end());
  double s = 0.0;
  out.partial_sums.reserve(m);
  for (double v : d) {
    s += v * v;
    out.partial_sums.push_back(s);
  }
  const std::size_t half = m / 2;
  const double start = half == 0 ? 0.0 : out.partial_sums[half - 1];
  out.cauchy_ok = (out.partial_sums.back() - start) <= kCauchyTolerance;
  return out;
}

/// Largest increase |x* - x_{k+1}| - |x* - x_k| over the last `tail_fraction`
/// of the iterates after warm-up; <= 0 for a nonincreasing tail.
inline double distance_tail_increase(const SolveReport& rep, const ConstRef& x_star,
                                     double tail_fraction = 0.5) {
  require(tail_fraction > 0.0 && tail_fraction <= 1.0, "distance_tail_increase: bad tail fraction");
  const std::size_t begin = static_cast<std::size_t>(rep.warmup_count) + 1;
  if (rep.iterates.size() < begin + 2) return 0.0;
  const std::size_t count = rep.iterates.size() - begin;
  const std::size_t skip = static_cast<std::size_t>(std::floor((1.0 - tail_fraction) * static_cast<double>(count)));
  double worst = -kInfinity;
  for (std::size_t k = begin + skip + 1; k < rep.iterates.size(); ++k) {
    worst = std::max(worst, (x_star - rep.iterates[k]).norm() - (x_star - rep.iterates[k - 1]).norm());
  }
  return worst == -kInfinity ? 0.0 : worst;
}

struct StabilityCheck {
  bool pass = true;
  /// max over the fit window of |x(t) - x*| / (rho |x(t0) - x*| exp(-(eta/2)(t - t0))).
  double max_violation = 0.0;
};

inline constexpr double kStabilitySlack = 1.05;

/// Checks |x(t) - x*| <= 1.05 rho |x(t0) - x*| exp(-(eta/2)(t - t0)) on the
/// window of `fit`.
inline StabilityCheck exp_stability_report(const Trajectory& traj, const ConstRef& x_star,
                                           const DecayFit& fit) {
  StabilityCheck out;
  if (fit.first >= traj.size()) return out;
  const double d0 = (traj.states[fit.first].x - x_star).norm();
  const std::size_t last = std::min(fit.last, traj.size());
  for (std::size_t i = fit.first; i < last; ++i) {
    const double d = (traj.states[i].x - x_star).norm();
    if (d == 0.0) continue;
    const double bound = fit.rho * d0 * std::exp(-0.5 * fit.eta * (traj.times[i] - fit.t0));
    const double ratio = bound > 0.0 ? d / bound : kInfinity;
    out.max_violation = std::max(out.max_violation, ratio);
  }
  out.pass = out.max_violation <= kStabilitySlack;
  return out;
}

}  // namespace mvi
