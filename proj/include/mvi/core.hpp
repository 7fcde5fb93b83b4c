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

// Problem data for the mixed variational inequality
//
//   find x*:  <T(x*), x - x*> + phi(x) - phi(x*) >= 0   for all x,
//
// and the residuals that certify a solution. x* solves the problem iff it is
// a fixed point of x -> J_phi(x - lambda*T(x)); the resolvent parameter is the
// same lambda throughout.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>

#include "mvi/common.hpp"
#include "mvi/operators.hpp"
#include "mvi/prox.hpp"

namespace mvi {

enum class Provenance { closed_form, grid_oracle, prox_fixed_point_oracle };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::closed_form: return "closed_form";
    case Provenance::grid_oracle: return "grid_oracle";
    case Provenance::prox_fixed_point_oracle: return "prox_fixed_point_oracle";
  }
  return "?";
}

struct ReferenceSolution {
  Point point;
  Provenance provenance = Provenance::closed_form;
};

/// Residual a reference solution must meet (at lambda = 1) to be accepted.
inline constexpr double kReferenceTolerance = 1e-8;

/// Writes J_phi(x - lambda*T(x)) into out. Hot-path helper: no checks.
/// `scratch` must have the problem dimension; out must not alias x.
inline void fixed_point_map_into(const MonotoneMap& t, const ProxFunction& phi, const ConstRef& x,
                                 double lambda, MutRef scratch, MutRef out) {
  t.eval_into(x, scratch);
  out = x - lambda * scratch;
  phi.prox_into(out, lambda, out);
}

class MviProblem {
 public:
  MviProblem(MonotoneMap op, ProxFunction phi, std::optional<ReferenceSolution> reference = {})
      : op_(std::move(op)), phi_(std::move(phi)), reference_(std::move(reference)) {
    if (op_.dim() != phi_.dim()) {
      throw DimensionError("MviProblem: operator dimension " + std::to_string(op_.dim()) +
                           " != phi dimension " + std::to_string(phi_.dim()));
    }
    if (reference_) {
      require_dim(reference_->point, dim(), "MviProblem reference solution");
      require_finite(reference_->point, "MviProblem reference solution");
      const double r = residual_unchecked(reference_->point, 1.0);
      if (!(r <= kReferenceTolerance)) {
        throw Error("MviProblem: reference solution " + format_point(reference_->point) +
                    " has natural residual " + std::to_string(r) + " > 1e-8");
      }
    }
  }

  Eigen::Index dim() const { return op_.dim(); }
  const MonotoneMap& op() const { return op_; }
  const ProxFunction& phi() const { return phi_; }
  const std::optional<ReferenceSolution>& reference() const { return reference_; }

  /// J_phi(x - lambda*T(x)).
  Point fixed_point_map(const ConstRef& x, double lambda) const {
    require_dim(x, dim(), "fixed_point_map");
    require(lambda > 0.0, "fixed_point_map: lambda must be > 0");
    Point scratch(dim()), out(dim());
    fixed_point_map_into(op_, phi_, x, lambda, scratch, out);
    return out;
  }

 private:
  double residual_unchecked(const ConstRef& x, double lambda) const {
    Point scratch(dim()), out(dim());
    fixed_point_map_into(op_, phi_, x, lambda, scratch, out);
    return (x - out).norm();
  }

  MonotoneMap op_;
  ProxFunction phi_;
  std::optional<ReferenceSolution> reference_;
};

/// |x - J_phi(x - lambda*T(x))|; zero exactly at solutions.
inline double natural_residual(const MviProblem& p, const ConstRef& x, double lambda) {
  require_dim(x, p.dim(), "natural_residual");
  require(lambda > 0.0 && std::isfinite(lambda), "natural_residual: lambda must be > 0");
  return (x - p.fixed_point_map(x, lambda)).norm();
}

/// Norm of the prox-gradient element (x - J(x - lambda*T x)) / lambda, which
/// certifies 0 in T(x) + d phi(x).
inline double inclusion_residual(const MviProblem& p, const ConstRef& x, double lambda) {
  return natural_residual(p, x, lambda) / lambda;
}

/// min over probes p of <T(c), p - c> + phi(p) - phi(c). A solution gives a
/// value >= 0 for every probe set. Probes outside dom phi are skipped.
inline double mvi_gap(const MviProblem& p, const ConstRef& candidate, std::span<const Point> probes) {
  require_dim(candidate, p.dim(), "mvi_gap");
  if (probes.empty()) throw Error("mvi_gap: empty probe list");
  const double phi_c = p.phi().value(candidate);
  if (!std::isfinite(phi_c)) {
    throw Error("mvi_gap: candidate " + format_point(candidate) + " is outside dom phi");
  }
  const Point tc = p.op().eval(candidate);
  double best = kInfinity;
  bool any = false;
  for (const Point& q : probes) {
    require_dim(q, p.dim(), "mvi_gap probe");
    const double phi_q = p.phi().value(q);
    if (!std::isfinite(phi_q)) continue;
    any = true;
    best = std::min(best, tc.dot(q - candidate) + phi_q - phi_c);
  }
  if (!any) throw Error("mvi_gap: every probe lies outside dom phi");
  return best;
}

}  // namespace mvi
