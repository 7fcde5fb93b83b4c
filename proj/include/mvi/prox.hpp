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

// Closed-form resolvents J_phi(x; rho) = argmin_u { rho*phi(u) + 0.5*|u - x|^2 }
// for a fixed catalog of convex terms phi.

#pragma once

#include <algorithm>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>

#include "mvi/common.hpp"

namespace mvi {

enum class ProxKind { zero, indicator_box, indicator_ball, indicator_orthant, l1, quadratic };

inline const char* to_string(ProxKind k) {
  switch (k) {
    case ProxKind::zero: return "zero";
    case ProxKind::indicator_box: return "indicator_box";
    case ProxKind::indicator_ball: return "indicator_ball";
    case ProxKind::indicator_orthant: return "indicator_orthant";
    case ProxKind::l1: return "l1";
    case ProxKind::quadratic: return "quadratic";
  }
  return "?";
}

namespace prox_detail {

struct Zero {};
struct Box {
  Point lo, hi;
};
struct Ball {
  Point center;
  double radius;
};
struct Orthant {};
struct L1 {
  double weight;
};
/// phi(u) = 0.5 * sum_i d_i u_i^2 + <c, u>
struct DiagQuadratic {
  Point diag, linear;
};

// Projection onto a ball lands on the sphere up to one rounding; membership
// accepts that much relative slack so J(x) is always in dom phi.
inline constexpr double kBallSlack = 1e-12;

}  // namespace prox_detail

/// The convex term phi: value oracle plus resolvent oracle.
/// Immutable after construction.
class ProxFunction {
 public:
  static ProxFunction zero(Eigen::Index dim) { return ProxFunction(dim, prox_detail::Zero{}); }

  static ProxFunction box(Point lo, Point hi) {
    require(lo.size() >= 1 && lo.size() == hi.size(), "indicator_box: lo/hi size mismatch");
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      require(!std::isnan(lo[i]) && !std::isnan(hi[i]), "indicator_box: NaN bound");
      require(lo[i] <= hi[i], "indicator_box: lo > hi in coordinate " + std::to_string(i));
    }
    const auto dim = lo.size();
    return ProxFunction(dim, prox_detail::Box{std::move(lo), std::move(hi)});
  }

  static ProxFunction ball(Point center, double radius) {
    require(center.size() >= 1, "indicator_ball: empty center");
    require_finite(center, "indicator_ball");
    require(std::isfinite(radius) && radius > 0.0, "indicator_ball: radius must be > 0");
    const auto dim = center.size();
    return ProxFunction(dim, prox_detail::Ball{std::move(center), radius});
  }

  static ProxFunction orthant(Eigen::Index dim) { return ProxFunction(dim, prox_detail::Orthant{}); }

  static ProxFunction l1(Eigen::Index dim, double weight) {
    require(std::isfinite(weight) && weight >= 0.0, "l1: weight must be >= 0");
    return ProxFunction(dim, prox_detail::L1{weight});
  }

  static ProxFunction quadratic(Point diag, Point linear) {
    require(diag.size() >= 1 && diag.size() == linear.size(), "quadratic: size mismatch");
    require_finite(diag, "quadratic");
    require_finite(linear, "quadratic");
    require((diag.array() >= 0.0).all(), "quadratic: diagonal must be >= 0");
    const auto dim = diag.size();
    return ProxFunction(dim, prox_detail::DiagQuadratic{std::move(diag), std::move(linear)});
  }

  Eigen::Index dim() const { return dim_; }

  ProxKind kind() const { return static_cast<ProxKind>(impl_.index()); }

  bool is_indicator() const {
    const auto k = kind();
    return k == ProxKind::indicator_box || k == ProxKind::indicator_ball ||
           k == ProxKind::indicator_orthant;
  }

  /// phi(x); +inf outside the indicator's set.
  double value(const ConstRef& x) const {
    require_dim(x, dim_, "ProxFunction::value");
    using namespace prox_detail;
    return std::visit(
        [&](const auto& f) -> double {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, Zero>) {
            return 0.0;
          } else if constexpr (std::is_same_v<F, Box>) {
            return ((x.array() >= f.lo.array()) && (x.array() <= f.hi.array())).all() ? 0.0
                                                                                      : kInfinity;
          } else if constexpr (std::is_same_v<F, Ball>) {
            return (x - f.center).norm() <= f.radius * (1.0 + kBallSlack) ? 0.0 : kInfinity;
          } else if constexpr (std::is_same_v<F, Orthant>) {
            return (x.array() >= 0.0).all() ? 0.0 : kInfinity;
          } else if constexpr (std::is_same_v<F, L1>) {
            return f.weight * x.lpNorm<1>();
          } else {
            return 0.5 * (f.diag.array() * x.array().square()).sum() + f.linear.dot(x);
          }
        },
        impl_);
  }

  bool contains(const ConstRef& x) const { return std::isfinite(value(x)); }

  /// Writes J_phi(x; rho) into out. out may alias x.
  void prox_into(const ConstRef& x, double rho, MutRef out) const {
    using namespace prox_detail;
    std::visit(
        [&](const auto& f) {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, Zero>) {
            out = x;
          } else if constexpr (std::is_same_v<F, Box>) {
            out = x.cwiseMax(f.lo).cwiseMin(f.hi);
          } else if constexpr (std::is_same_v<F, Ball>) {
            const double dist = (x - f.center).norm();
            if (dist <= f.radius) {
              out = x;
            } else {
              out = f.center + (f.radius / dist) * (x - f.center);
            }
          } else if constexpr (std::is_same_v<F, Orthant>) {
            out = x.cwiseMax(0.0);
          } else if constexpr (std::is_same_v<F, L1>) {
            const double t = rho * f.weight;
            for (Eigen::Index i = 0; i < x.size(); ++i) {
              const double xi = x[i];
              out[i] = xi > t ? xi - t : (xi < -t ? xi + t : 0.0);
            }
          } else {
            out = (x - rho * f.linear).cwiseQuotient((1.0 + rho * f.diag.array()).matrix());
          }
        },
        impl_);
  }

  Point prox(const ConstRef& x, double rho) const {
    require_dim(x, dim_, "prox");
    require(rho > 0.0 && std::isfinite(rho), "prox: rho must be > 0");
    require_finite(x, "prox");
    Point out(dim_);
    prox_into(x, rho, out);
    return out;
  }

  std::string describe() const { return to_string(kind()); }

 private:
  using Impl = std::variant<prox_detail::Zero, prox_detail::Box, prox_detail::Ball,
                            prox_detail::Orthant, prox_detail::L1, prox_detail::DiagQuadratic>;

  ProxFunction(Eigen::Index dim, Impl impl) : dim_(dim), impl_(std::move(impl)) {
    require(dim_ >= 1, "ProxFunction: dimension must be >= 1");
  }

  Eigen::Index dim_;
  Impl impl_;
};

/// Left-hand side of the resolvent inequality
///   <x - J(x), y - J(x)> + rho*phi(J(x)) - rho*phi(y) <= 0,
/// the optimality condition of the prox subproblem tested at y.
/// Throws when y is outside dom phi.
inline double resolvent_lemma_gap(const ProxFunction& phi, const ConstRef& x, const ConstRef& y,
                                  double rho) {
  require_dim(y, phi.dim(), "resolvent_lemma_gap");
  const double phi_y = phi.value(y);
  if (!std::isfinite(phi_y)) {
    throw Error("resolvent_lemma_gap: probe y = " + format_point(y) + " is outside dom phi");
  }
  const Point j = phi.prox(x, rho);
  const double phi_j = phi.value(j);
  return (x - j).dot(y - j) + rho * phi_j - rho * phi_y;
}

struct ProjectionGaps {
  /// |Px - Py|^2 + |(x - Px) - (y - Py)|^2 - |x - y|^2
  double firm;
  /// <x - Px, z - Px>
  double obtuse;
};

/// Both gaps are <= 0 for an exact metric projection. z must lie in the set.
inline ProjectionGaps projection_inequality_gaps(const ProxFunction& phi, const ConstRef& x,
                                                 const ConstRef& y, const ConstRef& z) {
  require(phi.is_indicator(), "projection_inequality_gaps: phi must be an indicator kind");
  require_dim(z, phi.dim(), "projection_inequality_gaps");
  if (!phi.contains(z)) {
    throw Error("projection_inequality_gaps: z = " + format_point(z) + " is outside the set");
  }
  // rho is irrelevant for indicators.
  const Point px = phi.prox(x, 1.0);
  const Point py = phi.prox(y, 1.0);
  const double firm =
      (px - py).squaredNorm() + ((x - px) - (y - py)).squaredNorm() - (x - y).squaredNorm();
  const double obtuse = (x - px).dot(z - px);
  return {firm, obtuse};
}

}  // namespace mvi
