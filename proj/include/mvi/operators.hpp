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

// Single-valued monotone operators T and sampling estimators for the
// constants (monotonicity modulus, Lipschitz constant) the convergence
// results assume.

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>

#include <Eigen/Eigenvalues>

#include "mvi/common.hpp"

namespace mvi {

enum class OperatorKind { affine, gradient_quadratic, scalar_nonlinear, rotation };

inline const char* to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::affine: return "affine";
    case OperatorKind::gradient_quadratic: return "gradient_quadratic";
    case OperatorKind::scalar_nonlinear: return "scalar_nonlinear";
    case OperatorKind::rotation: return "rotation";
  }
  return "?";
}

/// Smallest eigenvalue of the symmetric part (A + A^T)/2.
inline double symmetric_part_min_eigenvalue(const Matrix& a) {
  require(a.rows() == a.cols() && a.rows() >= 1, "symmetric_part_min_eigenvalue: A must be square");
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Spectral norm of A.
inline double operator_norm(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

namespace op_detail {

struct Affine {
  Matrix a;
  Point b;
};
struct GradQuadratic {
  Matrix q;
  Point c;
};
/// Componentwise t -> cubic*t^3 + linear*t + offset.
struct ScalarNonlinear {
  double cubic, linear, offset;
};
/// T(x, y) = (y*s + x*m, -x*s + y*m)
struct Rotation {
  double skew, diag;
};

// PSD check tolerance relative to the matrix scale.
inline constexpr double kPsdTol = 1e-12;

}  // namespace op_detail

/// The operator T. Immutable; evaluation is pure.
class MonotoneMap {
 public:
  /// T(x) = A x + b. Rejects A whose symmetric part is not PSD.
  static MonotoneMap affine(Matrix a, Point b) {
    require(a.rows() == a.cols() && a.rows() >= 1, "affine: A must be square");
    require(b.size() == a.rows(), "affine: b size mismatch");
    require(a.allFinite() && b.allFinite(), "affine: non-finite data");
    const double lmin = symmetric_part_min_eigenvalue(a);
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if (lmin < -op_detail::kPsdTol * scale) {
      throw Error("affine: symmetric part of A is not PSD (min eigenvalue " + std::to_string(lmin) +
                  "); operator is not monotone");
    }
    const auto dim = a.rows();
    return MonotoneMap(dim, op_detail::Affine{std::move(a), std::move(b)});
  }

  /// Same as affine() but skips the monotonicity check. Test fixtures use it
  /// to build deliberately non-monotone maps.
  static MonotoneMap affine_unchecked(Matrix a, Point b) {
    require(a.rows() == a.cols() && b.size() == a.rows(), "affine: size mismatch");
    const auto dim = a.rows();
    return MonotoneMap(dim, op_detail::Affine{std::move(a), std::move(b)});
  }

  /// T(x) = Q x + c, the gradient of 0.5 x^T Q x + c^T x with Q symmetric PSD.
  static MonotoneMap gradient_quadratic(Matrix q, Point c) {
    require(q.rows() == q.cols() && q.rows() >= 1, "gradient_quadratic: Q must be square");
    require(c.size() == q.rows(), "gradient_quadratic: c size mismatch");
    require(q.allFinite() && c.allFinite(), "gradient_quadratic: non-finite data");
    const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
    require((q - q.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
            "gradient_quadratic: Q must be symmetric");
    require(symmetric_part_min_eigenvalue(q) >= -op_detail::kPsdTol * scale,
            "gradient_quadratic: Q must be PSD");
    const auto dim = q.rows();
    return MonotoneMap(dim, op_detail::GradQuadratic{std::move(q), std::move(c)});
  }

  /// Componentwise cubic*t^3 + linear*t + offset with cubic, linear >= 0.
  static MonotoneMap scalar_nonlinear(Eigen::Index dim, double cubic, double linear, double offset) {
    require(cubic >= 0.0 && linear >= 0.0, "scalar_nonlinear: coefficients must be >= 0");
    require(std::isfinite(cubic) && std::isfinite(linear) && std::isfinite(offset),
            "scalar_nonlinear: non-finite coefficient");
    return MonotoneMap(dim, op_detail::ScalarNonlinear{cubic, linear, offset});
  }

  /// 2-D map (y*s + x*m, -x*s + y*m); monotone for m >= 0.
  static MonotoneMap rotation(double skew, double diag) {
    require(std::isfinite(skew) && std::isfinite(diag), "rotation: non-finite coefficient");
    require(diag >= 0.0, "rotation: diagonal part must be >= 0");
    return MonotoneMap(2, op_detail::Rotation{skew, diag});
  }

  MonotoneMap with_hints(std::optional<double> lipschitz, std::optional<double> strong_modulus) const {
    if (lipschitz) require(*lipschitz >= 0.0, "lipschitz hint must be >= 0");
    if (strong_modulus) require(*strong_modulus >= 0.0, "strong modulus hint must be >= 0");
    MonotoneMap copy = *this;
    copy.lipschitz_hint_ = lipschitz;
    copy.strong_modulus_hint_ = strong_modulus;
    return copy;
  }

  Eigen::Index dim() const { return dim_; }
  OperatorKind kind() const { return static_cast<OperatorKind>(impl_.index()); }
  std::optional<double> lipschitz_hint() const { return lipschitz_hint_; }
  std::optional<double> strong_modulus_hint() const { return strong_modulus_hint_; }

  /// Unchecked evaluation into a caller buffer; out must not alias x.
  void eval_into(const ConstRef& x, MutRef out) const {
    using namespace op_detail;
    std::visit(
        [&](const auto& f) {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, Affine>) {
            out.noalias() = f.a * x;
            out += f.b;
          } else if constexpr (std::is_same_v<F, GradQuadratic>) {
            out.noalias() = f.q * x;
            out += f.c;
          } else if constexpr (std::is_same_v<F, ScalarNonlinear>) {
            out = f.cubic * x.array().cube() + f.linear * x.array() + f.offset;
          } else {
            out[0] = x[1] * f.skew + x[0] * f.diag;
            out[1] = -x[0] * f.skew + x[1] * f.diag;
          }
        },
        impl_);
  }

  /// T(x). Throws on dimension mismatch or non-finite output.
  Point eval(const ConstRef& x) const {
    require_dim(x, dim_, "MonotoneMap::eval");
    Point out(dim_);
    eval_into(x, out);
    if (!out.allFinite()) {
      throw Error(std::string("MonotoneMap::eval: non-finite output at x = ") + format_point(x));
    }
    return out;
  }

  Point operator()(const ConstRef& x) const { return eval(x); }

  /// The matrix of an affine / gradient_quadratic / rotation map, if linear.
  std::optional<Matrix> linear_part() const {
    using namespace op_detail;
    return std::visit(
        [&](const auto& f) -> std::optional<Matrix> {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, Affine>) {
            return f.a;
          } else if constexpr (std::is_same_v<F, GradQuadratic>) {
            return f.q;
          } else if constexpr (std::is_same_v<F, Rotation>) {
            Matrix m(2, 2);
            m << f.diag, f.skew, -f.skew, f.diag;
            return m;
          } else {
            return std::nullopt;
          }
        },
        impl_);
  }

  std::string describe() const { return to_string(kind()); }

 private:
  using Impl = std::variant<op_detail::Affine, op_detail::GradQuadratic, op_detail::ScalarNonlinear,
                            op_detail::Rotation>;

  MonotoneMap(Eigen::Index dim, Impl impl) : dim_(dim), impl_(std::move(impl)) {
    require(dim_ >= 1, "MonotoneMap: dimension must be >= 1");
  }

  Eigen::Index dim_;
  Impl impl_;
  std::optional<double> lipschitz_hint_;
  std::optional<double> strong_modulus_hint_;
};

/// Axis-aligned sampling region.
struct SamplingBox {
  Point lo, hi;

  static SamplingBox cube(Eigen::Index dim, double half_width) {
    return {Point::Constant(dim, -half_width), Point::Constant(dim, half_width)};
  }

  bool contains(const ConstRef& x) const {
    return x.size() == lo.size() && (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
  }
};

struct MonotonicityEstimate {
  double min_quotient;
  bool is_monotone_sampled;
};

namespace op_detail {

inline void check_region(const MonotoneMap& t, const SamplingBox& box, int samples) {
  require(samples >= 2, "estimator: samples must be >= 2");
  require_dim(box.lo, t.dim(), "estimator region");
  require_dim(box.hi, t.dim(), "estimator region");
  require(box.lo.allFinite() && box.hi.allFinite(), "estimator: region must be finite");
  if (!((box.hi - box.lo).array() > 0.0).all()) {
    throw Error("estimator: degenerate sampling region (zero volume)");
  }
}

// Calls f(Tx - Ty, x - y) for `samples` independent uniform pairs.
template <class F>
void for_each_pair(const MonotoneMap& t, const SamplingBox& box, int samples, std::uint64_t seed,
                   F&& f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto n = t.dim();
  Point x(n), y(n), tx(n), ty(n);
  const Point width = box.hi - box.lo;
  for (int s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < n; ++i) x[i] = box.lo[i] + width[i] * unit(rng);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = box.lo[i] + width[i] * unit(rng);
    const Point d = x - y;
    if (d.squaredNorm() == 0.0) continue;
    t.eval_into(x, tx);
    t.eval_into(y, ty);
    f(Point(tx - ty), d);
  }
}

}  // namespace op_detail

/// min over sampled pairs of <Tx - Ty, x - y> / |x - y|^2.
/// Deterministic in (box, samples, seed).
inline MonotonicityEstimate estimate_monotonicity(const MonotoneMap& t, const SamplingBox& box,
                                                  int samples, std::uint64_t seed) {
  op_detail::check_region(t, box, samples);
  double best = kInfinity;
  op_detail::for_each_pair(t, box, samples, seed, [&](const Point& dt, const Point& d) {
    best = std::min(best, dt.dot(d) / d.squaredNorm());
  });
  return {best, best >= -1e-10};
}

/// max over sampled pairs of |Tx - Ty| / |x - y|; a lower bound on L.
inline double estimate_lipschitz(const MonotoneMap& t, const SamplingBox& box, int samples,
                                 std::uint64_t seed) {
  op_detail::check_region(t, box, samples);
  double best = 0.0;
  op_detail::for_each_pair(t, box, samples, seed, [&](const Point& dt, const Point& d) {
    best = std::max(best, dt.norm() / d.norm());
  });
  return best;
}

}  // namespace mvi
