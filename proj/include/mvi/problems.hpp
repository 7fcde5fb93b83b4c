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

// Benchmark instances with reference solutions, plus brute-force oracles for
// one- and two-dimensional problems.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "mvi/common.hpp"
#include "mvi/core.hpp"
#include "mvi/operators.hpp"
#include "mvi/prox.hpp"

namespace mvi {

enum class MonotonicityClass { monotone, strongly_monotone };

inline const char* to_string(MonotonicityClass c) {
  return c == MonotonicityClass::monotone ? "monotone" : "strongly_monotone";
}

struct CatalogEntry {
  std::string name;
  std::string description;
  MviProblem problem;
  Provenance solution_provenance;
  MonotonicityClass monotonicity_class;
  /// Region used by the estimators and the grid oracle; contains x*.
  SamplingBox region;
  /// Default initial point for solves and simulations.
  Point start;

  const Point& solution() const { return problem.reference()->point; }
  /// phi == 0, so the dynamics have a smooth right-hand side.
  bool smooth() const { return problem.phi().kind() == ProxKind::zero; }
};

namespace catalog_detail {

inline Matrix mat(Eigen::Index rows, Eigen::Index cols, std::initializer_list<double> xs) {
  Matrix m(rows, cols);
  auto it = xs.begin();
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = *it++;
  return m;
}

inline CatalogEntry entry(std::string name, std::string description, MonotoneMap op, ProxFunction phi,
                          Point x_star, MonotonicityClass cls, SamplingBox region, Point start) {
  MviProblem problem(std::move(op), std::move(phi),
                     ReferenceSolution{std::move(x_star), Provenance::closed_form});
  return CatalogEntry{std::move(name), std::move(description), std::move(problem),
                      Provenance::closed_form, cls, std::move(region), std::move(start)};
}

}  // namespace catalog_detail

/// The benchmark catalog. Every reference solution is closed-form and is
/// validated against the natural residual on construction.
inline std::vector<CatalogEntry> catalog() {
  using catalog_detail::entry;
  using catalog_detail::mat;
  const auto strong = MonotonicityClass::strongly_monotone;
  std::vector<CatalogEntry> out;

  out.push_back(entry("scalar_smooth", "T(x) = x - 1, phi = 0",
                      MonotoneMap::affine(mat(1, 1, {1.0}), make_point({-1.0})).with_hints(1.0, 1.0),
                      ProxFunction::zero(1), make_point({1.0}), strong,
                      {make_point({-2.0}), make_point({4.0})},
                      make_point({0.0})));

  out.push_back(entry("scalar_l1", "T(x) = x, phi = |x|",
                      MonotoneMap::affine(mat(1, 1, {1.0}), make_point({0.0})).with_hints(1.0, 1.0),
                      ProxFunction::l1(1, 1.0), make_point({0.0}), strong,
                      {make_point({-1.0}), make_point({1.0})},
                      make_point({0.8})));

  // Lipschitz constant 3x^2 + 1 <= 13 holds on the region [-2, 2] only.
  out.push_back(entry("scalar_cubic", "T(x) = x^3 + x - 2, phi = 0",
                      MonotoneMap::scalar_nonlinear(1, 1.0, 1.0, -2.0).with_hints(13.0, 1.0),
                      ProxFunction::zero(1), make_point({1.0}), strong,
                      {make_point({-2.0}), make_point({2.0})},
                      make_point({0.0})));

  {
    // KKT: x1 at its upper bound with T1 = -0.75 <= 0; T2 = 0 gives x2 = 0.5.
    const Matrix a = mat(2, 2, {2.0, 0.5, -0.5, 1.0});
    const double l = operator_norm(a);
    out.push_back(entry("box_vi", "T(x) = A x + b with nonsymmetric A, phi = indicator of [0,1]^2",
                        MonotoneMap::affine(a, make_point({-3.0, 0.0})).with_hints(l, 1.0),
                        ProxFunction::box(make_point({0.0, 0.0}), make_point({1.0, 1.0})),
                        make_point({1.0, 0.5}), strong,
                        {make_point({-0.5, -0.5}), make_point({1.5, 1.5})},
                        make_point({0.0, 0.0})));
  }

  // Gradient of 0.5 |A x - b|^2 with A = I, b = (3, 0); soft-threshold gives (2, 0).
  out.push_back(entry("lasso_diag", "T(x) = A^T(A x - b), A = I, b = (3, 0), phi = |x|_1",
                      MonotoneMap::gradient_quadratic(Matrix::Identity(2, 2), make_point({-3.0, 0.0}))
                          .with_hints(1.0, 1.0),
                      ProxFunction::l1(2, 1.0), make_point({2.0, 0.0}), strong,
                      {make_point({-1.0, -1.5}), make_point({3.5, 1.5})},
                      make_point({0.0, 0.0})));

  // x* = (0.5, 0): T(x*) = (0, 1.5) >= 0 and <T(x*), x*> = 0.
  out.push_back(entry("lcp", "T(x) = M x + q, M = [[2,1],[1,2]], q = (-1, 1), phi = indicator of R^2_+",
                      MonotoneMap::affine(mat(2, 2, {2.0, 1.0, 1.0, 2.0}), make_point({-1.0, 1.0}))
                          .with_hints(3.0, 1.0),
                      ProxFunction::orthant(2), make_point({0.5, 0.0}), strong,
                      {make_point({-1.0, -1.0}), make_point({2.0, 2.0})},
                      make_point({0.0, 0.0})));

  out.push_back(entry("rotation_monotone", "T(x, y) = (y + 0.05 x, -x + 0.05 y), phi = 0",
                      MonotoneMap::rotation(1.0, 0.05).with_hints(std::sqrt(1.0 + 0.05 * 0.05), 0.05),
                      ProxFunction::zero(2), make_point({0.0, 0.0}), MonotonicityClass::monotone,
                      {make_point({-1.5, -1.5}), make_point({1.5, 1.5})},
                      make_point({1.0, 1.0})));

  // Projection of (2, 1) onto the unit ball.
  out.push_back(entry("ball_vi", "T(x) = x - (2, 1), phi = indicator of the unit ball",
                      MonotoneMap::affine(Matrix::Identity(2, 2), make_point({-2.0, -1.0})).with_hints(1.0, 1.0),
                      ProxFunction::ball(make_point({0.0, 0.0}), 1.0),
                      make_point({2.0 / std::sqrt(5.0), 1.0 / std::sqrt(5.0)}), strong,
                      {make_point({-1.5, -1.5}), make_point({1.5, 1.5})},
                      make_point({-1.0, 0.5})));

  // x - b + d.x + c = 0  =>  x = (b - c) / (1 + d) = (0.25, 0.5).
  out.push_back(entry("quad_reg", "T(x) = x - (1, 2), phi = 0.5 (x1^2 + 3 x2^2) + 0.5 x1",
                      MonotoneMap::affine(Matrix::Identity(2, 2), make_point({-1.0, -2.0})).with_hints(1.0, 1.0),
                      ProxFunction::quadratic(make_point({1.0, 3.0}), make_point({0.5, 0.0})),
                      make_point({0.25, 0.5}), strong,
                      {make_point({-1.0, -1.0}), make_point({1.5, 1.5})},
                      make_point({0.0, 0.0})));

  return out;
}

inline std::vector<std::string> catalog_names() {
  std::vector<std::string> names;
  for (const auto& e : catalog()) names.push_back(e.name);
  return names;
}

inline std::optional<CatalogEntry> find_entry(std::string_view name) {
  for (auto& e : catalog()) {
    if (e.name == name) return std::move(e);
  }
  return std::nullopt;
}

/// Grid point minimizing the natural residual at lambda = 1 over a uniform
/// grid with `resolution` points per axis (endpoints included). Ties go to the
/// lowest linear index, so the result does not depend on the thread count.
inline Point grid_oracle(const MviProblem& p, const SamplingBox& bounds, int resolution) {
  const auto n = p.dim();
  if (n > 2) throw Error("grid_oracle: dimension " + std::to_string(n) + " > 2");
  require(resolution >= 2, "grid_oracle: resolution must be >= 2");
  require_dim(bounds.lo, n, "grid_oracle bounds");
  require_dim(bounds.hi, n, "grid_oracle bounds");
  require(((bounds.hi - bounds.lo).array() > 0.0).all(), "grid_oracle: empty bounds");

  const auto res = static_cast<std::size_t>(resolution);
  const std::size_t rows = n == 1 ? 1 : res;
  auto coord = [&](Eigen::Index axis, std::size_t k) {
    return bounds.lo[axis] +
           (bounds.hi[axis] - bounds.lo[axis]) * static_cast<double>(k) / static_cast<double>(res - 1);
  };

  struct Best {
    double value = std::numeric_limits<double>::infinity();
    std::size_t index = std::numeric_limits<std::size_t>::max();
  };

  auto scan_rows = [&](std::size_t r0, std::size_t r1) {
    Best best;
    Point x(n), scratch(n), j(n);
    for (std::size_t r = r0; r < r1; ++r) {
      if (n == 2) x[1] = coord(1, r);
      for (std::size_t c = 0; c < res; ++c) {
        x[0] = coord(0, c);
        fixed_point_map_into(p.op(), p.phi(), x, 1.0, scratch, j);
        const double v = (x - j).norm();
        if (v < best.value) best = {v, r * res + c};
      }
    }
    return best;
  };

  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(1, rows));
  std::vector<std::future<Best>> parts;
  const std::size_t chunk = (rows + workers - 1) / workers;
  for (std::size_t r0 = 0; r0 < rows; r0 += chunk) {
    parts.push_back(std::async(std::launch::async, scan_rows, r0, std::min(rows, r0 + chunk)));
  }
  Best best;
  for (auto& f : parts) {
    const Best b = f.get();
    if (b.value < best.value || (b.value == best.value && b.index < best.index)) best = b;
  }
  Point out(n);
  out[0] = coord(0, best.index % res);
  if (n == 2) out[1] = coord(1, best.index / res);
  return out;
}

struct ComplementarityCheck {
  bool feasible = false;
  bool dual_feasible = false;
  /// <T(x), x>
  double gap = 0.0;
};

inline constexpr double kComplementarityFeasTol = 1e-10;

/// For phi = indicator of the nonnegative orthant: x >= 0, T(x) >= 0 and the
/// complementarity gap <T(x), x>.
inline ComplementarityCheck complementarity_check(const MviProblem& p, const ConstRef& x) {
  require(p.phi().kind() == ProxKind::indicator_orthant,
          "complementarity_check: problem must use the nonnegative-orthant indicator");
  require_dim(x, p.dim(), "complementarity_check");
  const Point tx = p.op().eval(x);
  ComplementarityCheck out;
  out.feasible = (x.array() >= -kComplementarityFeasTol).all();
  out.dual_feasible = (tx.array() >= -kComplementarityFeasTol).all();
  out.gap = tx.dot(x);
  return out;
}

inline ComplementarityCheck complementarity_check(const CatalogEntry& e, const ConstRef& x) {
  return complementarity_check(e.problem, x);
}

}  // namespace mvi
