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

#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mvi {

/// Dense point of the ambient space. Dimension is fixed per problem.
using Point = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using ConstRef = Eigen::Ref<const Eigen::VectorXd>;
using MutRef = Eigen::Ref<Eigen::VectorXd>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Iterates or trajectory states with |x| at or above this are treated as divergent.
inline constexpr double kDivergenceNorm = 1e12;

/// Every precondition violation in the library throws this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

inline std::string format_point(const ConstRef& x) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) os << ", ";
    os << x[i];
  }
  os << ')';
  return os.str();
}

inline bool all_finite(const ConstRef& x) { return x.allFinite(); }

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(what);
}

inline void require_dim(const ConstRef& x, Eigen::Index dim, const char* who) {
  if (x.size() != dim) {
    throw DimensionError(std::string(who) + ": expected dimension " + std::to_string(dim) +
                         ", got " + std::to_string(x.size()));
  }
}

inline void require_finite(const ConstRef& x, const char* who) {
  if (!x.allFinite()) throw Error(std::string(who) + ": non-finite entries in " + format_point(x));
}

inline Point make_point(std::initializer_list<double> xs) {
  Point p(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double v : xs) p[i++] = v;
  return p;
}

}  // namespace mvi
