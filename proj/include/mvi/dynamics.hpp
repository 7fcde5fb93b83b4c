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

// Continuous-time resolvent dynamics
//
//   alpha x''' + beta x'' + gamma x' + x = J_phi(x - lambda T(x))
//
// with its second-order (alpha = 0) and first-order (alpha = beta = 0)
// reductions, fixed-step Euler / RK4 integration, the Lyapunov functional and
// exponential decay-rate fitting.

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "mvi/common.hpp"
#include "mvi/core.hpp"

namespace mvi {

struct DynamicsParams {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double lambda = 1.0;

  /// 3 if alpha > 0, 2 if alpha == 0 and beta > 0, else 1.
  int order() const { return alpha > 0.0 ? 3 : (beta > 0.0 ? 2 : 1); }

  void validate() const {
    require(std::isfinite(alpha) && alpha >= 0.0, "DynamicsParams: alpha must be >= 0");
    require(std::isfinite(beta) && beta >= 0.0, "DynamicsParams: beta must be >= 0");
    require(std::isfinite(gamma) && gamma > 0.0, "DynamicsParams: gamma must be > 0");
    require(std::isfinite(lambda) && lambda > 0.0, "DynamicsParams: lambda must be > 0");
  }
};

/// (x, x', x''). v is empty for first order, a is empty below third order.
struct PhaseState {
  Point x;
  Point v;
  Point a;
};

/// Time derivative of a PhaseState: (x', x'', x''').
struct PhaseDerivative {
  Point dx;
  Point dv;
  Point da;
};

enum class Integrator { euler, rk4 };

inline const char* to_string(Integrator m) { return m == Integrator::euler ? "euler" : "rk4"; }

struct IntegrateOptions {
  double t_end = 20.0;
  double dt = 1e-3;
  Integrator method = Integrator::rk4;
  /// Store every k-th step (the initial and final states are always stored).
  std::size_t record_every = 1;
  double t0 = 0.0;
};

struct Trajectory {
  int order = 1;
  std::vector<double> times;
  std::vector<PhaseState> states;
  std::vector<double> residuals;
  bool diverged = false;

  std::size_t size() const { return times.size(); }
};

namespace dyn_detail {

// Right-hand side on the packed state y = [x; v; a] (blocks present per order).
class Field {
 public:
  Field(const MviProblem& p, const DynamicsParams& params)
      : p_(p), params_(params), n_(p.dim()), order_(params.order()), scratch_(n_), j_(n_) {}

  Eigen::Index packed_size() const { return n_ * order_; }
  int order() const { return order_; }

  void operator()(const ConstRef& y, MutRef dy) {
    const auto x = y.head(n_);
    fixed_point_map_into(p_.op(), p_.phi(), x, params_.lambda, scratch_, j_);
    switch (order_) {
      case 1:
        dy = params_.gamma * (j_ - x);
        break;
      case 2: {
        const auto v = y.segment(n_, n_);
        dy.head(n_) = v;
        dy.segment(n_, n_) = (j_ - x - params_.gamma * v) / params_.beta;
        break;
      }
      default: {
        const auto v = y.segment(n_, n_);
        const auto a = y.segment(2 * n_, n_);
        dy.head(n_) = v;
        dy.segment(n_, n_) = a;
        dy.segment(2 * n_, n_) = (j_ - x - params_.gamma * v - params_.beta * a) / params_.alpha;
        break;
      }
    }
  }

 private:
  const MviProblem& p_;
  DynamicsParams params_;
  Eigen::Index n_;
  int order_;
  Point scratch_, j_;
};

inline Point pack(const PhaseState& s, int order, Eigen::Index n) {
  Point y(n * order);
  y.head(n) = s.x;
  if (order >= 2) y.segment(n, n) = s.v;
  if (order >= 3) y.segment(2 * n, n) = s.a;
  return y;
}

inline PhaseState unpack(const ConstRef& y, int order, Eigen::Index n) {
  PhaseState s;
  s.x = y.head(n);
  if (order >= 2) s.v = y.segment(n, n);
  if (order >= 3) s.a = y.segment(2 * n, n);
  return s;
}

inline void check_state(const MviProblem& p, const PhaseState& s, int order) {
  require_dim(s.x, p.dim(), "PhaseState.x");
  if (order >= 2) require_dim(s.v, p.dim(), "PhaseState.v");
  if (order >= 3) require_dim(s.a, p.dim(), "PhaseState.a");
}

inline PhaseDerivative evaluate(const MviProblem& p, const DynamicsParams& params,
                                const PhaseState& s) {
  const int order = params.order();
  check_state(p, s, order);
  const auto n = p.dim();
  Field f(p, params);
  const Point y = pack(s, order, n);
  Point dy(y.size());
  f(y, dy);
  PhaseDerivative d;
  d.dx = dy.head(n);
  if (order >= 2) d.dv = dy.segment(n, n);
  if (order >= 3) d.da = dy.segment(2 * n, n);
  return d;
}

}  // namespace dyn_detail

/// (x', x'', x''') with x''' = [J(x - lambda T x) - x - gamma v - beta a] / alpha.
/// Requires alpha > 0; lower orders go through vector_field_reduced.
inline PhaseDerivative vector_field(const MviProblem& p, const DynamicsParams& params,
                                    const PhaseState& s) {
  params.validate();
  if (params.order() != 3) {
    throw Error("vector_field: alpha = 0; use vector_field_reduced for the reduced orders");
  }
  return dyn_detail::evaluate(p, params, s);
}

/// alpha = 0. Second order (beta > 0): x'' = [J - x - gamma x'] / beta.
/// First order (beta = 0): x' = gamma [J - x]. Unused derivative blocks are empty.
inline PhaseDerivative vector_field_reduced(const MviProblem& p, const DynamicsParams& params,
                                            const PhaseState& s) {
  params.validate();
  require(params.alpha == 0.0, "vector_field_reduced: alpha must be 0");
  return dyn_detail::evaluate(p, params, s);
}

/// Fixed-step integration from t0 to t0 + t_end. The natural residual is
/// recorded with every stored state. Stops with diverged = true (keeping the
/// states so far) on a non-finite state or |x| >= 1e12.
inline Trajectory integrate(const MviProblem& p, const DynamicsParams& params,
                            const PhaseState& initial, const IntegrateOptions& opt) {
  params.validate();
  require(std::isfinite(opt.dt) && opt.dt > 0.0, "integrate: dt must be > 0");
  require(std::isfinite(opt.t_end) && opt.t_end > 0.0, "integrate: t_end must be > 0");
  require(opt.dt <= opt.t_end, "integrate: dt must not exceed t_end");
  require(opt.record_every >= 1, "integrate: record_every must be >= 1");

  dyn_detail::Field field(p, params);
  const int order = field.order();
  const auto n = p.dim();
  dyn_detail::check_state(p, initial, order);

  // Last step is shortened so the run ends exactly at t_end.
  const double ratio = opt.t_end / opt.dt;
  auto steps = static_cast<std::size_t>(std::ceil(ratio - 1e-9));
  if (steps == 0) steps = 1;

  Trajectory traj;
  traj.order = order;
  Point y = dyn_detail::pack(initial, order, n);
  const auto m = y.size();
  Point k1(m), k2(m), k3(m), k4(m), tmp(m);
  Point scratch(n), jbuf(n);

  auto record = [&](double t) {
    traj.times.push_back(t);
    traj.states.push_back(dyn_detail::unpack(y, order, n));
    fixed_point_map_into(p.op(), p.phi(), y.head(n), params.lambda, scratch, jbuf);
    traj.residuals.push_back((y.head(n) - jbuf).norm());
  };

  if (!y.allFinite()) {
    traj.diverged = true;
    return traj;
  }
  record(opt.t0);

  for (std::size_t k = 1; k <= steps; ++k) {
    const double t_prev = opt.t0 + static_cast<double>(k - 1) * opt.dt;
    const double t_next = k == steps ? opt.t0 + opt.t_end : opt.t0 + static_cast<double>(k) * opt.dt;
    const double h = t_next - t_prev;
    if (opt.method == Integrator::euler) {
      field(y, k1);
      y += h * k1;
    } else {
      field(y, k1);
      tmp = y + (0.5 * h) * k1;
      field(tmp, k2);
      tmp = y + (0.5 * h) * k2;
      field(tmp, k3);
      tmp = y + h * k3;
      field(tmp, k4);
      y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!y.allFinite() || y.head(n).norm() >= kDivergenceNorm) {
      traj.diverged = true;
      return traj;
    }
    if (k == steps || k % opt.record_every == 0) record(t_next);
  }
  return traj;
}

/// 0.5 (|v|^2 + |x|^2); v is taken as 0 for first-order states.
inline double lyapunov_value(const PhaseState& s) {
  const double v2 = s.v.size() ? s.v.squaredNorm() : 0.0;
  return 0.5 * (v2 + s.x.squaredNorm());
}

/// Lyapunov value of the state shifted to the equilibrium: (x - x*, v).
inline double lyapunov_value_shifted(const PhaseState& s, const ConstRef& x_star) {
  const double v2 = s.v.size() ? s.v.squaredNorm() : 0.0;
  return 0.5 * (v2 + (s.x - x_star).squaredNorm());
}

struct DecayFit {
  /// Decay exponent of the squared distance: |x(t) - x*|^2 ~ C exp(-eta (t - t0)).
  double eta = 0.0;
  /// sqrt(C) / |x(t0) - x*|
  double rho = 0.0;
  /// RMS residual of the log-linear fit.
  double fit_residual = 0.0;
  double log_c = 0.0;
  double t0 = 0.0;
  /// Half-open sample range [first, last) the fit used.
  std::size_t first = 0;
  std::size_t last = 0;
};

inline constexpr std::size_t kMinDecaySamples = 10;

/// Least-squares fit of log |x(t) - x*|^2 = log C - eta (t - t0) over the last
/// `tail_fraction` of the samples. The window is cut before the first exact
/// zero distance.
inline DecayFit estimate_decay_rate(const Trajectory& traj, const ConstRef& x_star,
                                    double tail_fraction) {
  require(tail_fraction > 0.0 && tail_fraction <= 1.0,
          "estimate_decay_rate: tail fraction must be in (0, 1]");
  const std::size_t n = traj.size();
  if (n == 0) throw Error("estimate_decay_rate: empty trajectory");
  const auto skip = static_cast<std::size_t>(std::floor((1.0 - tail_fraction) * static_cast<double>(n)));
  DecayFit fit;
  fit.first = std::min(skip, n - 1);
  fit.last = fit.first;
  std::vector<double> ts, ys;
  for (std::size_t i = fit.first; i < n; ++i) {
    const double d2 = (traj.states[i].x - x_star).squaredNorm();
    if (d2 == 0.0) break;
    ts.push_back(traj.times[i]);
    ys.push_back(std::log(d2));
    fit.last = i + 1;
  }
  if (ts.size() < kMinDecaySamples) {
    throw Error("estimate_decay_rate: fewer than 10 usable samples in the window");
  }
  fit.t0 = ts.front();
  const double m = static_cast<double>(ts.size());
  double su = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    su += ts[i] - fit.t0;
    sy += ys[i];
  }
  const double mu = su / m, my = sy / m;
  double suu = 0.0, suy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double du = ts[i] - fit.t0 - mu;
    suu += du * du;
    suy += du * (ys[i] - my);
  }
  const double slope = suu > 0.0 ? suy / suu : 0.0;
  fit.eta = -slope;
  fit.log_c = my - slope * mu;
  double ss = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double r = ys[i] - (fit.log_c + slope * (ts[i] - fit.t0));
    ss += r * r;
  }
  fit.fit_residual = std::sqrt(ss / m);
  fit.rho = std::exp(0.5 * fit.log_c) / std::sqrt(std::exp(ys.front()));
  return fit;
}

}  // namespace mvi
