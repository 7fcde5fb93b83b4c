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

#include <gtest/gtest.h>

#include "mvi/prox.hpp"
#include "oracles.hpp"

namespace {

using mvi::make_point;
using mvi::Point;
using mvi::ProxFunction;
using mvi::ProxKind;

TEST(Prox, ZeroIsIdentity) {
  const auto phi = ProxFunction::zero(3);
  const Point x = make_point({1.5, -2.0, 0.25});
  EXPECT_EQ(phi.prox(x, 0.3), x);
  EXPECT_EQ(phi.prox(x, 7.0), x);
  EXPECT_EQ(phi.value(x), 0.0);
}

TEST(Prox, L1SoftThreshold) {
  const auto phi = ProxFunction::l1(1, 1.0);
  EXPECT_DOUBLE_EQ(phi.prox(make_point({2.0}), 0.5)[0], 1.5);
  EXPECT_DOUBLE_EQ(phi.prox(make_point({-2.0}), 0.5)[0], -1.5);
  EXPECT_EQ(phi.prox(make_point({0.3}), 0.5)[0], 0.0);
  EXPECT_DOUBLE_EQ(phi.value(make_point({-2.0})), 2.0);
}

TEST(Prox, BoxClamps) {
  const auto phi = ProxFunction::box(make_point({0.0, 0.0}), make_point({1.0, 1.0}));
  const Point p = phi.prox(make_point({1.7, -0.3}), 3.0);
  EXPECT_EQ(p, make_point({1.0, 0.0}));
  EXPECT_TRUE(std::isinf(phi.value(make_point({1.7, 0.5}))));
  EXPECT_EQ(phi.value(make_point({1.0, 0.5})), 0.0);
}

TEST(Prox, QuadraticClosedForm) {
  const auto phi = ProxFunction::quadratic(make_point({2.0}), make_point({0.0}));
  EXPECT_DOUBLE_EQ(phi.prox(make_point({3.0}), 1.0)[0], 1.0);
  const auto shifted = ProxFunction::quadratic(make_point({1.0}), make_point({0.5}));
  // (x - rho c) / (1 + rho d) with x = 2, rho = 2: (2 - 1) / 3.
  EXPECT_DOUBLE_EQ(shifted.prox(make_point({2.0}), 2.0)[0], 1.0 / 3.0);
}

TEST(Prox, BallAndOrthant) {
  const auto ball = ProxFunction::ball(make_point({1.0, 0.0}), 2.0);
  const Point p = ball.prox(make_point({1.0, 5.0}), 1.0);
  EXPECT_NEAR(p[0], 1.0, 1e-15);
  EXPECT_NEAR(p[1], 2.0, 1e-15);
  EXPECT_EQ(ball.prox(make_point({0.5, 0.5}), 1.0), make_point({0.5, 0.5}));
  const auto orth = ProxFunction::orthant(3);
  EXPECT_EQ(orth.prox(make_point({-1.0, 2.0, 0.0}), 1.0), make_point({0.0, 2.0, 0.0}));
}

TEST(Prox, ConstructionErrors) {
  EXPECT_THROW(ProxFunction::ball(make_point({0.0}), 0.0), mvi::Error);
  EXPECT_THROW(ProxFunction::ball(make_point({0.0}), -1.0), mvi::Error);
  EXPECT_THROW(ProxFunction::box(make_point({1.0}), make_point({0.0})), mvi::Error);
  EXPECT_THROW(ProxFunction::l1(2, -0.1), mvi::Error);
  EXPECT_THROW(ProxFunction::quadratic(make_point({-1.0}), make_point({0.0})), mvi::Error);
  EXPECT_THROW(ProxFunction::zero(0), mvi::Error);
}

TEST(Prox, CheckedProxRejectsBadInput) {
  const auto phi = ProxFunction::zero(2);
  EXPECT_THROW(phi.prox(make_point({1.0}), 1.0), mvi::DimensionError);
  EXPECT_THROW(phi.prox(make_point({1.0, 2.0}), 0.0), mvi::Error);
  EXPECT_THROW(phi.prox(make_point({1.0, NAN}), 1.0), mvi::Error);
}

TEST(ResolventLemma, Examples) {
  const Point x = make_point({2.0}), y = make_point({0.5});
  EXPECT_EQ(mvi::resolvent_lemma_gap(ProxFunction::zero(1), x, y, 0.7), 0.0);
  const auto box = ProxFunction::box(make_point({0.0}), make_point({1.0}));
  for (double rho : {0.1, 1.0, 9.0}) EXPECT_DOUBLE_EQ(mvi::resolvent_lemma_gap(box, x, y, rho), -0.5);
  // J(2) = 1: <1, 0 - 1> + 1 - 0 = 0 and <1, -1 - 1> + 1 - 1 = -2.
  EXPECT_DOUBLE_EQ(mvi::resolvent_lemma_gap(ProxFunction::l1(1, 1.0), x, make_point({0.0}), 1.0), 0.0);
  EXPECT_DOUBLE_EQ(mvi::resolvent_lemma_gap(ProxFunction::l1(1, 1.0), x, make_point({-1.0}), 1.0), -2.0);
  // With the phi terms the other way round the value would be positive here.
  EXPECT_DOUBLE_EQ(mvi::resolvent_lemma_gap(ProxFunction::l1(1, 1.0), x, make_point({3.0}), 1.0), 0.0);
  EXPECT_DOUBLE_EQ(mvi::resolvent_lemma_gap(ProxFunction::l1(1, 1.0), make_point({0.5}), make_point({2.0}), 1.0),
                   -1.0);
}

TEST(ResolventLemma, ProbeOutsideDomainThrows) {
  const auto box = ProxFunction::box(make_point({0.0}), make_point({1.0}));
  EXPECT_THROW(mvi::resolvent_lemma_gap(box, make_point({0.5}), make_point({2.0}), 1.0), mvi::Error);
}

TEST(ProjectionGaps, Examples) {
  const auto box = ProxFunction::box(make_point({0.0}), make_point({1.0}));
  const auto g = mvi::projection_inequality_gaps(box, make_point({2.0}), make_point({-1.0}), make_point({0.5}));
  EXPECT_DOUBLE_EQ(g.firm, -4.0);
  EXPECT_DOUBLE_EQ(g.obtuse, -0.5);
  const auto same = mvi::projection_inequality_gaps(box, make_point({3.0}), make_point({3.0}), make_point({0.5}));
  EXPECT_EQ(same.firm, 0.0);
  const auto inside = mvi::projection_inequality_gaps(box, make_point({0.3}), make_point({2.0}), make_point({0.3}));
  EXPECT_EQ(inside.obtuse, 0.0);
}

TEST(ProjectionGaps, Errors) {
  const auto box = ProxFunction::box(make_point({0.0}), make_point({1.0}));
  EXPECT_THROW(mvi::projection_inequality_gaps(box, make_point({0.0}), make_point({0.0}), make_point({2.0})),
               mvi::Error);
  EXPECT_THROW(mvi::projection_inequality_gaps(ProxFunction::l1(1, 1.0), make_point({0.0}), make_point({0.0}),
                                               make_point({0.0})),
               mvi::Error);
}

// Property tests over every kind with seeded random instances.

class ProxProperties : public ::testing::TestWithParam<ProxKind> {};

TEST_P(ProxProperties, FirmlyNonexpansive) {
  oracle::Gen g(1000 + static_cast<int>(GetParam()));
  double worst = -mvi::kInfinity;
  for (int i = 0; i < 10000; ++i) {
    const int n = g.integer(1, 5);
    const auto phi = g.prox(GetParam(), n);
    const double rho = g.uniform(0.05, 5.0);
    const Point x = g.point(n, -4, 4), y = g.point(n, -4, 4);
    const Point jx = phi.prox(x, rho), jy = phi.prox(y, rho);
    worst = std::max(worst, (jx - jy).squaredNorm() - (jx - jy).dot(x - y));
  }
  EXPECT_LE(worst, 1e-10);
}

TEST_P(ProxProperties, ResolventLemmaHolds) {
  oracle::Gen g(2000 + static_cast<int>(GetParam()));
  double worst = -mvi::kInfinity;
  for (int i = 0; i < 10000; ++i) {
    const int n = g.integer(1, 5);
    const auto phi = g.prox(GetParam(), n);
    const double rho = g.uniform(0.05, 5.0);
    worst = std::max(worst, mvi::resolvent_lemma_gap(phi, g.point(n, -4, 4), g.inside(phi, n), rho));
  }
  EXPECT_LE(worst, 1e-10);
}

TEST_P(ProxProperties, BeatsBruteForceSearch) {
  oracle::Gen g(3000 + static_cast<int>(GetParam()));
  for (int n : {1, 2}) {
    for (int i = 0; i < 60; ++i) {
      const auto phi = g.prox(GetParam(), n);
      const double rho = g.uniform(0.05, 5.0);
      const Point x = g.point(n, -4, 4);
      const double mine = oracle::prox_objective(phi, x, rho, phi.prox(x, rho));
      const double brute = oracle::brute_prox_min(phi, x, rho, static_cast<std::uint64_t>(i));
      EXPECT_GE(brute - mine, -1e-8) << phi.describe() << " n=" << n << " x=" << mvi::format_point(x);
    }
  }
}

TEST_P(ProxProperties, OutputInDomain) {
  oracle::Gen g(4000 + static_cast<int>(GetParam()));
  for (int i = 0; i < 2000; ++i) {
    const int n = g.integer(1, 4);
    const auto phi = g.prox(GetParam(), n);
    EXPECT_TRUE(phi.contains(phi.prox(g.point(n, -6, 6), g.uniform(0.05, 5.0))));
  }
}

INSTANTIATE_TEST_SUITE_P(AllKinds, ProxProperties, ::testing::ValuesIn(oracle::kAllKinds),
                         [](const auto& info) { return std::string(mvi::to_string(info.param)); });

class IndicatorProperties : public ::testing::TestWithParam<ProxKind> {};

TEST_P(IndicatorProperties, Idempotent) {
  oracle::Gen g(5000 + static_cast<int>(GetParam()));
  for (int i = 0; i < 5000; ++i) {
    const int n = g.integer(1, 5);
    const auto phi = g.prox(GetParam(), n);
    const Point j = phi.prox(g.point(n, -6, 6), 1.0);
    const Point jj = phi.prox(j, g.uniform(0.05, 5.0));
    EXPECT_LE((jj - j).norm(), 4 * std::numeric_limits<double>::epsilon() * (1.0 + j.norm()));
  }
}

TEST_P(IndicatorProperties, ProjectionInequalities) {
  oracle::Gen g(6000 + static_cast<int>(GetParam()));
  for (int i = 0; i < 5000; ++i) {
    const int n = g.integer(1, 5);
    const auto phi = g.prox(GetParam(), n);
    const auto gaps = mvi::projection_inequality_gaps(phi, g.point(n, -5, 5), g.point(n, -5, 5), g.inside(phi, n));
    EXPECT_LE(gaps.firm, 1e-10);
    EXPECT_LE(gaps.obtuse, 1e-10);
  }
}

TEST_P(IndicatorProperties, ProjectionIgnoresRho) {
  oracle::Gen g(7000 + static_cast<int>(GetParam()));
  for (int i = 0; i < 500; ++i) {
    const auto phi = g.prox(GetParam(), 3);
    const Point x = g.point(3, -5, 5);
    EXPECT_EQ(phi.prox(x, 0.01), phi.prox(x, 100.0));
  }
}

INSTANTIATE_TEST_SUITE_P(Indicators, IndicatorProperties,
                         ::testing::Values(ProxKind::indicator_box, ProxKind::indicator_ball,
                                           ProxKind::indicator_orthant),
                         [](const auto& info) { return std::string(mvi::to_string(info.param)); });

}  // namespace
