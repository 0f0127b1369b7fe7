/*
 Copyright 2026 The hjlss Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#include "hjlss/hopf.hpp"
#include "hjlss/levelset.hpp"
#include "hjlss/systems.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace hjlss;

namespace {

GridSpec grid(int n, double half = 3.0) {
  GridSpec g;
  g.bounds = Box::cube(2, -half, half);
  g.nx = g.ny = n;
  return g;
}

PubSubParams linear_params() {
  PubSubParams p;
  p.N = 2;
  return p;
}

} // namespace

TEST(Levelset, ZeroDynamicsKeepsTarget) {
  const auto tg = QuadraticTarget::ball(2, 1.0);
  const auto g = dp_solve_2d(make_zero_dynamics(2), tg, grid(41), 1.0, 0.5, 5);
  for (std::size_t k = 0; k < g.slices(); ++k)
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) {
        Vec x(2);
        x << g.x_at(i), g.y_at(j);
        EXPECT_EQ(g.at(k, i, j), tg.value(x));
      }
}

TEST(Levelset, BoundaryExactMonotoneFinite) {
  const auto p = linear_params();
  const auto tg = make_pubsub_target(p);
  auto ps = p;
  ps.alpha = 1.0;
  const auto g = dp_solve_2d(make_pubsub(ps), tg, grid(61), 1.0, 0.5, 11);
  ASSERT_EQ(g.times.back(), 0.0);
  ASSERT_DOUBLE_EQ(g.times.front(), -1.0);
  const std::size_t last = g.slices() - 1;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      Vec x(2);
      x << g.x_at(i), g.y_at(j);
      EXPECT_NEAR(g.at(last, i, j), tg.value(x), 1e-12);
      for (std::size_t k = 0; k < last; ++k) {
        EXPECT_TRUE(std::isfinite(g.at(k, i, j)));
        EXPECT_LE(g.at(k, i, j), g.at(k + 1, i, j));
      }
    }
}

TEST(Levelset, MatchesHopfOnLinearPubSub) {
  const auto p = linear_params();
  const auto g = dp_solve_2d(make_pubsub(p), make_pubsub_target(p), grid(201), 1.0);
  HopfProblem prob;
  prob.linear = make_pubsub_linear(p);
  prob.target = make_pubsub_target(p);
  prob.n_tau = 64;
  // L-infinity slope of V on the domain is bounded by |grad J| times |Phi|.
  const double slope = 3.0 * std::sqrt(2.0) * 2.0;
  const double tol = 3.0 * (g.dx() + g.dt) * slope;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (int k = 0; k < 100; ++k) {
    Vec x(2);
    x << U(rng), U(rng);
    EXPECT_NEAR(interpolate(g, x, -1.0), hopf_solve(prob, x, -1.0).value, tol);
  }
}

TEST(Levelset, DisturbanceMonotonicity) {
  auto p = linear_params();
  p.b = 1.0;
  p.c = 0.3;
  auto q = p;
  q.c = 0.8;
  const auto tg = make_pubsub_target(p);
  const auto g1 = dp_solve_2d(make_pubsub(p), tg, grid(61), 1.0, 0.5, 3);
  const auto g2 = dp_solve_2d(make_pubsub(q), tg, grid(61), 1.0, 0.5, 3);
  for (std::size_t i = 0; i < g1.values.size(); ++i)
    EXPECT_GE(g2.values[i], g1.values[i] - 1e-12);
}

TEST(Levelset, SpectrumEndpointSolvesAreBitIdentical) {
  auto p = linear_params();
  p.alpha = 20.0;
  SpectrumSystem spec{make_pubsub(p), make_pubsub_linear(p)};
  const auto tg = make_pubsub_target(p);
  const auto g0 = dp_solve_2d(spectrum_slice(spec, 0.0), tg, grid(41), 1.0);
  const auto gl = dp_solve_2d(spec.linear.as_affine(), tg, grid(41), 1.0);
  const auto g1 = dp_solve_2d(spectrum_slice(spec, 1.0), tg, grid(41), 1.0);
  const auto gn = dp_solve_2d(spec.base, tg, grid(41), 1.0);
  EXPECT_EQ(g0.values, gl.values);
  EXPECT_EQ(g1.values, gn.values);
  EXPECT_NE(g0.values, g1.values);
}

TEST(Levelset, InvalidArguments) {
  const auto tg = QuadraticTarget::ball(2, 1.0);
  EXPECT_THROW(dp_solve_2d(make_zero_dynamics(2), tg, grid(21), 1.0, 0.0), Error);
  EXPECT_THROW(dp_solve_2d(make_zero_dynamics(2), tg, grid(21), 1.0, 1.5), Error);
  EXPECT_THROW(dp_solve_2d(make_zero_dynamics(3), QuadraticTarget::ball(3, 1.0), grid(21), 1.0),
               DimensionError);
}

TEST(Levelset, InterpolationExactAtNodesAndForAffineFields) {
  ValueGrid2D g;
  g.bounds = Box::cube(2, -1, 1);
  g.nx = 5;
  g.ny = 7;
  g.times = {-1.0, 0.0};
  g.values.resize(2 * 35);
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 7; ++j)
        g.values[g.index(k, i, j)] = 2.0 * g.x_at(i) - 3.0 * g.y_at(j) + 0.5 + k;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 7; ++j) {
      Vec x(2);
      x << g.x_at(i), g.y_at(j);
      EXPECT_EQ(interpolate(g, x, 0.0), g.at(1, i, j));
    }
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int k = 0; k < 100; ++k) {
    Vec x(2);
    x << U(rng), U(rng);
    const double t = -0.5 * (1 + U(rng));
    EXPECT_NEAR(interpolate(g, x, t), 2 * x[0] - 3 * x[1] + 0.5 + (1 + t), 1e-12);
    const Vec gr = grid_gradient(g, x, t);
    EXPECT_NEAR(gr[0], 2.0, 1e-12);
    EXPECT_NEAR(gr[1], -3.0, 1e-12);
  }
  Vec out(2);
  out << 1.5, 0.0;
  EXPECT_THROW(interpolate(g, out, 0.0), Error);
  EXPECT_THROW(interpolate(g, Vec::Zero(2), 0.5), Error);
  EXPECT_THROW(interpolate(g, Vec::Zero(2), -1.5), Error);
}

TEST(Levelset, GradientOfQuadraticTarget) {
  const auto tg = QuadraticTarget::ball(2, 1.0);
  const auto g = dp_solve_2d(make_zero_dynamics(2), tg, grid(121), 0.1, 0.5, 2);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-2.5, 2.5);
  for (int k = 0; k < 50; ++k) {
    Vec x(2);
    x << U(rng), U(rng);
    EXPECT_LT((grid_gradient(g, x, 0.0) - tg.gradient(x)).norm(), 4 * g.dx() * g.dx() + 1e-12);
  }
}

TEST(Levelset, SymmetricSolveHasZeroCrossComponent) {
  // Zero dynamics with a ball target is symmetric under x1 -> -x1.
  const auto g = dp_solve_2d(make_zero_dynamics(2), QuadraticTarget::ball(2, 1.0),
                             grid(61), 1.0, 0.5, 3);
  Vec x(2);
  x << 0.77, 0.0;
  EXPECT_NEAR(grid_gradient(g, x, -0.5)[1], 0.0, 1e-12);
}

TEST(Levelset, InterpolationAgreesWithFinerGrid) {
  auto p = linear_params();
  p.alpha = 1.0;
  const auto coarse = dp_solve_2d(make_pubsub(p), make_pubsub_target(p), grid(51), 1.0);
  const auto fine = dp_solve_2d(make_pubsub(p), make_pubsub_target(p), grid(201), 1.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    Vec x(2);
    x << U(rng), U(rng);
    worst = std::max(worst, std::abs(interpolate(coarse, x, -1.0) - interpolate(fine, x, -1.0)));
  }
  // First-order refinement error bound at the coarse resolution.
  const double slope = 3.0 * std::sqrt(2.0) * 2.0;
  EXPECT_LT(worst, 3.0 * (coarse.dx() + coarse.dt) * slope);
}

TEST(Levelset, CompositionIdentities) {
  auto p = linear_params();
  p.alpha = 1.0;
  auto part = std::make_shared<const ValueGrid2D>(
      dp_solve_2d(make_pubsub(p), make_pubsub_target(p), grid(41), 1.0, 0.5, 5));
  const auto o2 = ComposedOracle::publisher_subscriber(part, 2);
  const auto o6 = ComposedOracle::publisher_subscriber(part, 6);
  EXPECT_EQ(o6.parts.size(), 5u);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-2.5, 2.5);
  for (int k = 0; k < 50; ++k) {
    Vec x2(2);
    x2 << U(rng), U(rng);
    EXPECT_EQ(compose_value(o2, x2, -0.6), interpolate(*part, x2, -0.6));
    Vec x6(6);
    for (int i = 0; i < 6; ++i) x6[i] = U(rng);
    double direct = 0.0;
    Vec gd = Vec::Zero(6);
    for (int i = 1; i < 6; ++i) {
      Vec xi(2);
      xi << x6[0], x6[i];
      direct += interpolate(*part, xi, -0.6);
      const Vec gi = grid_gradient(*part, xi, -0.6);
      gd[0] += gi[0];
      gd[i] += gi[1];
    }
    EXPECT_NEAR(compose_value(o6, x6, -0.6), direct, 1e-12);
    EXPECT_LT((compose_gradient(o6, x6, -0.6) - gd).norm(), 1e-12);
    Vec diag = Vec::Constant(6, x2[1]);
    diag[0] = x2[0];
    EXPECT_NEAR(compose_value(o6, diag, -0.6), 5.0 * interpolate(*part, x2, -0.6), 1e-12);
  }
}

TEST(Levelset, CompositionRejectsMismatchedParts) {
  const auto tg = QuadraticTarget::ball(2, 1.0);
  auto a = std::make_shared<const ValueGrid2D>(
      dp_solve_2d(make_zero_dynamics(2), tg, grid(21), 1.0, 0.5, 3));
  auto b = std::make_shared<const ValueGrid2D>(
      dp_solve_2d(make_zero_dynamics(2), tg, grid(21), 1.0, 0.5, 5));
  ComposedOracle o;
  o.parts = {a, b};
  o.projections = {{0, 1}, {0, 2}};
  EXPECT_THROW(o.validate(), Error);
}

TEST(Levelset, SaveLoadRoundTrip) {
  auto p = linear_params();
  const auto g = dp_solve_2d(make_pubsub(p), make_pubsub_target(p), grid(31), 1.0, 0.5, 4);
  const auto path = std::filesystem::temp_directory_path() / "hjlss_grid_test.bin";
  save_grid(g, path);
  const auto h = load_grid(path);
  EXPECT_EQ(h.values, g.values);
  EXPECT_EQ(h.times, g.times);
  EXPECT_EQ(h.nx, g.nx);
  EXPECT_EQ(h.bounds.lo, g.bounds.lo);
  EXPECT_EQ(h.meta, g.meta);
  {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os << "NOTAGRID and some bytes";
  }
  EXPECT_THROW(load_grid(path), Error);
  std::filesystem::remove(path);
}

TEST(Levelset, GlobalDissipationIsMoreDiffusive) {
  // Both schemes over-estimate the convex linear value; the global bound
  // diffuses more.
  const auto p = linear_params();
  const auto gl = dp_solve_2d(make_pubsub(p), make_pubsub_target(p), grid(101), 1.0, 0.5, 3,
                              Dissipation::Global);
  const auto lo = dp_solve_2d(make_pubsub(p), make_pubsub_target(p), grid(101), 1.0, 0.5, 3,
                              Dissipation::Local);
  HopfProblem prob;
  prob.linear = make_pubsub_linear(p);
  prob.target = make_pubsub_target(p);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  double eg = 0.0, el = 0.0;
  for (int k = 0; k < 50; ++k) {
    Vec x(2);
    x << U(rng), U(rng);
    const double v = hopf_solve(prob, x, -1.0).value;
    eg = std::max(eg, std::abs(interpolate(gl, x, -1.0) - v));
    el = std::max(el, std::abs(interpolate(lo, x, -1.0) - v));
  }
  EXPECT_LT(el, eg);
  EXPECT_EQ(gl.meta["dissipation"], "global");
}
