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
#include "hjlss/systems.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace hjlss;

namespace {

LinearTVSystem single_integrator(double ub, Objective obj = Objective::Reach) {
  return LinearTVSystem::constant("integrator", Mat::Zero(1, 1), Mat::Ones(1, 1),
                                  Mat::Zero(1, 0), Vec::Constant(1, ub), Vec(0), obj);
}

HopfProblem pubsub_problem(double a = -0.5) {
  PubSubParams p;
  p.a = a;
  HopfProblem prob;
  prob.linear = make_pubsub_linear(p);
  prob.target = make_pubsub_target(p);
  return prob;
}

Mat pubsub_phi(double a, double s) {
  Mat m(2, 2);
  m << 1, 0, -s, 1;
  return std::exp(a * s) * m;
}

} // namespace

TEST(Hopf, FundamentalMatrixPubSubBlock) {
  const auto prob = pubsub_problem(-0.5);
  for (double s : {0.0, 0.1, 0.5, 1.0, 2.0})
    EXPECT_LT((fundamental_matrix(prob.linear, s) - pubsub_phi(-0.5, s)).cwiseAbs().maxCoeff(),
              1e-10);
}

TEST(Hopf, FundamentalMatrixTimeVaryingMatchesConstant) {
  auto lin = pubsub_problem(-0.5).linear;
  lin.time_invariant = false;
  EXPECT_LT((fundamental_matrix(lin, 1.0) - pubsub_phi(-0.5, 1.0)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Hopf, InputFreeZeroDynamicsReturnsTarget) {
  HopfProblem prob;
  prob.linear = LinearTVSystem::constant("zero", Mat::Zero(3, 3), Mat::Zero(3, 0),
                                         Mat::Zero(3, 0), Vec(0), Vec(0), Objective::Reach);
  Vec w(3);
  w << 1.0, 2.0, 0.5;
  prob.target = QuadraticTarget(w, 0.7, 1.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-2, 2);
  for (int k = 0; k < 100; ++k) {
    Vec x(3);
    for (int i = 0; i < 3; ++i) x[i] = U(rng);
    const auto sol = hopf_solve(prob, x, -1.0);
    EXPECT_NEAR(sol.value, prob.target.value(x), 1e-6);
    EXPECT_LT((sol.spatial_grad - prob.target.gradient(x)).norm(), 1e-6);
    EXPECT_FALSE(sol.flagged);
  }
}

TEST(Hopf, CancellingInputsGiveFlowMinimum) {
  // b = c: inputs cancel, the value is the minimum of J along the free flow.
  const auto prob = pubsub_problem(-0.5);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(-2.5, 2.5);
  for (int k = 0; k < 50; ++k) {
    Vec x(2);
    x << U(rng), U(rng);
    const double t = -1.0;
    double oracle = 1e300;
    for (double tau : prob.tau_grid(t))
      oracle = std::min(oracle, prob.target.value(pubsub_phi(-0.5, -tau) * x));
    const auto sol = hopf_solve(prob, x, t);
    EXPECT_NEAR(sol.value, oracle, 1e-9);
  }
}

TEST(Hopf, SingleIntegratorSoftThreshold) {
  // x' = u, |u| <= 1: V_h = 1/2 (max(|x| - h, 0)^2 - r^2), minimized at h = T.
  HopfProblem prob;
  prob.linear = single_integrator(1.0);
  prob.target = QuadraticTarget::ball(1, 0.5);
  prob.solver.max_iters = 600;
  for (double x0 : {-2.0, -1.3, -0.4, 0.0, 0.2, 0.9, 1.7}) {
    const double T = 0.75;
    const double m = std::max(std::abs(x0) - T, 0.0);
    const double oracle = 0.5 * (m * m - 0.25);
    const auto sol = hopf_solve(prob, Vec::Constant(1, x0), -T);
    EXPECT_NEAR(sol.value, oracle, 2e-3) << "x0=" << x0;
    EXPECT_NEAR(sol.tau_star, -T, 1e-12);
  }
}

TEST(Hopf, ObjectiveAtKnownPoint) {
  HopfProblem prob;
  prob.linear = single_integrator(1.0);
  prob.target = QuadraticTarget::ball(1, 1.0);
  // J*(p) = p^2/2 + 1/2, minus x p, plus h |p| for the minimizing control.
  const double v = hopf_objective(prob, Vec::Constant(1, 2.0), -0.5, Vec::Constant(1, 1.0));
  EXPECT_NEAR(v, 0.5 + 0.5 - 2.0 + 0.5, 1e-12);
}

TEST(Hopf, MonotoneHorizon) {
  auto p = PubSubParams{};
  p.c = 0.5; // controller dominates: nontrivial nonsmooth objective
  HopfProblem prob;
  prob.linear = make_pubsub_linear(p);
  prob.target = make_pubsub_target(p);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-2, 2);
  for (int k = 0; k < 20; ++k) {
    Vec x(2);
    x << U(rng), U(rng);
    // Nested tau grids: the t = -1 grid contains the t = -0.5 grid's range.
    HopfProblem fine = prob;
    fine.n_tau = 21;
    HopfProblem coarse = prob;
    coarse.n_tau = 11;
    const double v1 = hopf_solve(fine, x, -1.0).value;
    const double v2 = hopf_solve(coarse, x, -0.5).value;
    EXPECT_LE(v1, v2 + 1e-3);
  }
}

TEST(Hopf, QuadratureAndRestartInvariance) {
  auto p = PubSubParams{};
  p.c = 0.5;
  HopfProblem prob;
  prob.linear = make_pubsub_linear(p);
  prob.target = make_pubsub_target(p);
  HopfProblem dbl = prob;
  dbl.quad_nodes *= 2;
  dbl.solver.restarts *= 2;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(-2, 2);
  for (int k = 0; k < 10; ++k) {
    Vec x(2);
    x << U(rng), U(rng);
    EXPECT_NEAR(hopf_solve(prob, x, -1.0).value, hopf_solve(dbl, x, -1.0).value, 1e-2);
  }
}

TEST(Hopf, GradientMatchesFiniteDifferences) {
  auto p = PubSubParams{};
  p.c = 0.5;
  HopfProblem prob;
  prob.linear = make_pubsub_linear(p);
  prob.target = make_pubsub_target(p);
  prob.solver.max_iters = 1500;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> U(-2.5, 2.5);
  int checked = 0;
  for (int k = 0; k < 30 && checked < 10; ++k) {
    Vec x(2);
    x << U(rng), U(rng);
    const auto sol = hopf_solve(prob, x, -1.0);
    if (sol.restart_dispersion > 1e-4 || sol.flagged) continue;
    const double h = 1e-3;
    Vec fd(2);
    bool stable = true;
    for (int i = 0; i < 2; ++i) {
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const auto sp = hopf_solve(prob, xp, -1.0), sm = hopf_solve(prob, xm, -1.0);
      stable = stable && sp.tau_star == sol.tau_star && sm.tau_star == sol.tau_star;
      fd[i] = (sp.value - sm.value) / (2 * h);
    }
    if (!stable) continue;
    ++checked;
    EXPECT_LT((sol.spatial_grad - fd).norm(), 5e-2 * std::max(1.0, fd.norm()));
  }
  EXPECT_GE(checked, 5);
}

TEST(Hopf, ErrorHamiltonianNormTerm) {
  HopfProblem prob;
  prob.linear = LinearTVSystem::constant("zero", Mat::Zero(2, 2), Mat::Zero(2, 0),
                                         Mat::Zero(2, 0), Vec(0), Vec(0), Objective::Reach);
  prob.target = QuadraticTarget::ball(2, 1.0);
  Vec p(2);
  p << 3, 4;
  const auto d1 = DeltaProfile::constant(1.0);
  EXPECT_NEAR(error_hamiltonian(prob, d1, +1)(p, 0.3), 5.0, 1e-14);
  EXPECT_NEAR(error_hamiltonian(prob, d1, -1)(p, 0.3), -5.0, 1e-14);
  EXPECT_EQ(error_hamiltonian(prob, d1, +1)(Vec::Zero(2), 0.3), 0.0);
  const auto d0 = DeltaProfile::constant(0.0);
  const auto base = pubsub_problem();
  Vec q(2);
  q << 0.3, -0.7;
  EXPECT_EQ(error_hamiltonian(base, d0, +1)(q, 0.4), error_hamiltonian(base, d0, -1)(q, 0.4));
}

TEST(Hopf, ValueGapProperties) {
  const auto prob = pubsub_problem();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-2, 2);
  for (int k = 0; k < 10; ++k) {
    Vec x(2);
    x << U(rng), U(rng);
    const auto g0 = value_gap_bound(prob, x, -1.0, DeltaProfile::constant(0.0));
    EXPECT_NEAR(g0.epsilon, 0.0, 1e-6);
    const auto g = value_gap_bound(prob, x, -1.0, DeltaProfile::constant(0.5));
    EXPECT_GE(g.epsilon, -1e-3 * (1 + std::abs(g.upper)));
    EXPECT_NEAR(g.epsilon, g.upper - g.lower, 1e-15);
  }
}

TEST(Hopf, DatasetReplayAndCsvRoundTrip) {
  auto prob = pubsub_problem();
  prob.linear.disturb_bound *= 0.5;
  const Box dom = Box::cube(2, -2, 2);
  TimeSampler ts;
  ts.horizon = 1.0;
  const auto ds = generate_hopf_dataset(prob, dom, 12, ts, 99);
  const auto ds2 = generate_hopf_dataset(prob, dom, 12, ts, 99);
  EXPECT_EQ(ds.value, ds2.value);
  EXPECT_EQ(ds.grad, ds2.grad);
  for (int i = 0; i < 12; ++i) {
    auto [x, t] = dataset_row_point(dom, ts, 99, i);
    HopfProblem local = prob;
    local.solver.seed = dataset_row_solver_seed(99, i);
    EXPECT_EQ(hopf_solve(local, x, t).value, ds.value[i]);
    EXPECT_TRUE(dom.contains(x));
    EXPECT_LE(t, 0.0);
    EXPECT_GE(t, -1.0);
  }
  std::stringstream ss;
  write_hopf_csv(ss, ds, 2);
  const auto back = read_hopf_csv(ss);
  EXPECT_EQ(back.value, ds.value);
  EXPECT_EQ(back.x, ds.x);
  EXPECT_EQ(back.grad, ds.grad);
  EXPECT_EQ(back.flagged, ds.flagged);
}

TEST(Hopf, EmptyDatasetHasHeaderOnly) {
  const auto prob = pubsub_problem();
  const auto ds = generate_hopf_dataset(prob, Box::cube(2, -1, 1), 0, TimeSampler{}, 1);
  std::stringstream ss;
  write_hopf_csv(ss, ds, 2);
  EXPECT_EQ(ss.str(), "x_0,x_1,t,value,grad_0,grad_1,flag\n");
}

TEST(Hopf, ValidationErrors) {
  auto prob = pubsub_problem();
  prob.quad_nodes = 1;
  EXPECT_THROW(hopf_solve(prob, Vec::Zero(2), -1.0), Error);
  prob = pubsub_problem();
  EXPECT_THROW(hopf_solve(prob, Vec::Zero(3), -1.0), DimensionError);
  EXPECT_THROW(hopf_solve(prob, Vec::Zero(2), 0.5), Error);
}
