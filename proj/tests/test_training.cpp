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
#include <gtest/gtest.h>

#include "hjlss/systems.hpp"
#include "hjlss/training.hpp"

#include <filesystem>
#include <unistd.h>

using namespace hjlss;

namespace {

TrainConfig small_config(Program p, int K = 40) {
  TrainConfig c;
  c.program = p;
  c.iterations = K;
  c.batch_size = 64;
  c.sup_batch_size = 32;
  c.lr = 1e-3;
  c.seed = 7;
  c.hidden = {16, 16};
  c.log_every = 5;
  c.domain = Box::cube(2, -3.0, 3.0);
  c.horizon = 1.0;
  return c;
}

PubSubParams pubsub2() {
  PubSubParams p;
  p.N = 2;
  p.alpha = 1.0;
  return p;
}

NetSupervisor untrained_supervisor(const TrainConfig &cfg, const QuadraticTarget &J) {
  NetArch a;
  a.state_dim = 2;
  a.hidden = {16, 16};
  a.domain = cfg.domain;
  a.horizon = cfg.horizon;
  return NetSupervisor(init_siren(a, J, 99), cfg.domain, cfg.horizon);
}

void expect_rows_equal(const std::vector<MetricRow> &a, const std::vector<MetricRow> &b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].iter, b[i].iter);
    EXPECT_EQ(a[i].loss_total, b[i].loss_total);
    EXPECT_EQ(a[i].loss_pde, b[i].loss_pde);
    EXPECT_EQ(a[i].loss_ls, b[i].loss_ls);
    EXPECT_EQ(a[i].lambda_k, b[i].lambda_k);
    EXPECT_EQ(a[i].s_k, b[i].s_k);
  }
}

std::filesystem::path temp_path(const std::string &name) {
  return std::filesystem::temp_directory_path() /
         ("hjlss_training_" + std::to_string(::getpid()) + "_" + name);
}

} // namespace

TEST(Schedules, CurriculumEndpoints) {
  auto c = small_config(Program::Baseline, 100);
  c.warmup = 0.4;
  EXPECT_EQ(curriculum_s(c, 0), 0.0);
  EXPECT_DOUBLE_EQ(curriculum_s(c, 20), 0.5);
  EXPECT_EQ(curriculum_s(c, 40), 1.0);
  EXPECT_EQ(curriculum_s(c, 99), 1.0);
  c.curriculum = false;
  EXPECT_EQ(curriculum_s(c, 0), 1.0);
  c.curriculum = true;
  c.program = Program::LssDecay;
  EXPECT_EQ(curriculum_s(c, 0), 1.0);
}

TEST(Schedules, LssdRamp) {
  auto c = small_config(Program::LssDecay, 100);
  c.lambda_K = 0.6;
  c.ramp = 0.5;
  EXPECT_EQ(lssd_lambda(c, 0), 0.0);
  EXPECT_DOUBLE_EQ(lssd_lambda(c, 25), 0.3);
  EXPECT_EQ(lssd_lambda(c, 50), 0.6);
  EXPECT_EQ(lssd_lambda(c, 100), 0.6);
  c.lambda_fixed = 1.0;
  EXPECT_EQ(lssd_lambda(c, 0), 1.0);
}

TEST(Schedules, AdaptiveImportanceEndpoints) {
  auto c = small_config(Program::LssDecayAdaptive, 1000);
  EXPECT_EQ(adaptive_importance(c, 0), 10.0);
  EXPECT_EQ(adaptive_importance(c, 1000), 1.0);
  EXPECT_NEAR(adaptive_importance(c, 500), std::sqrt(10.0), 1e-12);
  for (int k = 1; k <= 1000; ++k)
    EXPECT_LT(adaptive_importance(c, k), adaptive_importance(c, k - 1));
  c.I_start = 3.0;
  c.I_end = 0.5;
  EXPECT_EQ(adaptive_importance(c, 0), 3.0);
  EXPECT_EQ(adaptive_importance(c, 1000), 0.5);
}

TEST(Schedules, AdaptiveEmaConvergesToImportance) {
  AdaptiveWeight w{10.0, 0.0};
  for (int i = 0; i < 400; ++i) w = adaptive_update(w, 2.5, 3.0, 3.0);
  EXPECT_NEAR(w.lambda, 2.5, 1e-12);
  // One step by hand.
  w = adaptive_update({4.0, 0.0}, 2.0, 1.0, 4.0);
  EXPECT_DOUBLE_EQ(w.lambda, 0.9 * 4.0 + 0.1 * 2.0 * 0.25);
  EXPECT_DOUBLE_EQ(w.last_ratio, 0.25);
  // A vanishing PDE gradient keeps the previous ratio.
  const auto z = adaptive_update(w, 2.0, 5.0, 0.0);
  EXPECT_DOUBLE_EQ(z.last_ratio, 0.25);
  EXPECT_TRUE(std::isfinite(z.lambda));
}

TEST(Sampling, DeterministicAndInBounds) {
  auto c = small_config(Program::Baseline, 100);
  const auto a = sample_batch(c, 10, BatchMode::PdeSup);
  const auto b = sample_batch(c, 10, BatchMode::PdeSup);
  EXPECT_EQ(a.in.x, b.in.x);
  EXPECT_EQ(a.in.t, b.in.t);
  const auto d = sample_batch(c, 11, BatchMode::PdeSup);
  EXPECT_NE(a.in.x, d.in.x);
  EXPECT_EQ(a.pde.count, 64);
  EXPECT_EQ(a.sup.count, 32);
  const double s = curriculum_s(c, 10);
  for (Eigen::Index i = 0; i < a.in.size(); ++i) {
    EXPECT_TRUE(c.domain.contains(a.in.x.col(i)));
    EXPECT_LE(a.in.t[i], 0.0);
    EXPECT_GE(a.in.t[i], -s);
  }
}

TEST(Sampling, PdeBlockIndependentOfSupBlock) {
  auto c = small_config(Program::LssDecay, 100);
  const auto a = sample_batch(c, 3, BatchMode::Pde);
  const auto b = sample_batch(c, 3, BatchMode::PdeSup);
  EXPECT_EQ(a.in.x, b.in.x.leftCols(a.in.size()));
  EXPECT_EQ(a.in.t, b.in.t.head(a.in.size()));
}

TEST(Sampling, SpectrumComposition) {
  auto c = small_config(Program::LssSpectrum, 100);
  c.batch_size = 400;
  const auto b = sample_batch(c, 5, BatchMode::Spectrum);
  EXPECT_EQ(b.sup.count, 100);
  EXPECT_EQ(b.pde.count, 300);
  ASSERT_EQ(b.in.lambda.size(), 400);
  EXPECT_TRUE((b.in.lambda.segment(b.sup.begin, b.sup.count).array() == 0.0).all());
  const auto lp = b.in.lambda.head(b.pde.count);
  EXPECT_GE(lp.minCoeff(), 0.0);
  EXPECT_LE(lp.maxCoeff(), 1.0);
  EXPECT_GT(lp.maxCoeff() - lp.minCoeff(), 0.5);
}

TEST(Supervisors, NetSupervisorMatchesForward) {
  auto c = small_config(Program::LssDecay);
  const auto J = make_pubsub_target(pubsub2());
  const auto sup = untrained_supervisor(c, J);
  auto b = sample_batch(c, 0, BatchMode::PdeSup);
  sup.fill(b, 0);
  for (Eigen::Index i = 0; i < b.sup.count; ++i) {
    const auto out = forward_with_grad(sup.net(), b.in.x.col(b.sup.begin + i),
                                       b.in.t[b.sup.begin + i]);
    EXPECT_NEAR(out.value, b.sup_value[i], 1e-12);
    EXPECT_LT((out.dx - b.sup_grad.col(i)).norm(), 1e-12);
  }
  NetInput q;
  q.x = Mat::Constant(2, 1, 5.0);
  q.t = Vec::Constant(1, -0.5);
  Vec v;
  Mat g;
  EXPECT_THROW(sup.query(q, v, g), Error);
}

TEST(Supervisors, DatasetSupervisorDrawsRows) {
  HopfDataset ds;
  ds.x = Mat::Random(2, 5);
  ds.t = Vec::LinSpaced(5, -1.0, 0.0);
  ds.value = Vec::LinSpaced(5, 1.0, 5.0);
  ds.grad = Mat::Random(2, 5);
  DatasetSupervisor sup(ds);
  auto c = small_config(Program::LssDecay);
  auto b1 = sample_batch(c, 0, BatchMode::PdeSup);
  auto b2 = b1;
  sup.fill(b1, 42);
  sup.fill(b2, 42);
  EXPECT_EQ(b1.in.x, b2.in.x);
  EXPECT_EQ(b1.sup_value, b2.sup_value);
  for (Eigen::Index i = 0; i < b1.sup.count; ++i) {
    const int r = static_cast<int>(std::lround(b1.sup_value[i])) - 1;
    EXPECT_EQ(b1.in.x.col(b1.sup.begin + i), ds.x.col(r));
    EXPECT_EQ(b1.in.t[b1.sup.begin + i], ds.t[r]);
    EXPECT_EQ(b1.sup_grad.col(i), ds.grad.col(r));
  }
  EXPECT_THROW(DatasetSupervisor(HopfDataset{}), Error);
}

TEST(Losses, PdeAndLsTermsMatchCombinedLoss) {
  auto c = small_config(Program::LssDecay);
  const auto p = pubsub2();
  const auto J = make_pubsub_target(p);
  const auto sup = untrained_supervisor(c, J);
  NetArch a;
  a.state_dim = 2;
  a.hidden = {16, 16};
  a.domain = c.domain;
  const auto net = init_siren(a, J, 3);
  const auto ham = make_hamiltonian_fn(make_pubsub(p));
  auto b = sample_batch(c, 2, BatchMode::PdeSup);
  const auto lp = pde_loss(net, ham, b);
  const auto ll = ls_loss(net, sup, b, 0.7, 0.2);
  sup.fill(b, 0);
  LossSpec s;
  s.pde_weight = 0.4;
  s.value_weight = 0.6 * 0.7;
  s.grad_weight = 0.6 * 0.2;
  s.hamiltonian = ham;
  const auto both = loss_gradients(net, b, s);
  EXPECT_NEAR(both.total, 0.4 * lp.total + 0.6 * ll.total, 1e-12 * (1 + both.total));
  EXPECT_LT((both.grad - (0.4 * lp.grad + 0.6 * ll.grad)).norm(), 1e-10 * (1 + both.grad.norm()));
}

TEST(Programs, DeterministicLogsAndParameters) {
  auto c = small_config(Program::Baseline, 30);
  const auto sys = make_pubsub(pubsub2());
  const auto J = make_pubsub_target(pubsub2());
  const auto r1 = train_baseline(c, sys, J);
  const auto r2 = train_baseline(c, sys, J);
  EXPECT_EQ(r1.net.params, r2.net.params);
  expect_rows_equal(r1.rows, r2.rows);
  ASSERT_FALSE(r1.rows.empty());
  EXPECT_EQ(r1.rows.front().iter, 0);
  EXPECT_EQ(r1.rows.back().iter, 29);
  c.seed = 8;
  const auto r3 = train_baseline(c, sys, J);
  EXPECT_NE(r1.net.params, r3.net.params);
}

TEST(Programs, LssdWithUnitWeightIsBaselineWithoutCurriculum) {
  auto c = small_config(Program::Baseline, 25);
  c.curriculum = false;
  const auto sys = make_pubsub(pubsub2());
  const auto J = make_pubsub_target(pubsub2());
  const auto base = train_baseline(c, sys, J);
  auto d = c;
  d.lambda_fixed = 1.0;
  const auto sup = untrained_supervisor(c, J);
  const auto lssd = train_lss_decay(d, sys, J, sup);
  EXPECT_EQ(base.net.params, lssd.net.params);
  expect_rows_equal(base.rows, lssd.rows);
}

TEST(Programs, ResumeReproducesUninterruptedRun) {
  const auto sys = make_pubsub(pubsub2());
  const auto J = make_pubsub_target(pubsub2());
  auto c = small_config(Program::LssDecayAdaptive, 20);
  const auto sup = untrained_supervisor(c, J);
  const auto full = train_adaptive(c, sys, J, sup);

  auto r = c;
  r.state_path = temp_path("resume.state");
  std::filesystem::remove(r.state_path);
  TrainHooks stop;
  stop.stop_after = 8;
  const auto part = train_adaptive(r, sys, J, sup, stop);
  EXPECT_FALSE(part.completed);
  EXPECT_TRUE(std::filesystem::exists(r.state_path));
  const auto rest = train_adaptive(r, sys, J, sup);
  EXPECT_TRUE(rest.completed);
  EXPECT_EQ(full.net.params, rest.net.params);
  expect_rows_equal(full.rows, rest.rows);
  EXPECT_EQ(full.rows.back().iter, 20); // adaptive loop includes k = K
  std::filesystem::remove(r.state_path);
}

TEST(Programs, ZeroDynamicsLearnsTerminalCost) {
  // With no dynamics V(x, t) = J(x), so the learned correction must vanish.
  auto c = small_config(Program::Baseline, 300);
  c.omega0 = 5.0;
  const auto sys = make_zero_dynamics(2);
  const QuadraticTarget J(Vec::Ones(2), 0.5, 1.0);
  const auto r = train_baseline(c, sys, J);
  EXPECT_LT(r.rows.back().loss_pde, 0.2 * r.rows.front().loss_pde);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3.0, 3.0), ut(-1.0, 0.0);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    Vec x(2);
    x << u(rng), u(rng);
    const double t = ut(rng);
    worst = std::max(worst, std::abs(forward_with_grad(r.net, x, t).value - J.value(x)));
  }
  EXPECT_LT(worst, 0.1);
}

TEST(Programs, SupervisionOnlyFitsSupervisor) {
  auto c = small_config(Program::LssDecay, 400);
  c.sup_batch_size = 256;
  c.lambda_fixed = 0.0;
  c.rho_g = 0.0;
  const auto sys = make_pubsub(pubsub2());
  const auto J = make_pubsub_target(pubsub2());
  const auto sup = untrained_supervisor(c, J);
  auto eval_cfg = c;
  eval_cfg.sup_batch_size = 2000;
  eval_cfg.seed = 12345;
  const auto eval = sample_batch(eval_cfg, 0, BatchMode::Sup);
  const auto before =
      ls_loss(initial_net(c, TrainProblem{make_hamiltonian_fn(sys), J, false}), sup, eval, 1.0, 0.0);
  const auto r = train_lss_decay(c, sys, J, sup);
  const auto after = ls_loss(r.net, sup, eval, 1.0, 0.0);
  EXPECT_LT(after.total, 0.5 * before.total);
  EXPECT_EQ(r.rows.back().loss_pde, 0.0);
}

TEST(Programs, LinearSupervisorPaths) {
  const auto p = pubsub2();
  const auto lin = make_pubsub_linear(p);
  const auto J = make_pubsub_target(p);
  auto c = small_config(Program::LinearSupervisor, 20);
  const auto b = train_linear_supervisor(c, lin, J);
  EXPECT_TRUE(b.completed);
  c.supervisor_path = SupervisorPath::HopfData;
  EXPECT_THROW(train_linear_supervisor(c, lin, J), Error);
  HopfDataset ds;
  ds.x = Mat::Zero(2, 3);
  ds.t = Vec::Zero(3);
  ds.value = Vec::Constant(3, -0.2);
  ds.grad = Mat::Zero(2, 3);
  c.supervisor_pde_weight = 0.0;
  const auto a = train_linear_supervisor(c, lin, J, &ds);
  EXPECT_EQ(a.rows.back().loss_pde, 0.0);
  EXPECT_GT(a.rows.front().loss_ls, 0.0);
}

TEST(Programs, SpectrumNetTakesLambda) {
  const auto p = pubsub2();
  const SpectrumSystem spec{make_pubsub(p), make_pubsub_linear(p)};
  const auto J = make_pubsub_target(p);
  auto c = small_config(Program::LssSpectrum, 10);
  const auto sup = untrained_supervisor(c, J);
  const auto r = train_lss_spectrum(c, spec, J, sup);
  EXPECT_TRUE(r.net.has_lambda);
  // At k = 0 the curriculum samples only t = t_f, where both terms vanish.
  EXPECT_EQ(r.rows.front().loss_ls, 0.0);
  EXPECT_GT(r.rows.back().loss_ls, 0.0);
  EXPECT_GT(r.rows.back().loss_pde, 0.0);
}

TEST(Programs, RejectsMissingSupervisorAndBadConfig) {
  const auto sys = make_pubsub(pubsub2());
  const auto J = make_pubsub_target(pubsub2());
  auto c = small_config(Program::LssDecay, 5);
  EXPECT_THROW(detail::run_program(c, TrainProblem{make_hamiltonian_fn(sys), J, false}, nullptr, {}),
               Error);
  c.lambda_K = 1.5;
  EXPECT_THROW(c.validate(), Error);
  c = small_config(Program::LssDecayAdaptive, 5);
  c.I_start = 1.0;
  c.I_end = 2.0;
  EXPECT_THROW(c.validate(), Error);
  c = small_config(Program::Baseline, 0);
  EXPECT_THROW(c.validate(), Error);
  EXPECT_THROW(program_from_string("nope"), Error);
  EXPECT_EQ(program_from_string("lss_decay_adaptive"), Program::LssDecayAdaptive);
}

TEST(Logs, CsvHeaderAndRows) {
  std::ostringstream os;
  write_metric_csv(os, {MetricRow{3, 0.5, 1.0, 0.25, 0.75, 0.1, 1.0}});
  const auto s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "iter,wall_clock_s,loss_total,loss_pde,loss_ls,lambda_k,s_k");
  EXPECT_NE(s.find("3,0.5,1,0.25,0.75,0.10000000000000001,1"), std::string::npos);
}
