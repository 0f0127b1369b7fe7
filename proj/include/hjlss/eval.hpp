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
#ifndef HJLSS_EVAL_HPP
#define HJLSS_EVAL_HPP

// Value-function adapters, bang-bang policies, batched RK4 rollouts and the
// scoring metrics (IOU, MSE, FP/FN, conformal expansion, recovered volume).

#include "hjlss/levelset.hpp"
#include "hjlss/net.hpp"

#include <limits>
#include <memory>
#include <optional>

namespace hjlss {

// ---------------------------------------------------------------------------
// Value functions
// ---------------------------------------------------------------------------

class ValueFunction {
public:
  virtual ~ValueFunction() = default;
  virtual int state_dim() const = 0;
  /// Values (and gradients when G is non-null) at the columns of X.
  virtual void evaluate(const Mat &X, double t, Vec &V, Mat *G) const = 0;

  double value(const Vec &x, double t) const {
    Vec v;
    evaluate(x, t, v, nullptr);
    return v[0];
  }
  Vec gradient(const Vec &x, double t) const {
    Vec v;
    Mat g;
    evaluate(x, t, v, &g);
    return g.col(0);
  }
};

/// A trained network; spectrum networks are read at a fixed lambda (1 by default).
class NetValueFunction : public ValueFunction {
public:
  explicit NetValueFunction(std::shared_ptr<const SirenValueNet> net, double lambda = 1.0,
                            Eigen::Index chunk = 4096)
      : net_(std::move(net)), lambda_(lambda), chunk_(chunk) {}

  int state_dim() const override { return net_->state_dim; }

  void evaluate(const Mat &X, double t, Vec &V, Mat *G) const override {
    const Eigen::Index B = X.cols();
    V.resize(B);
    if (G) G->resize(X.rows(), B);
    for (Eigen::Index s = 0; s < B; s += chunk_) {
      const Eigen::Index c = std::min(chunk_, B - s);
      NetInput in;
      in.x = X.middleCols(s, c);
      in.t = Vec::Constant(c, t);
      if (net_->has_lambda) in.lambda = Vec::Constant(c, lambda_);
      if (G) {
        const auto out = forward(*net_, in);
        V.segment(s, c) = out.value;
        G->middleCols(s, c) = out.dx;
      } else {
        V.segment(s, c) = forward_value(*net_, in);
      }
    }
  }

  const SirenValueNet &net() const { return *net_; }

private:
  std::shared_ptr<const SirenValueNet> net_;
  double lambda_;
  Eigen::Index chunk_;
};

/// Composed grid oracle. With `clamp` set, queries are projected onto the
/// grid bounds (used for policies along rollouts that leave the grid).
class OracleValueFunction : public ValueFunction {
public:
  explicit OracleValueFunction(ComposedOracle oracle, bool clamp = false)
      : oracle_(std::move(oracle)), clamp_(clamp) {
    oracle_.validate();
  }

  int state_dim() const override { return oracle_.state_dim(); }

  void evaluate(const Mat &X, double t, Vec &V, Mat *G) const override {
    const Eigen::Index B = X.cols();
    V.resize(B);
    if (G) G->resize(X.rows(), B);
    const auto &bx = oracle_.parts.front()->bounds;
    const double tlo = oracle_.parts.front()->times.front();
    const double thi = oracle_.parts.front()->times.back();
    const double tq = clamp_ ? std::clamp(t, tlo, thi) : t;
#pragma omp parallel for schedule(static)
    for (Eigen::Index c = 0; c < B; ++c) {
      Vec x = X.col(c);
      if (clamp_)
        for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], bx.lo[0], bx.hi[0]);
      V[c] = compose_value(oracle_, x, tq);
      if (G) G->col(c) = compose_gradient(oracle_, x, tq);
    }
  }

  const ComposedOracle &oracle() const { return oracle_; }

private:
  ComposedOracle oracle_;
  bool clamp_;
};

/// Analytic value and gradient callbacks.
class FunctionValue : public ValueFunction {
public:
  using ValueFn = std::function<double(const Vec &, double)>;
  using GradFn = std::function<Vec(const Vec &, double)>;
  FunctionValue(int n, ValueFn v, GradFn g = {}) : n_(n), v_(std::move(v)), g_(std::move(g)) {}

  int state_dim() const override { return n_; }

  void evaluate(const Mat &X, double t, Vec &V, Mat *G) const override {
    V.resize(X.cols());
    if (G) {
      if (!g_) throw Error("FunctionValue: no gradient callback");
      G->resize(X.rows(), X.cols());
    }
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
      V[c] = v_(X.col(c), t);
      if (G) G->col(c) = g_(X.col(c), t);
    }
  }

private:
  int n_;
  ValueFn v_;
  GradFn g_;
};

/// The target cost J as a (time-independent) value function.
inline FunctionValue target_value(const QuadraticTarget &J) {
  return FunctionValue(
      J.dim(), [J](const Vec &x, double) { return J.value(x); },
      [J](const Vec &x, double) { return J.gradient(x); });
}

// ---------------------------------------------------------------------------
// Policy
// ---------------------------------------------------------------------------

struct PolicyAction {
  Vec u;
  Vec d;
  bool degenerate = false; // some switching function was exactly zero
};

/// Bang-bang extremal inputs from the value gradient p. The control takes
/// sigma_u * bound * sign(B1^T p) and the disturbance sigma_d * bound *
/// sign(B2^T p), so <p, f(x, u, d)> equals the Hamiltonian. A zero switching
/// function resolves to the positive bound and marks the action degenerate.
inline PolicyAction policy_from_gradient(const AffineInputSystem &sys, const Vec &p, double t) {
  detail::require_dim(p, sys.state_dim, "policy(p)");
  PolicyAction a;
  const double su = control_sign(sys.objective), sd = disturbance_sign(sys.objective);
  a.u = Vec::Zero(sys.control_dim);
  a.d = Vec::Zero(sys.disturb_dim);
  if (sys.control_dim > 0) {
    const Vec s = sys.B1(t).transpose() * p;
    for (int j = 0; j < sys.control_dim; ++j) {
      if (s[j] == 0.0) {
        a.u[j] = sys.control_bound[j];
        a.degenerate = true;
      } else {
        a.u[j] = su * sys.control_bound[j] * (s[j] > 0 ? 1.0 : -1.0);
      }
    }
  }
  if (sys.disturb_dim > 0) {
    const Vec s = sys.B2(t).transpose() * p;
    for (int j = 0; j < sys.disturb_dim; ++j) {
      if (s[j] == 0.0) {
        a.d[j] = sys.disturb_bound[j];
        a.degenerate = true;
      } else {
        a.d[j] = sd * sys.disturb_bound[j] * (s[j] > 0 ? 1.0 : -1.0);
      }
    }
  }
  return a;
}

inline PolicyAction extract_policy(const ValueFunction &vf, const AffineInputSystem &sys,
                                   const Vec &x, double t) {
  return policy_from_gradient(sys, vf.gradient(x, t), t);
}

// ---------------------------------------------------------------------------
// Rollouts
// ---------------------------------------------------------------------------

struct RolloutConfig {
  double dt = 0.01;
  double t_f = 0.0;
  bool keep_states = false;
  std::optional<Box> escape_box; // truncate when a state leaves this box
};

struct Rollout {
  Mat states;        // n x (steps+1), only when keep_states
  Mat controls;      // n_u x steps, only when keep_states
  Mat disturbances;  // n_d x steps, only when keep_states
  Vec final_state;
  double min_cost = 0.0;      // min over visited states of J
  double terminal_cost = 0.0; // J at the last state
  int steps = 0;
  bool success = false;       // Reach: min J <= 0. Avoid: J >= 0 at every step
  bool escaped = false;
  bool degenerate_policy = false;
};

namespace detail {

inline Vec rk4_hold(const AffineInputSystem &sys, const Vec &x, const Vec &u, const Vec &d,
                    double t, double h) {
  auto f = [&](const Vec &y, double s) {
    Vec out = sys.drift(y, s);
    if (sys.control_dim > 0) out += sys.B1(s) * u;
    if (sys.disturb_dim > 0) out += sys.B2(s) * d;
    return out;
  };
  const Vec k1 = f(x, t);
  const Vec k2 = f(x + 0.5 * h * k1, t + 0.5 * h);
  const Vec k3 = f(x + 0.5 * h * k2, t + 0.5 * h);
  const Vec k4 = f(x + h * k3, t + h);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

} // namespace detail

/// Closed-loop RK4 rollouts of every column of X0 from t0 to t_f under the
/// extremal policies of `vf`, with zero-order hold over each step. The
/// policy is evaluated for all live rollouts in one batch per step.
inline std::vector<Rollout> rollout_batch(const AffineInputSystem &sys, const ValueFunction &vf,
                                          const QuadraticTarget &target, const Mat &X0,
                                          double t0, const RolloutConfig &cfg) {
  sys.validate();
  if (X0.rows() != sys.state_dim || vf.state_dim() != sys.state_dim)
    throw DimensionError("rollout: state dimension mismatch");
  if (!(cfg.dt > 0.0)) throw Error("rollout: dt must be positive");
  if (!(t0 <= cfg.t_f)) throw Error("rollout: t0 must not exceed t_f");
  const int steps = static_cast<int>(std::llround((cfg.t_f - t0) / cfg.dt));
  const double h = steps > 0 ? (cfg.t_f - t0) / steps : 0.0;
  const Eigen::Index B = X0.cols();
  const bool avoid = sys.objective == Objective::Avoid;

  std::vector<Rollout> out(static_cast<std::size_t>(B));
  Mat X = X0;
  std::vector<char> live(static_cast<std::size_t>(B), 1);
  for (Eigen::Index c = 0; c < B; ++c) {
    auto &r = out[static_cast<std::size_t>(c)];
    r.min_cost = target.value(X.col(c));
    if (cfg.keep_states) {
      r.states.resize(sys.state_dim, steps + 1);
      r.states.col(0) = X.col(c);
      r.controls.resize(sys.control_dim, steps);
      r.disturbances.resize(sys.disturb_dim, steps);
    }
  }

  std::vector<Eigen::Index> idx;
  for (int k = 0; k < steps; ++k) {
    const double t = t0 + k * h;
    idx.clear();
    for (Eigen::Index c = 0; c < B; ++c)
      if (live[static_cast<std::size_t>(c)]) idx.push_back(c);
    if (idx.empty()) break;
    Mat Xl(sys.state_dim, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) Xl.col(static_cast<Eigen::Index>(i)) = X.col(idx[i]);
    Vec V;
    Mat G;
    vf.evaluate(Xl, t, V, &G);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const Eigen::Index c = idx[i];
      auto &r = out[static_cast<std::size_t>(c)];
      const auto a = policy_from_gradient(sys, G.col(static_cast<Eigen::Index>(i)), t);
      r.degenerate_policy = r.degenerate_policy || a.degenerate;
      const Vec xn = detail::rk4_hold(sys, X.col(c), a.u, a.d, t, h);
      if (cfg.keep_states) {
        r.controls.col(k) = a.u;
        r.disturbances.col(k) = a.d;
        r.states.col(k + 1) = xn;
      }
      r.steps = k + 1;
      if (!xn.allFinite() || (cfg.escape_box && !cfg.escape_box->contains(xn))) {
        r.escaped = true;
        live[static_cast<std::size_t>(c)] = 0;
        if (!xn.allFinite()) continue;
      }
      X.col(c) = xn;
      r.min_cost = std::min(r.min_cost, target.value(xn));
    }
  }
  for (Eigen::Index c = 0; c < B; ++c) {
    auto &r = out[static_cast<std::size_t>(c)];
    r.final_state = X.col(c);
    r.terminal_cost = target.value(r.final_state);
    if (cfg.keep_states && r.steps < steps) {
      r.states.conservativeResize(Eigen::NoChange, r.steps + 1);
      r.controls.conservativeResize(Eigen::NoChange, r.steps);
      r.disturbances.conservativeResize(Eigen::NoChange, r.steps);
    }
    r.success = avoid ? r.min_cost >= 0.0 : r.min_cost <= 0.0;
  }
  return out;
}

inline Rollout rollout(const AffineInputSystem &sys, const ValueFunction &vf,
                       const QuadraticTarget &target, const Vec &x0, double t0,
                       const RolloutConfig &cfg) {
  return rollout_batch(sys, vf, target, x0, t0, cfg).front();
}

// ---------------------------------------------------------------------------
// Sample sets
// ---------------------------------------------------------------------------

inline Mat uniform_samples(const Box &box, Eigen::Index count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Mat X(box.dim(), count);
  for (Eigen::Index c = 0; c < count; ++c)
    for (int i = 0; i < box.dim(); ++i)
      X(i, c) = box.lo[i] + (box.hi[i] - box.lo[i]) * unit(rng);
  return X;
}

/// Publisher-subscriber states (x0, y, ..., y) with (x0, y) uniform over the
/// first two axes of `box`: the plane in which every 2-D part coincides.
inline Mat diagonal_samples(const Box &box, Eigen::Index count, std::uint64_t seed) {
  if (box.dim() < 2) throw DimensionError("diagonal_samples: need at least 2 dimensions");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Mat X(box.dim(), count);
  for (Eigen::Index c = 0; c < count; ++c) {
    X(0, c) = box.lo[0] + (box.hi[0] - box.lo[0]) * unit(rng);
    const double y = box.lo[1] + (box.hi[1] - box.lo[1]) * unit(rng);
    for (int i = 1; i < box.dim(); ++i) X(i, c) = y;
  }
  return X;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// IOU of the sub-zero sets {V <= 0} over the sample columns. Two empty sets
/// score 1.
inline double iou(const ValueFunction &a, const ValueFunction &b, const Mat &X, double t) {
  Vec va, vb;
  a.evaluate(X, t, va, nullptr);
  b.evaluate(X, t, vb, nullptr);
  Eigen::Index inter = 0, uni = 0;
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const bool ia = va[c] <= 0.0, ib = vb[c] <= 0.0;
    inter += ia && ib;
    uni += ia || ib;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

struct MseResult {
  double value = 0.0;
  double grad = 0.0;
};

/// Mean squared value error and mean squared gradient-vector error.
inline MseResult mse_metrics(const ValueFunction &a, const ValueFunction &b, const Mat &X,
                             double t) {
  if (X.cols() == 0) throw Error("mse_metrics: empty sample set");
  Vec va, vb;
  Mat ga, gb;
  a.evaluate(X, t, va, &ga);
  b.evaluate(X, t, vb, &gb);
  MseResult r;
  r.value = (va - vb).squaredNorm() / static_cast<double>(X.cols());
  r.grad = (ga - gb).colwise().squaredNorm().sum() / static_cast<double>(X.cols());
  return r;
}

struct ClassificationRecord {
  double predicted_value = 0.0;
  bool predicted_good = false; // Avoid: V >= 0 (safe). Reach: V <= 0 (reachable)
  bool empirical_good = false; // rollout outcome
  double min_cost = 0.0;
  bool escaped = false;
};

struct RateResult {
  double fp = 0.0; // predicted good, empirically bad
  double fn = 0.0; // predicted bad, empirically good
  Eigen::Index count = 0;
  std::vector<ClassificationRecord> records;
};

/// Classifies each sample by the sign of `pred` and by a rollout under the
/// policy of `policy` (usually the same function).
inline RateResult fp_fn_rates(const ValueFunction &pred, const ValueFunction &policy,
                              const AffineInputSystem &sys, const QuadraticTarget &target,
                              const Mat &X, double t, const RolloutConfig &rc) {
  if (X.cols() == 0) throw Error("fp_fn_rates: empty sample set");
  Vec V;
  pred.evaluate(X, t, V, nullptr);
  const auto rolls = rollout_batch(sys, policy, target, X, t, rc);
  const bool avoid = sys.objective == Objective::Avoid;
  RateResult r;
  r.count = X.cols();
  Eigen::Index fp = 0, fn = 0;
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    ClassificationRecord rec;
    rec.predicted_value = V[c];
    rec.predicted_good = avoid ? V[c] >= 0.0 : V[c] <= 0.0;
    rec.empirical_good = rolls[static_cast<std::size_t>(c)].success;
    rec.min_cost = rolls[static_cast<std::size_t>(c)].min_cost;
    rec.escaped = rolls[static_cast<std::size_t>(c)].escaped;
    fp += rec.predicted_good && !rec.empirical_good;
    fn += !rec.predicted_good && rec.empirical_good;
    r.records.push_back(rec);
  }
  r.fp = static_cast<double>(fp) / static_cast<double>(r.count);
  r.fn = static_cast<double>(fn) / static_cast<double>(r.count);
  return r;
}

struct ConformalResult {
  double delta = -std::numeric_limits<double>::infinity();
  bool sentinel = true;            // no empirically unsafe calibration state
  Eigen::Index calibration = 0;
  Eigen::Index unsafe = 0;
  Eigen::Index false_safe_after = 0; // unsafe states with V > delta
  double coverage_bound = 0.0;       // m/(m+1) for m exchangeable unsafe states
  double epsilon_999 = 1.0;          // miss rate bound holding with 99.9% confidence
};

/// delta = max V over empirically unsafe calibration states, so every such
/// state lies in R_delta = {V <= delta}.
inline ConformalResult conformal_delta(const std::vector<double> &values,
                                       const std::vector<bool> &unsafe) {
  if (values.size() != unsafe.size()) throw DimensionError("conformal_delta: size mismatch");
  ConformalResult r;
  r.calibration = static_cast<Eigen::Index>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!unsafe[i]) continue;
    ++r.unsafe;
    r.delta = std::max(r.delta, values[i]);
    r.sentinel = false;
  }
  for (std::size_t i = 0; i < values.size(); ++i)
    if (unsafe[i] && values[i] > r.delta) ++r.false_safe_after;
  if (r.unsafe > 0) {
    const double m = static_cast<double>(r.unsafe);
    r.coverage_bound = m / (m + 1.0);
    r.epsilon_999 = 1.0 - std::pow(1e-3, 1.0 / m);
  } else {
    warn("conformal_delta: no empirically unsafe calibration state; delta = -inf");
  }
  return r;
}

/// Calibration from rollouts: Avoid failures are the unsafe states.
inline ConformalResult conformal_delta(const RateResult &calibration) {
  std::vector<double> v;
  std::vector<bool> u;
  for (const auto &rec : calibration.records) {
    v.push_back(rec.predicted_value);
    u.push_back(!rec.empirical_good);
  }
  return conformal_delta(v, u);
}

/// Fraction of samples outside R_delta, i.e. with V > delta.
inline double recovered_volume(const ValueFunction &vf, double delta, const Mat &X, double t) {
  if (X.cols() == 0) throw Error("recovered_volume: empty sample set");
  Vec V;
  vf.evaluate(X, t, V, nullptr);
  return static_cast<double>((V.array() > delta).count()) / static_cast<double>(X.cols());
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct MetricsReport {
  std::optional<double> iou;
  std::optional<double> mse_value;
  std::optional<double> mse_grad;
  std::optional<double> fp_rate;
  std::optional<double> fn_rate;
  std::optional<double> delta;
  std::optional<double> recovered_volume;
  std::map<std::string, std::int64_t> counts;
  double eval_time = 0.0;
  double wall_clock_s = 0.0;
  std::string objective;
  std::string config_hash;
  std::vector<std::string> notes;

  json to_json() const {
    auto opt = [](const std::optional<double> &v) -> json {
      if (!v) return nullptr;
      if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
      return *v;
    };
    json j;
    j["iou"] = opt(iou);
    j["mse_value"] = opt(mse_value);
    j["mse_grad"] = opt(mse_grad);
    j["fp_rate"] = opt(fp_rate);
    j["fn_rate"] = opt(fn_rate);
    j["delta"] = opt(delta);
    j["recovered_volume"] = opt(recovered_volume);
    j["counts"] = counts;
    j["eval_time"] = eval_time;
    j["wall_clock_s"] = wall_clock_s;
    j["objective"] = objective;
    j["sign_convention"] = objective == "avoid" ? "V < 0 approximates the unsafe set"
                                                : "V <= 0 approximates the reachable set";
    j["config_hash"] = config_hash;
    j["notes"] = notes;
    return j;
  }
};

} // namespace hjlss

#endif // HJLSS_EVAL_HPP
