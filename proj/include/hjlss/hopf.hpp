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
#ifndef HJLSS_HOPF_HPP
#define HJLSS_HOPF_HPP

// Linear-game values from the Hopf formula.
//
// For l(x,u,d,t) = A x + B1 u + B2 d + c and a horizon h = t_f - tau,
//
//   V_h(x) = -min_p { J*(p) - <Phi(h) x + C(h), p> - int_0^h H_l(p, s) ds }
//
// where H_l(p, s) = min_u max_d <p, Phi(s)(B1 u + B2 d)> is the game
// Hamiltonian transported by the fundamental matrix and C(h) collects the
// affine offset. The minimum-over-time value is min over tau of V_h.

#include "hjlss/dynamics.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <fstream>
#include <optional>
#include <random>
#include <sstream>

namespace hjlss {

/// Phi(s) with Phi' = A Phi, Phi(0) = I. Constant A uses the matrix exponential
/// (scaling and squaring); otherwise RK4 with at least 64 steps.
inline Mat fundamental_matrix(const LinearTVSystem &lin, double s,
                              double t_final = 0.0) {
  if (s < 0.0) throw Error("fundamental_matrix: s must be >= 0");
  const int n = lin.state_dim;
  Mat phi;
  if (s == 0.0) {
    phi = Mat::Identity(n, n);
  } else if (lin.time_invariant) {
    const Mat As = lin.A_at(t_final) * s;
    phi = As.exp();
  } else {
    const int steps = 64;
    const double h = s / steps;
    phi = Mat::Identity(n, n);
    // Backward time sigma maps to real time t_final - sigma.
    for (int k = 0; k < steps; ++k) {
      const double s0 = k * h;
      const Mat k1 = lin.A_at(t_final - s0) * phi;
      const Mat k2 = lin.A_at(t_final - s0 - 0.5 * h) * (phi + 0.5 * h * k1);
      const Mat k3 = lin.A_at(t_final - s0 - 0.5 * h) * (phi + 0.5 * h * k2);
      const Mat k4 = lin.A_at(t_final - s0 - h) * (phi + h * k3);
      phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  if (!phi.allFinite()) throw Error("fundamental_matrix: non-finite entries");
  return phi;
}

struct HopfSolverOptions {
  int restarts = 4;
  int max_iters = 400;
  double step_c = 1.0;
  double tol = 1e-3;
  std::uint64_t seed = 0;
};

/// Additive error player with ||eps|| <= delta(t); sign +1 antagonizes the
/// controller, -1 assists it.
struct ErrorTerm {
  double sign = 1.0;
  DeltaProfile delta;
};

struct HopfProblem {
  LinearTVSystem linear;
  QuadraticTarget target;
  int n_tau = 16;
  int quad_nodes = 64;
  HopfSolverOptions solver;
  double t_final = 0.0;
  std::optional<ErrorTerm> error;

  void validate() const {
    if (target.dim() != linear.state_dim)
      throw DimensionError("HopfProblem: target/system dimension mismatch");
    if (quad_nodes < 2) throw Error("HopfProblem: quad_nodes must be >= 2");
    if (n_tau < 1) throw Error("HopfProblem: n_tau must be >= 1");
    if (solver.restarts < 1) throw Error("HopfProblem: restarts must be >= 1");
    target.validate_for_conjugate();
  }

  /// Candidate start times, uniform on [t, t_final], ascending.
  std::vector<double> tau_grid(double t) const {
    std::vector<double> g(n_tau);
    for (int i = 0; i < n_tau; ++i)
      g[i] = n_tau == 1 ? t : std::min(t_final, t + (t_final - t) * i / (n_tau - 1));
    return g;
  }
};

struct HopfSolution {
  double value = 0.0;
  Vec p_star;
  double tau_star = 0.0;
  Vec spatial_grad;
  std::vector<double> objective_trace; // best objective of every start at tau*
  double restart_dispersion = 0.0;
  bool flagged = false;
};

namespace detail {

/// Everything the Hopf objective needs for one horizon h, with the trapezoid
/// weights already folded into the coefficients.
struct HopfHorizon {
  double h = 0.0;
  Mat phi_h;              // Phi(h)
  Vec offset_integral;    // int_0^h Phi(s) c(t_f - s) ds
  Mat M;                  // transported input directions, one per column
  Vec gamma;              // objective coefficients of |M^T p|
  std::vector<Mat> phi_nodes;
  Vec error_coef;         // objective coefficients of ||Phi_k^T p||
  bool smooth = true;     // no nonsmooth terms at all
};

/// Input columns of [B1 B2] with their Hamiltonian coefficients; identical
/// columns are merged so that exactly cancelling control and disturbance
/// authority drops out.
inline void merged_input_columns(const LinearTVSystem &lin, double t,
                                 Mat &cols, Vec &coef) {
  const Mat B1 = lin.B1_at(t), B2 = lin.B2_at(t);
  std::vector<Vec> cs;
  std::vector<double> ks;
  auto add = [&](const Vec &col, double k) {
    if (col.isZero(0.0) || k == 0.0) return;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      if (cs[i] == col) { ks[i] += k; return; }
    }
    cs.push_back(col);
    ks.push_back(k);
  };
  for (Eigen::Index j = 0; j < B1.cols(); ++j)
    add(B1.col(j), control_sign(lin.objective) * lin.control_bound[j]);
  for (Eigen::Index j = 0; j < B2.cols(); ++j)
    add(B2.col(j), disturbance_sign(lin.objective) * lin.disturb_bound[j]);
  std::size_t keep = 0;
  for (std::size_t i = 0; i < cs.size(); ++i)
    if (ks[i] != 0.0) ++keep;
  cols.resize(lin.state_dim, static_cast<Eigen::Index>(keep));
  coef.resize(static_cast<Eigen::Index>(keep));
  Eigen::Index c = 0;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (ks[i] == 0.0) continue;
    cols.col(c) = cs[i];
    coef[c] = ks[i];
    ++c;
  }
}

inline HopfHorizon build_horizon(const HopfProblem &prob, double h) {
  const LinearTVSystem &lin = prob.linear;
  const int n = lin.state_dim;
  const int K = prob.quad_nodes;
  HopfHorizon hz;
  hz.h = h;
  hz.phi_h = fundamental_matrix(lin, h, prob.t_final);

  const double ds = h / (K - 1);
  std::vector<Mat> phis(K);
  phis[0] = Mat::Identity(n, n);
  if (h > 0.0) {
    if (lin.time_invariant) {
      const Mat step = fundamental_matrix(lin, ds, prob.t_final);
      for (int k = 1; k < K; ++k) phis[k] = step * phis[k - 1];
    } else {
      for (int k = 1; k < K; ++k)
        phis[k] = fundamental_matrix(lin, k * ds, prob.t_final);
    }
  } else {
    for (int k = 1; k < K; ++k) phis[k] = phis[0];
  }

  std::vector<Mat> blocks;
  std::vector<Vec> coefs;
  hz.offset_integral = Vec::Zero(n);
  Mat cols0;
  Vec coef0;
  if (lin.time_invariant) merged_input_columns(lin, prob.t_final, cols0, coef0);
  for (int k = 0; k < K; ++k) {
    const double w = (k == 0 || k == K - 1) ? 0.5 * ds : ds;
    const double t_k = prob.t_final - k * ds;
    Mat cols;
    Vec coef;
    if (lin.time_invariant) {
      cols = cols0;
      coef = coef0;
    } else {
      merged_input_columns(lin, t_k, cols, coef);
    }
    if (w > 0.0) {
      if (lin.affine_offset) hz.offset_integral += w * (phis[k] * lin.offset_at(t_k));
      if (cols.cols() > 0) {
        blocks.push_back(phis[k] * cols);
        // The objective carries -int H, hence the minus sign.
        coefs.push_back(-w * coef);
      }
    }
  }
  Eigen::Index total = 0;
  for (const auto &b : blocks) total += b.cols();
  hz.M.resize(n, total);
  hz.gamma.resize(total);
  Eigen::Index c = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    hz.M.middleCols(c, blocks[i].cols()) = blocks[i];
    hz.gamma.segment(c, blocks[i].cols()) = coefs[i];
    c += blocks[i].cols();
  }

  if (prob.error && h > 0.0) {
    hz.error_coef = Vec::Zero(K);
    hz.phi_nodes = phis;
    for (int k = 0; k < K; ++k) {
      const double w = (k == 0 || k == K - 1) ? 0.5 * ds : ds;
      const double delta = prob.error->delta(prob.t_final - k * ds);
      if (delta < 0.0) throw Error("error term: delta must be >= 0");
      hz.error_coef[k] = -w * prob.error->sign * delta;
    }
  }
  hz.smooth = hz.M.cols() == 0 && hz.error_coef.size() == 0;
  return hz;
}

inline double conjugate_unchecked(const QuadraticTarget &tg, const Vec &p) {
  double acc = 0.0;
  for (int i = 0; i < tg.dim(); ++i)
    if (tg.active[i]) acc += p[i] * p[i] / tg.weights[i];
  return 0.5 * acc + tg.offset;
}

inline double horizon_objective(const HopfProblem &prob, const HopfHorizon &hz,
                                const Vec &y, const Vec &p) {
  double f = conjugate_unchecked(prob.target, p) - y.dot(p);
  if (hz.M.cols() > 0) f += hz.gamma.dot((hz.M.transpose() * p).cwiseAbs());
  for (Eigen::Index k = 0; k < hz.error_coef.size(); ++k)
    if (hz.error_coef[k] != 0.0)
      f += hz.error_coef[k] * (hz.phi_nodes[k].transpose() * p).norm();
  return f;
}

/// Subgradient of everything except J* (which is handled by its prox).
inline Vec nonsmooth_subgradient(const HopfHorizon &hz, const Vec &y,
                                 const Vec &p) {
  Vec g = -y;
  if (hz.M.cols() > 0) {
    const Vec s = hz.M.transpose() * p;
    Vec w(s.size());
    for (Eigen::Index j = 0; j < s.size(); ++j)
      w[j] = s[j] > 0 ? hz.gamma[j] : (s[j] < 0 ? -hz.gamma[j] : 0.0);
    g += hz.M * w;
  }
  for (Eigen::Index k = 0; k < hz.error_coef.size(); ++k) {
    if (hz.error_coef[k] == 0.0) continue;
    const Vec q = hz.phi_nodes[k].transpose() * p;
    const double nq = q.norm();
    if (nq > 0.0) g += (hz.error_coef[k] / nq) * (hz.phi_nodes[k] * q);
  }
  return g;
}

inline void prox_conjugate(const QuadraticTarget &tg, double eta, Vec &v) {
  for (int i = 0; i < tg.dim(); ++i)
    v[i] = tg.active[i] ? v[i] / (1.0 + eta / tg.weights[i]) : 0.0;
}

struct InnerResult {
  double best = std::numeric_limits<double>::infinity();
  Vec p;
  std::vector<double> start_bests;
  bool flagged = false;
};

/// min_p of the objective at a fixed horizon by proximal subgradient descent
/// with steps c / sqrt(k) from several starts.
inline InnerResult minimize_costate(const HopfProblem &prob,
                                    const HopfHorizon &hz, const Vec &x,
                                    const Vec &y, const std::vector<Vec> &starts) {
  InnerResult out;
  const QuadraticTarget &tg = prob.target;
  if (hz.smooth) {
    Vec p(tg.dim());
    for (int i = 0; i < tg.dim(); ++i)
      p[i] = tg.active[i] ? tg.weights[i] * y[i] : 0.0;
    out.best = horizon_objective(prob, hz, y, p);
    out.p = p;
    out.start_bests.assign(starts.size(), out.best);
    return out;
  }
  const double c = prob.solver.step_c * (1.0 + x.norm());
  const int iters = prob.solver.max_iters;
  const int window = std::max(1, iters / 10);
  double win_spread = 0.0;
  for (const Vec &p0 : starts) {
    Vec p = p0;
    prox_conjugate(tg, 0.0, p);
    double best = horizon_objective(prob, hz, y, p);
    Vec best_p = p;
    double wmin = std::numeric_limits<double>::infinity(), wmax = -wmin;
    for (int k = 1; k <= iters; ++k) {
      const double eta = c / std::sqrt(static_cast<double>(k));
      Vec v = p - eta * nonsmooth_subgradient(hz, y, p);
      prox_conjugate(tg, eta, v);
      p = std::move(v);
      const double f = horizon_objective(prob, hz, y, p);
      if (f < best) { best = f; best_p = p; }
      if (k > iters - window) {
        wmin = std::min(wmin, f);
        wmax = std::max(wmax, f);
      }
    }
    out.start_bests.push_back(best);
    if (best < out.best) {
      out.best = best;
      out.p = best_p;
      win_spread = wmax - wmin;
    }
  }
  out.flagged = !(win_spread <= prob.solver.tol * (1.0 + std::abs(out.best)));
  return out;
}

} // namespace detail

/// The Hopf objective J*(p) - <Phi(t_f - tau) x + C, p> - int_0^{t_f - tau} H_l.
inline double hopf_objective(const HopfProblem &prob, const Vec &x, double tau,
                             const Vec &p) {
  prob.validate();
  detail::require_dim(x, prob.linear.state_dim, "hopf_objective(x)");
  detail::require_dim(p, prob.linear.state_dim, "hopf_objective(p)");
  if (tau > prob.t_final) throw Error("hopf_objective: tau after t_final");
  const double jstar = convex_conjugate(prob.target, p);
  if (!std::isfinite(jstar)) return jstar;
  const auto hz = detail::build_horizon(prob, prob.t_final - tau);
  const Vec y = hz.phi_h * x + hz.offset_integral;
  return detail::horizon_objective(prob, hz, y, p);
}

/// Minimum-over-time linear value, its minimizers and spatial gradient.
inline HopfSolution hopf_solve(const HopfProblem &prob, const Vec &x, double t) {
  prob.validate();
  detail::require_dim(x, prob.linear.state_dim, "hopf_solve(x)");
  if (t > prob.t_final) throw Error("hopf_solve: t must not exceed t_final");
  const QuadraticTarget &tg = prob.target;
  const Vec gJ = tg.gradient(x);

  std::mt19937_64 rng(prob.solver.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double spread = 0.5 * (1.0 + gJ.norm());
  std::vector<Vec> random_starts;
  for (int r = 1; r < prob.solver.restarts; ++r) {
    Vec p = gJ;
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] += spread * normal(rng);
    random_starts.push_back(p);
  }

  HopfSolution sol;
  double best_inner = -std::numeric_limits<double>::infinity();
  Vec warm;
  for (double tau : prob.tau_grid(t)) {
    const auto hz = detail::build_horizon(prob, prob.t_final - tau);
    const Vec y = hz.phi_h * x + hz.offset_integral;
    std::vector<Vec> starts{gJ};
    if (warm.size()) starts.push_back(warm);
    starts.insert(starts.end(), random_starts.begin(), random_starts.end());
    auto inner = detail::minimize_costate(prob, hz, x, y, starts);
    warm = inner.p;
    // Largest inner minimum = smallest value over start times.
    if (inner.best > best_inner) {
      best_inner = inner.best;
      sol.value = -inner.best;
      sol.p_star = inner.p;
      sol.tau_star = tau;
      sol.spatial_grad = hz.phi_h.transpose() * inner.p;
      sol.objective_trace = inner.start_bests;
      sol.flagged = inner.flagged;
      auto [mn, mx] = std::minmax_element(inner.start_bests.begin(),
                                          inner.start_bests.end());
      sol.restart_dispersion = *mx - *mn;
    }
  }
  return sol;
}

/// H_l(p, s) +/- delta(t_f - s) ||Phi(s)^T p|| in game convention.
class ErrorHamiltonian {
public:
  ErrorHamiltonian(HopfProblem prob, DeltaProfile delta, double sign)
      : prob_(std::move(prob)), delta_(std::move(delta)), sign_(sign) {}

  double operator()(const Vec &p, double s) const {
    const Mat phi = fundamental_matrix(prob_.linear, s, prob_.t_final);
    const double t = prob_.t_final - s;
    Mat cols;
    Vec coef;
    detail::merged_input_columns(prob_.linear, t, cols, coef);
    double h = p.dot(phi * prob_.linear.offset_at(t));
    if (cols.cols() > 0)
      h += coef.dot(((phi * cols).transpose() * p).cwiseAbs());
    return h + sign_ * delta_(t) * (phi.transpose() * p).norm();
  }

private:
  HopfProblem prob_;
  DeltaProfile delta_;
  double sign_;
};

inline ErrorHamiltonian error_hamiltonian(const HopfProblem &prob,
                                          const DeltaProfile &delta,
                                          double sign) {
  return ErrorHamiltonian(prob, delta, sign >= 0 ? 1.0 : -1.0);
}

struct ValueGap {
  double epsilon = 0.0; // upper - lower
  double upper = 0.0;   // error player antagonizing
  double lower = 0.0;   // error player assisting
  bool flagged = false;
};

/// eps* = Hopf value with the antagonizing error player minus the value with
/// the assisting one.
inline ValueGap value_gap_bound(const HopfProblem &prob, const Vec &x, double t,
                                const DeltaProfile &delta) {
  HopfProblem plus = prob, minus = prob;
  plus.error = ErrorTerm{1.0, delta};
  minus.error = ErrorTerm{-1.0, delta};
  const auto up = hopf_solve(plus, x, t);
  const auto lo = hopf_solve(minus, x, t);
  ValueGap g;
  g.upper = up.value;
  g.lower = lo.value;
  g.epsilon = up.value - lo.value;
  g.flagged = up.flagged || lo.flagged;
  if (g.flagged) warn("value_gap_bound: Hopf solver flagged non-convergence");
  return g;
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

struct TimeSampler {
  enum class Kind { Fixed, Uniform } kind = Kind::Uniform;
  double fixed_t = -1.0;
  double horizon = 1.0; // Uniform draws t in [-horizon, 0]
};

struct HopfDataset {
  Mat x;    // n x rows
  Vec t;
  Vec value;
  Mat grad; // n x rows
  std::vector<bool> flagged;
  bool low_quality = false;
  std::uint64_t seed = 0;

  Eigen::Index rows() const { return t.size(); }
  double flagged_fraction() const {
    if (flagged.empty()) return 0.0;
    return static_cast<double>(std::count(flagged.begin(), flagged.end(), true)) /
           static_cast<double>(flagged.size());
  }
};

/// Solver seed used for row i of a dataset generated with `seed`.
inline std::uint64_t dataset_row_solver_seed(std::uint64_t seed, std::uint64_t i) {
  return derive_seed(seed, i, 1);
}

/// Draws row i's (x, t) exactly as generate_hopf_dataset does.
inline std::pair<Vec, double> dataset_row_point(const Box &domain,
                                                const TimeSampler &ts,
                                                std::uint64_t seed,
                                                std::uint64_t i) {
  std::mt19937_64 rng(derive_seed(seed, i, 0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec x(domain.dim());
  for (int k = 0; k < domain.dim(); ++k)
    x[k] = domain.lo[k] + (domain.hi[k] - domain.lo[k]) * unit(rng);
  const double t = ts.kind == TimeSampler::Kind::Fixed ? ts.fixed_t
                                                        : -ts.horizon * unit(rng);
  return {x, t};
}

inline HopfDataset generate_hopf_dataset(const HopfProblem &prob,
                                         const Box &domain, int n_points,
                                         const TimeSampler &ts,
                                         std::uint64_t seed) {
  if (n_points < 0) throw Error("generate_hopf_dataset: n_points < 0");
  if (domain.dim() != prob.linear.state_dim)
    throw DimensionError("generate_hopf_dataset: domain dimension");
  prob.validate();
  const int n = prob.linear.state_dim;
  HopfDataset ds;
  ds.seed = seed;
  ds.x.resize(n, n_points);
  ds.t.resize(n_points);
  ds.value.resize(n_points);
  ds.grad.resize(n, n_points);
  ds.flagged.assign(n_points, false);
  std::vector<char> flags(n_points, 0);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n_points; ++i) {
    auto [x, t] = dataset_row_point(domain, ts, seed, static_cast<std::uint64_t>(i));
    HopfProblem local = prob;
    local.solver.seed = dataset_row_solver_seed(seed, static_cast<std::uint64_t>(i));
    const auto sol = hopf_solve(local, x, t);
    ds.x.col(i) = x;
    ds.t[i] = t;
    ds.value[i] = sol.value;
    ds.grad.col(i) = sol.spatial_grad;
    flags[i] = sol.flagged ? 1 : 0;
  }
  for (int i = 0; i < n_points; ++i) ds.flagged[i] = flags[i] != 0;
  ds.low_quality = ds.flagged_fraction() > 0.10;
  if (ds.low_quality)
    warn("Hopf dataset: more than 10% of rows flagged; marked low-quality");
  return ds;
}

/// Hopf values at the given states (columns of X), all at time t.
inline HopfDataset hopf_dataset_at(const HopfProblem &prob, const Mat &X, double t,
                                   std::uint64_t seed) {
  if (X.rows() != prob.linear.state_dim && X.cols() > 0)
    throw DimensionError("hopf_dataset_at: state dimension");
  prob.validate();
  const auto R = X.cols();
  HopfDataset ds;
  ds.seed = seed;
  ds.x = R > 0 ? X : Mat(prob.linear.state_dim, 0);
  ds.t = Vec::Constant(R, t);
  ds.value.resize(R);
  ds.grad.resize(prob.linear.state_dim, R);
  std::vector<char> flags(static_cast<std::size_t>(R), 0);
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index i = 0; i < R; ++i) {
    HopfProblem local = prob;
    local.solver.seed = dataset_row_solver_seed(seed, static_cast<std::uint64_t>(i));
    const auto sol = hopf_solve(local, X.col(i), t);
    ds.value[i] = sol.value;
    ds.grad.col(i) = sol.spatial_grad;
    flags[static_cast<std::size_t>(i)] = sol.flagged ? 1 : 0;
  }
  ds.flagged.assign(flags.begin(), flags.end());
  ds.low_quality = ds.flagged_fraction() > 0.10;
  if (ds.low_quality)
    warn("Hopf dataset: more than 10% of rows flagged; marked low-quality");
  return ds;
}

/// CSV with header x_0..x_{n-1},t,value,grad_0..grad_{n-1},flag.
inline void write_hopf_csv(std::ostream &os, const HopfDataset &ds, int n) {
  for (int i = 0; i < n; ++i) os << "x_" << i << ',';
  os << "t,value,";
  for (int i = 0; i < n; ++i) os << "grad_" << i << ',';
  os << "flag\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (Eigen::Index r = 0; r < ds.rows(); ++r) {
    for (int i = 0; i < n; ++i) { num(ds.x(i, r)); os << ','; }
    num(ds.t[r]); os << ',';
    num(ds.value[r]); os << ',';
    for (int i = 0; i < n; ++i) { num(ds.grad(i, r)); os << ','; }
    os << (ds.flagged[r] ? 1 : 0) << '\n';
  }
}

inline HopfDataset read_hopf_csv(std::istream &is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("Hopf CSV: missing header");
  int n = 0;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (tok.rfind("x_", 0) == 0) ++n;
  }
  if (n == 0) throw Error("Hopf CSV: header has no x_ columns");
  std::vector<std::vector<double>> rows;
  std::vector<bool> flags;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    if (static_cast<int>(vals.size()) != 2 * n + 3)
      throw Error("Hopf CSV: malformed row");
    flags.push_back(vals.back() != 0.0);
    vals.pop_back();
    rows.push_back(std::move(vals));
  }
  HopfDataset ds;
  const auto R = static_cast<Eigen::Index>(rows.size());
  ds.x.resize(n, R);
  ds.t.resize(R);
  ds.value.resize(R);
  ds.grad.resize(n, R);
  for (Eigen::Index r = 0; r < R; ++r) {
    const auto &v = rows[r];
    for (int i = 0; i < n; ++i) ds.x(i, r) = v[i];
    ds.t[r] = v[n];
    ds.value[r] = v[n + 1];
    for (int i = 0; i < n; ++i) ds.grad(i, r) = v[n + 2 + i];
  }
  ds.flagged = flags;
  ds.low_quality = ds.flagged_fraction() > 0.10;
  return ds;
}

} // namespace hjlss

#endif // HJLSS_HOPF_HPP
