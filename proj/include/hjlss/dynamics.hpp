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
#ifndef HJLSS_DYNAMICS_HPP
#define HJLSS_DYNAMICS_HPP

// Dynamical systems that are affine in box-bounded inputs, their analytic
// Hamiltonians, Taylor linearization, and the linear-to-nonlinear spectrum
// augmentation.
//
// Time convention: the terminal time is t_f = 0 and states live on
// t in [-T, 0]. Backward time is s = -t.

#include "hjlss/core.hpp"

#include <algorithm>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace hjlss {

// ---------------------------------------------------------------------------
// Targets
// ---------------------------------------------------------------------------

/// J(x) = 1/2 sum_{active i} w_i x_i^2 - offset.
///
/// Inactive coordinates do not enter the cost; the sub-zero set is then a
/// cylinder over the active coordinates.
struct QuadraticTarget {
  Vec weights;
  std::vector<bool> active;
  double offset = 0.0;
  double radius = 1.0;

  QuadraticTarget() = default;
  QuadraticTarget(Vec w, double offset_, double radius_)
      : weights(std::move(w)), active(weights.size(), true), offset(offset_),
        radius(radius_) {}
  QuadraticTarget(Vec w, std::vector<bool> mask, double offset_, double radius_)
      : weights(std::move(w)), active(std::move(mask)), offset(offset_),
        radius(radius_) {
    if (active.size() != static_cast<std::size_t>(weights.size()))
      throw DimensionError("QuadraticTarget: mask size mismatch");
  }

  /// Ball of radius r in every coordinate: 1/2(|x|^2 - r^2).
  static QuadraticTarget ball(int n, double r) {
    return QuadraticTarget(Vec::Ones(n), 0.5 * r * r, r);
  }

  int dim() const { return static_cast<int>(weights.size()); }

  double value(const Eigen::Ref<const Vec> &x) const {
    check(x);
    double acc = 0.0;
    for (int i = 0; i < dim(); ++i)
      if (active[i]) acc += weights[i] * x[i] * x[i];
    return 0.5 * acc - offset;
  }

  Vec gradient(const Eigen::Ref<const Vec> &x) const {
    check(x);
    Vec g = Vec::Zero(dim());
    for (int i = 0; i < dim(); ++i)
      if (active[i]) g[i] = weights[i] * x[i];
    return g;
  }

  /// Column-wise value for a batch of states (n x B).
  Vec values(const Eigen::Ref<const Mat> &X) const {
    if (X.rows() != dim()) throw DimensionError("QuadraticTarget: batch rows");
    Vec out(X.cols());
    for (Eigen::Index b = 0; b < X.cols(); ++b) out[b] = value(X.col(b));
    return out;
  }

  /// Diagonal of the (masked) weight matrix.
  Vec masked_weights() const {
    Vec w = Vec::Zero(dim());
    for (int i = 0; i < dim(); ++i)
      if (active[i]) w[i] = weights[i];
    return w;
  }

  void validate_for_conjugate() const {
    for (int i = 0; i < dim(); ++i)
      if (active[i] && !(weights[i] > 0.0))
        throw Error("QuadraticTarget: non-positive weight on active coordinate " +
                    std::to_string(i) + " (conjugate is infinite)");
  }

private:
  void check(const Eigen::Ref<const Vec> &x) const {
    if (x.size() != dim())
      throw DimensionError("QuadraticTarget: expected dim " +
                           std::to_string(dim()) + ", got " +
                           std::to_string(x.size()));
  }
};

/// Convex conjugate J*(p) = 1/2 sum p_i^2 / w_i + offset.
///
/// Returns +inf when p has mass on an inactive coordinate.
inline double convex_conjugate(const QuadraticTarget &target,
                               const Eigen::Ref<const Vec> &p) {
  target.validate_for_conjugate();
  if (p.size() != target.dim())
    throw DimensionError("convex_conjugate: dimension mismatch");
  double acc = 0.0;
  for (int i = 0; i < target.dim(); ++i) {
    if (target.active[i]) {
      acc += p[i] * p[i] / target.weights[i];
    } else if (p[i] != 0.0) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return 0.5 * acc + target.offset;
}

// ---------------------------------------------------------------------------
// Systems
// ---------------------------------------------------------------------------

using DriftFn = std::function<Vec(const Vec &x, double t)>;
using JacobianFn = std::function<Mat(const Vec &x, double t)>;
using InputMatrixFn = std::function<Mat(double t)>;
using OffsetFn = std::function<Vec(double t)>;

/// f(x, u, d, t) = drift(x, t) + B1(t) u + B2(t) d with box inputs
/// |u_j| <= control_bound_j, |d_j| <= disturb_bound_j.
struct AffineInputSystem {
  std::string name;
  int state_dim = 0;
  int control_dim = 0;
  int disturb_dim = 0;
  DriftFn drift;
  JacobianFn drift_jacobian; // optional; finite differences when empty
  InputMatrixFn control_matrix;
  InputMatrixFn disturb_matrix;
  Vec control_bound;
  Vec disturb_bound;
  Objective objective = Objective::Reach;
  bool time_invariant = true;

  Mat B1(double t) const {
    if (control_dim == 0) return Mat::Zero(state_dim, 0);
    return control_matrix(t);
  }
  Mat B2(double t) const {
    if (disturb_dim == 0) return Mat::Zero(state_dim, 0);
    return disturb_matrix(t);
  }

  void validate() const {
    if (state_dim <= 0) throw Error(name + ": state_dim must be positive");
    if (!drift) throw Error(name + ": missing drift");
    if (control_bound.size() != control_dim)
      throw DimensionError(name + ": control_bound size");
    if (disturb_bound.size() != disturb_dim)
      throw DimensionError(name + ": disturb_bound size");
    if ((control_bound.array() < 0).any() || (disturb_bound.array() < 0).any())
      throw Error(name + ": input bounds must be non-negative");
    if (control_dim > 0 && !control_matrix)
      throw Error(name + ": missing control matrix");
    if (disturb_dim > 0 && !disturb_matrix)
      throw Error(name + ": missing disturbance matrix");
  }
};

/// l(x, u, d, t) = A(t) x + B1(t) u + B2(t) d + offset(t).
struct LinearTVSystem {
  std::string name;
  int state_dim = 0;
  int control_dim = 0;
  int disturb_dim = 0;
  InputMatrixFn A;
  InputMatrixFn B1;
  InputMatrixFn B2;
  OffsetFn affine_offset; // empty means zero
  Vec control_bound;
  Vec disturb_bound;
  Objective objective = Objective::Reach;
  bool time_invariant = true;

  Mat A_at(double t) const { return A(t); }
  Mat B1_at(double t) const {
    return control_dim == 0 ? Mat::Zero(state_dim, 0) : B1(t);
  }
  Mat B2_at(double t) const {
    return disturb_dim == 0 ? Mat::Zero(state_dim, 0) : B2(t);
  }
  Vec offset_at(double t) const {
    return affine_offset ? affine_offset(t) : Vec::Zero(state_dim);
  }

  Vec eval(const Vec &x, const Vec &u, const Vec &d, double t) const {
    Vec out = A_at(t) * x + offset_at(t);
    if (control_dim > 0) out += B1_at(t) * u;
    if (disturb_dim > 0) out += B2_at(t) * d;
    return out;
  }

  /// Constant-matrix system.
  static LinearTVSystem constant(std::string name, Mat A, Mat B1, Mat B2,
                                 Vec ub, Vec db, Objective obj,
                                 Vec offset = Vec()) {
    LinearTVSystem s;
    s.name = std::move(name);
    s.state_dim = static_cast<int>(A.rows());
    s.control_dim = static_cast<int>(B1.cols());
    s.disturb_dim = static_cast<int>(B2.cols());
    s.A = [A](double) { return A; };
    s.B1 = [B1](double) { return B1; };
    s.B2 = [B2](double) { return B2; };
    if (offset.size() > 0) s.affine_offset = [offset](double) { return offset; };
    s.control_bound = std::move(ub);
    s.disturb_bound = std::move(db);
    s.objective = obj;
    s.time_invariant = true;
    return s;
  }

  /// The same dynamics viewed as an AffineInputSystem.
  AffineInputSystem as_affine() const {
    AffineInputSystem s;
    s.name = name;
    s.state_dim = state_dim;
    s.control_dim = control_dim;
    s.disturb_dim = disturb_dim;
    auto Af = A;
    auto off = affine_offset;
    s.drift = [Af, off](const Vec &x, double t) -> Vec {
      Vec v = Af(t) * x;
      if (off) v += off(t);
      return v;
    };
    s.drift_jacobian = [Af](const Vec &, double t) -> Mat { return Af(t); };
    s.control_matrix = B1;
    s.disturb_matrix = B2;
    s.control_bound = control_bound;
    s.disturb_bound = disturb_bound;
    s.objective = objective;
    s.time_invariant = time_invariant;
    return s;
  }
};

/// Operating point for a Taylor expansion.
struct OperatingPoint {
  Vec x0;
  Vec u0;
  Vec d0;
  double t0 = 0.0;
};

namespace detail {
inline void require_dim(const Vec &v, int n, const char *what) {
  if (v.size() != n)
    throw DimensionError(std::string(what) + ": expected dim " +
                         std::to_string(n) + ", got " +
                         std::to_string(v.size()));
}

inline Vec clamp_to_box(const Vec &v, const Vec &bound, const char *what) {
  Vec out = v;
  bool clamped = false;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (out[j] > bound[j]) { out[j] = bound[j]; clamped = true; }
    if (out[j] < -bound[j]) { out[j] = -bound[j]; clamped = true; }
  }
  if (clamped) warn(std::string(what) + " clamped to its box bound");
  return out;
}
} // namespace detail

/// f(x, u, d, t). Inputs outside their box are clamped with a warning.
inline Vec eval_dynamics(const AffineInputSystem &sys, const Vec &x,
                         const Vec &u, const Vec &d, double t) {
  detail::require_dim(x, sys.state_dim, "eval_dynamics(x)");
  detail::require_dim(u, sys.control_dim, "eval_dynamics(u)");
  detail::require_dim(d, sys.disturb_dim, "eval_dynamics(d)");
  Vec out = sys.drift(x, t);
  detail::require_dim(out, sys.state_dim, "eval_dynamics(drift)");
  if (sys.control_dim > 0)
    out += sys.B1(t) * detail::clamp_to_box(u, sys.control_bound, "control");
  if (sys.disturb_dim > 0)
    out += sys.B2(t) * detail::clamp_to_box(d, sys.disturb_bound, "disturbance");
  return out;
}

/// Analytic min-max of <p, f> over the input boxes given the drift and input
/// matrices already evaluated at (x, t). When `dHdp` is non-null it receives
/// the drift plus the input directions of the extremal (bang-bang) inputs,
/// which is a (sub)gradient of H with respect to p.
inline double box_hamiltonian(const Eigen::Ref<const Vec> &p,
                              const Eigen::Ref<const Vec> &drift,
                              const Eigen::Ref<const Mat> &B1,
                              const Eigen::Ref<const Vec> &ubound,
                              const Eigen::Ref<const Mat> &B2,
                              const Eigen::Ref<const Vec> &dbound,
                              Objective obj, Vec *dHdp = nullptr) {
  const double su = control_sign(obj);
  const double sd = disturbance_sign(obj);
  double h = p.dot(drift);
  if (dHdp) *dHdp = drift;
  for (Eigen::Index j = 0; j < B1.cols(); ++j) {
    const double s = B1.col(j).dot(p);
    h += su * ubound[j] * std::abs(s);
    if (dHdp && s != 0.0)
      *dHdp += (su * ubound[j] * (s > 0 ? 1.0 : -1.0)) * B1.col(j);
  }
  for (Eigen::Index j = 0; j < B2.cols(); ++j) {
    const double s = B2.col(j).dot(p);
    h += sd * dbound[j] * std::abs(s);
    if (dHdp && s != 0.0)
      *dHdp += (sd * dbound[j] * (s > 0 ? 1.0 : -1.0)) * B2.col(j);
  }
  return h;
}

/// H(x, p, t) = min_u max_d <p, f(x,u,d,t)> for Reach, max_u min_d for Avoid.
inline double hamiltonian(const AffineInputSystem &sys, const Vec &x,
                          const Vec &p, double t, Vec *dHdp = nullptr) {
  detail::require_dim(x, sys.state_dim, "hamiltonian(x)");
  detail::require_dim(p, sys.state_dim, "hamiltonian(p)");
  const Vec f0 = sys.drift(x, t);
  return box_hamiltonian(p, f0, sys.B1(t), sys.control_bound, sys.B2(t),
                         sys.disturb_bound, sys.objective, dHdp);
}

/// Drift Jacobian by central differences with step h.
inline Mat finite_difference_jacobian(const DriftFn &f, const Vec &x, double t,
                                      double h = 1e-6) {
  const Vec f0 = f(x, t);
  Mat J(f0.size(), x.size());
  Vec xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    J.col(i) = (f(xp, t) - f(xm, t)) / (2.0 * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return J;
}

inline Mat drift_jacobian(const AffineInputSystem &sys, const Vec &x, double t) {
  if (sys.drift_jacobian) return sys.drift_jacobian(x, t);
  return finite_difference_jacobian(sys.drift, x, t);
}

/// First-order expansion of f about m0, including the constant offset so that
/// l(m0) = f(m0). The result is frozen at t0.
inline LinearTVSystem taylor_linearize(const AffineInputSystem &sys,
                                       const OperatingPoint &m0) {
  detail::require_dim(m0.x0, sys.state_dim, "taylor_linearize(x0)");
  const Vec u0 = m0.u0.size() ? m0.u0 : Vec::Zero(sys.control_dim);
  const Vec d0 = m0.d0.size() ? m0.d0 : Vec::Zero(sys.disturb_dim);
  detail::require_dim(u0, sys.control_dim, "taylor_linearize(u0)");
  detail::require_dim(d0, sys.disturb_dim, "taylor_linearize(d0)");
  for (Eigen::Index j = 0; j < u0.size(); ++j)
    if (std::abs(u0[j]) > sys.control_bound[j])
      throw Error("taylor_linearize: u0 outside control bound");
  for (Eigen::Index j = 0; j < d0.size(); ++j)
    if (std::abs(d0[j]) > sys.disturb_bound[j])
      throw Error("taylor_linearize: d0 outside disturbance bound");

  const Mat A = drift_jacobian(sys, m0.x0, m0.t0);
  if (!A.allFinite())
    throw Error("taylor_linearize: non-finite Jacobian entries");
  const Mat B1 = sys.B1(m0.t0);
  const Mat B2 = sys.B2(m0.t0);
  const Vec f0 = sys.drift(m0.x0, m0.t0) + B1 * u0 + B2 * d0;
  const Vec offset = f0 - A * m0.x0 - B1 * u0 - B2 * d0;

  LinearTVSystem lin = LinearTVSystem::constant(
      sys.name + "-linearized", A, B1, B2, sys.control_bound,
      sys.disturb_bound, sys.objective,
      offset.isZero(0.0) ? Vec() : offset);
  return lin;
}

// ---------------------------------------------------------------------------
// Spectrum augmentation
// ---------------------------------------------------------------------------

/// Augmented system on [x, lambda] whose x-dynamics blend the linear model
/// (lambda = 0) into the nonlinear one (lambda = 1); lambda is frozen.
struct SpectrumSystem {
  AffineInputSystem base;
  LinearTVSystem linear;

  int state_dim() const { return base.state_dim; }

  void validate() const {
    base.validate();
    if (linear.state_dim != base.state_dim ||
        linear.control_dim != base.control_dim ||
        linear.disturb_dim != base.disturb_dim)
      throw DimensionError("SpectrumSystem: base/linear dimensions differ");
  }
};

namespace detail {
inline double clamp_lambda(double lambda) {
  if (lambda < 0.0 || lambda > 1.0) {
    warn("spectrum lambda " + std::to_string(lambda) + " clamped to [0,1]");
    return std::clamp(lambda, 0.0, 1.0);
  }
  return lambda;
}

template <class T> T blend(double lambda, const T &lin, const T &nonlin) {
  if (lambda == 0.0) return lin;
  if (lambda == 1.0) return nonlin;
  return (1.0 - lambda) * lin + lambda * nonlin;
}
} // namespace detail

/// The frozen-lambda slice of the spectrum system as an ordinary
/// AffineInputSystem. At lambda = 0 and 1 the slice reproduces the linear and
/// nonlinear dynamics exactly (no blending arithmetic is performed).
inline AffineInputSystem spectrum_slice(const SpectrumSystem &spec,
                                        double lambda) {
  lambda = detail::clamp_lambda(lambda);
  if (lambda == 1.0) return spec.base;
  const AffineInputSystem lin = spec.linear.as_affine();
  if (lambda == 0.0) return lin;
  AffineInputSystem s = spec.base;
  s.name = spec.base.name + "-spectrum";
  const auto fb = spec.base.drift, fl = lin.drift;
  s.drift = [fb, fl, lambda](const Vec &x, double t) -> Vec {
    return detail::blend<Vec>(lambda, fl(x, t), fb(x, t));
  };
  const AffineInputSystem base = spec.base;
  s.drift_jacobian = [base, lin, lambda](const Vec &x, double t) -> Mat {
    return detail::blend<Mat>(lambda, drift_jacobian(lin, x, t),
                              drift_jacobian(base, x, t));
  };
  const auto b1b = spec.base.control_matrix, b1l = lin.control_matrix;
  const auto b2b = spec.base.disturb_matrix, b2l = lin.disturb_matrix;
  if (s.control_dim > 0)
    s.control_matrix = [b1b, b1l, lambda](double t) -> Mat {
      return detail::blend<Mat>(lambda, b1l(t), b1b(t));
    };
  if (s.disturb_dim > 0)
    s.disturb_matrix = [b2b, b2l, lambda](double t) -> Mat {
      return detail::blend<Mat>(lambda, b2l(t), b2b(t));
    };
  s.time_invariant = spec.base.time_invariant && spec.linear.time_invariant;
  return s;
}

/// Augmented dynamics: blended x-part and a zero lambda-part.
inline Vec spectrum_dynamics(const SpectrumSystem &spec, const Vec &xt,
                             const Vec &u, const Vec &d, double t) {
  const int n = spec.state_dim();
  detail::require_dim(xt, n + 1, "spectrum_dynamics(x~)");
  const double lambda = detail::clamp_lambda(xt[n]);
  const Vec x = xt.head(n);
  const Vec fl = spec.linear.eval(x, detail::clamp_to_box(u, spec.linear.control_bound, "control"),
                                  detail::clamp_to_box(d, spec.linear.disturb_bound, "disturbance"), t);
  const Vec fn = eval_dynamics(spec.base, x, u, d, t);
  Vec out(n + 1);
  out.head(n) = detail::blend<Vec>(lambda, fl, fn);
  out[n] = 0.0;
  return out;
}

/// Hamiltonian of the blended dynamics at the lambda stored in x~.
/// `p` is the spatial costate only (size n).
inline double spectrum_hamiltonian(const SpectrumSystem &spec, const Vec &xt,
                                   const Vec &p, double t,
                                   Vec *dHdp = nullptr) {
  const int n = spec.state_dim();
  detail::require_dim(xt, n + 1, "spectrum_hamiltonian(x~)");
  detail::require_dim(p, n, "spectrum_hamiltonian(p)");
  const double lambda = detail::clamp_lambda(xt[n]);
  const Vec x = xt.head(n);
  const Vec fl = spec.linear.A_at(t) * x + spec.linear.offset_at(t);
  const Vec fb = spec.base.drift(x, t);
  const Mat B1 =
      detail::blend<Mat>(lambda, spec.linear.B1_at(t), spec.base.B1(t));
  const Mat B2 =
      detail::blend<Mat>(lambda, spec.linear.B2_at(t), spec.base.B2(t));
  return box_hamiltonian(p, detail::blend<Vec>(lambda, fl, fb), B1,
                         spec.base.control_bound, B2, spec.base.disturb_bound,
                         spec.base.objective, dHdp);
}

// ---------------------------------------------------------------------------
// Linearization error
// ---------------------------------------------------------------------------

/// Piecewise-constant profile of the sampled error bound over time.
/// `times` ascend from -T to 0. Querying at tau returns the value attached to
/// the latest grid time not after tau, so the profile never underestimates
/// between grid points relative to the grid samples.
struct DeltaProfile {
  std::vector<double> times;
  std::vector<double> values;

  static DeltaProfile constant(double v, double horizon = 1.0) {
    return DeltaProfile{{-horizon, 0.0}, {v, v}};
  }

  double operator()(double tau) const {
    if (times.empty()) return 0.0;
    if (tau <= times.front()) return values.front();
    auto it = std::upper_bound(times.begin(), times.end(), tau);
    const auto idx = static_cast<std::size_t>(std::distance(times.begin(), it)) - 1;
    return values[idx];
  }
};

/// Monte-Carlo estimate of max ||f - l|| over region x U x D x [tau, 0] on a
/// uniform grid of tau in [-horizon, 0]. The result is a lower bound on the
/// true maximum; box vertices are included in the sample mix so that extremes
/// attained at corners are found exactly.
inline DeltaProfile linearization_error(const AffineInputSystem &sys,
                                        const LinearTVSystem &lin,
                                        const Box &region, int n_samples,
                                        std::uint64_t seed,
                                        double horizon = 1.0, int n_tau = 11) {
  if (region.dim() != sys.state_dim)
    throw DimensionError("linearization_error: region dimension");
  if (n_tau < 1) throw Error("linearization_error: n_tau must be >= 1");
  DeltaProfile out;
  out.times.resize(n_tau);
  out.values.assign(n_tau, 0.0);
  for (int k = 0; k < n_tau; ++k)
    out.times[k] = n_tau == 1 ? -horizon : -horizon + horizon * k / (n_tau - 1);

  const AffineInputSystem lsys = lin.as_affine();
  // Latest times first so the running max propagates toward earlier tau.
  double running = 0.0;
  for (int k = n_tau - 1; k >= 0; --k) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw = [&](double lo, double hi, bool vertex) {
      if (vertex) return unit(rng) < 0.5 ? lo : hi;
      return lo + (hi - lo) * unit(rng);
    };
    double best = 0.0;
    for (int s = 0; s < n_samples; ++s) {
      const bool vertex = (s % 4 == 0);
      Vec x(sys.state_dim), u(sys.control_dim), d(sys.disturb_dim);
      for (int i = 0; i < sys.state_dim; ++i)
        x[i] = draw(region.lo[i], region.hi[i], vertex);
      for (int j = 0; j < sys.control_dim; ++j)
        u[j] = draw(-sys.control_bound[j], sys.control_bound[j], vertex);
      for (int j = 0; j < sys.disturb_dim; ++j)
        d[j] = draw(-sys.disturb_bound[j], sys.disturb_bound[j], vertex);
      const double t = out.times[k] + (0.0 - out.times[k]) * unit(rng);
      const Vec e = eval_dynamics(sys, x, u, d, t) - eval_dynamics(lsys, x, u, d, t);
      best = std::max(best, e.norm());
    }
    running = std::max(running, best);
    out.values[k] = running;
  }
  return out;
}

} // namespace hjlss

#endif // HJLSS_DYNAMICS_HPP
