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
#ifndef HJLSS_SYSTEMS_HPP
#define HJLSS_SYSTEMS_HPP

// Registered example systems: the publisher-subscriber game and the 10-D
// quadrotor. Both carry analytic drift Jacobians.

#include "hjlss/dynamics.hpp"

#include <numbers>

namespace hjlss {

struct PubSubParams {
  int N = 2;          // total states: one publisher + (N-1) subscribers
  double a = -0.5;
  double b = 1.0;
  double c = 1.0;
  double alpha = 0.0;
  double beta = 0.0;
  double r = 1.0;
  double control_bound = 1.0;
  double disturb_bound = 1.0;
};

/// Publisher-subscriber game: publisher x0 drives every subscriber x_i.
///   x0' = a x0 + alpha sin(x0) x0^2
///   xi' = -x0 + a xi - beta x0 xi^2 + b u_i + c d_i
inline AffineInputSystem make_pubsub(const PubSubParams &p) {
  if (p.N < 2) throw Error("pubsub: N must be >= 2");
  const int n = p.N, m = p.N - 1;
  AffineInputSystem s;
  s.name = "pubsub" + std::to_string(n) + "d";
  s.state_dim = n;
  s.control_dim = m;
  s.disturb_dim = m;
  s.objective = Objective::Reach;
  s.time_invariant = true;
  s.drift = [p, n](const Vec &x, double) -> Vec {
    Vec f(n);
    const double x0 = x[0];
    f[0] = p.a * x0 + p.alpha * std::sin(x0) * x0 * x0;
    for (int i = 1; i < n; ++i)
      f[i] = -x0 + p.a * x[i] - p.beta * x0 * x[i] * x[i];
    return f;
  };
  s.drift_jacobian = [p, n](const Vec &x, double) -> Mat {
    Mat J = Mat::Zero(n, n);
    const double x0 = x[0];
    J(0, 0) = p.a + p.alpha * (std::cos(x0) * x0 * x0 + 2.0 * std::sin(x0) * x0);
    for (int i = 1; i < n; ++i) {
      J(i, 0) = -1.0 - p.beta * x[i] * x[i];
      J(i, i) = p.a - 2.0 * p.beta * x0 * x[i];
    }
    return J;
  };
  Mat B1 = Mat::Zero(n, m), B2 = Mat::Zero(n, m);
  for (int i = 0; i < m; ++i) {
    B1(i + 1, i) = p.b;
    B2(i + 1, i) = p.c;
  }
  s.control_matrix = [B1](double) { return B1; };
  s.disturb_matrix = [B2](double) { return B2; };
  s.control_bound = Vec::Constant(m, p.control_bound);
  s.disturb_bound = Vec::Constant(m, p.disturb_bound);
  return s;
}

/// Exact linear part of the publisher-subscriber game (alpha = beta = 0).
inline LinearTVSystem make_pubsub_linear(const PubSubParams &p) {
  const int n = p.N, m = p.N - 1;
  Mat A = p.a * Mat::Identity(n, n);
  for (int i = 1; i < n; ++i) A(i, 0) = -1.0;
  Mat B1 = Mat::Zero(n, m), B2 = Mat::Zero(n, m);
  for (int i = 0; i < m; ++i) {
    B1(i + 1, i) = p.b;
    B2(i + 1, i) = p.c;
  }
  return LinearTVSystem::constant("pubsub" + std::to_string(n) + "d-linear", A,
                                  B1, B2, Vec::Constant(m, p.control_bound),
                                  Vec::Constant(m, p.disturb_bound),
                                  Objective::Reach);
}

/// J = 1/2((N-1) x0^2 + sum xi^2 - (N-1) r^2), the sum of the 2-D ball costs.
inline QuadraticTarget make_pubsub_target(const PubSubParams &p) {
  Vec w = Vec::Ones(p.N);
  w[0] = p.N - 1;
  return QuadraticTarget(w, 0.5 * (p.N - 1) * p.r * p.r, p.r);
}

struct QuadrotorParams {
  double g = 9.8;
  double d0 = 7.0;
  double d1 = 4.0;
  double n0 = 12.0;
  double tilt_bound = std::numbers::pi / 4.0;
  double thrust_bound = 1.0;
  double obstacle_radius = 0.5;
};

/// State layout of the quadrotor.
namespace quad {
enum : int { px = 0, vx, theta, wy, py, vy, phi, wx, pz, vz, dim };
}

/// 10-D near-hover quadrotor, controls (u1, u2, u3) = (roll-rate input,
/// pitch-rate input, vertical acceleration). Avoid problem, no disturbance.
inline AffineInputSystem make_quadrotor(const QuadrotorParams &q) {
  using namespace quad;
  AffineInputSystem s;
  s.name = "quadrotor10d";
  s.state_dim = dim;
  s.control_dim = 3;
  s.disturb_dim = 0;
  s.objective = Objective::Avoid;
  s.time_invariant = true;
  s.drift = [q](const Vec &x, double) -> Vec {
    Vec f = Vec::Zero(dim);
    f[px] = x[vx];
    f[py] = x[vy];
    f[pz] = x[vz];
    f[phi] = -q.d1 * x[phi] + x[wx];
    f[theta] = -q.d1 * x[theta] + x[wy];
    f[vx] = q.g * std::tan(x[theta]);
    f[vy] = q.g * std::tan(x[phi]);
    f[vz] = 0.0;
    f[wx] = -q.d0 * x[phi];
    f[wy] = -q.d0 * x[theta];
    return f;
  };
  s.drift_jacobian = [q](const Vec &x, double) -> Mat {
    Mat J = Mat::Zero(dim, dim);
    J(px, vx) = 1.0;
    J(py, vy) = 1.0;
    J(pz, vz) = 1.0;
    J(phi, phi) = -q.d1;
    J(phi, wx) = 1.0;
    J(theta, theta) = -q.d1;
    J(theta, wy) = 1.0;
    const double ct = std::cos(x[theta]), cp = std::cos(x[phi]);
    J(vx, theta) = q.g / (ct * ct);
    J(vy, phi) = q.g / (cp * cp);
    J(wx, phi) = -q.d0;
    J(wy, theta) = -q.d0;
    return J;
  };
  Mat B = Mat::Zero(dim, 3);
  B(wx, 0) = q.n0;
  B(wy, 1) = q.n0;
  B(vz, 2) = 1.0;
  s.control_matrix = [B](double) { return B; };
  s.control_bound = Vec(3);
  s.control_bound << q.tilt_bound, q.tilt_bound, q.thrust_bound;
  s.disturb_bound = Vec(0);
  return s;
}

/// Cylindrical obstacle 1/2(px^2 + py^2 - r^2) over the position plane.
inline QuadraticTarget make_quadrotor_target(const QuadrotorParams &q) {
  std::vector<bool> mask(quad::dim, false);
  mask[quad::px] = true;
  mask[quad::py] = true;
  return QuadraticTarget(Vec::Ones(quad::dim), mask,
                         0.5 * q.obstacle_radius * q.obstacle_radius,
                         q.obstacle_radius);
}

/// Quadrotor state box.
inline Box make_quadrotor_domain() {
  using namespace quad;
  Vec lo(dim), hi(dim);
  auto set = [&](int i, double h) { lo[i] = -h; hi[i] = h; };
  set(px, 4.0);
  set(py, 4.0);
  set(pz, 2.0);
  set(phi, 1.5);
  set(theta, 1.5);
  set(vx, 3.0);
  set(vy, 3.0);
  set(vz, 2.0);
  set(wx, 6.0);
  set(wy, 6.0);
  return Box(lo, hi);
}

/// x' = 0, no inputs.
inline AffineInputSystem make_zero_dynamics(int n) {
  AffineInputSystem s;
  s.name = "zero" + std::to_string(n) + "d";
  s.state_dim = n;
  s.drift = [n](const Vec &, double) -> Vec { return Vec::Zero(n); };
  s.drift_jacobian = [n](const Vec &, double) -> Mat { return Mat::Zero(n, n); };
  s.control_bound = Vec(0);
  s.disturb_bound = Vec(0);
  return s;
}

} // namespace hjlss

#endif // HJLSS_SYSTEMS_HPP
