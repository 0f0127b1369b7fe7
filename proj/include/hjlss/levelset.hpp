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
#ifndef HJLSS_LEVELSET_HPP
#define HJLSS_LEVELSET_HPP

// Two-dimensional dynamic-programming oracle for the minimum-over-time HJ
// variational inequality, and the additive composition of 2-D parts into an
// N-D ground truth for decomposable games.

#include "hjlss/dynamics.hpp"
#include "hjlss/io.hpp"

#include <array>
#include <map>
#include <memory>

namespace hjlss {

struct GridSpec {
  Box bounds = Box::cube(2, -3.0, 3.0);
  int nx = 201;
  int ny = 201;
};

struct ValueGrid2D {
  Box bounds;
  int nx = 0;
  int ny = 0;
  double dt = 0.0;                // time step used by the march
  std::vector<double> times;      // ascending; times.back() is t_f
  std::vector<double> values;     // [slice][i][j], i along axis 0
  json meta = json::object();

  double dx() const { return (bounds.hi[0] - bounds.lo[0]) / (nx - 1); }
  double dy() const { return (bounds.hi[1] - bounds.lo[1]) / (ny - 1); }
  double x_at(int i) const { return bounds.lo[0] + i * dx(); }
  double y_at(int j) const { return bounds.lo[1] + j * dy(); }
  std::size_t index(std::size_t k, int i, int j) const {
    return (k * nx + i) * static_cast<std::size_t>(ny) + j;
  }
  double at(std::size_t k, int i, int j) const { return values[index(k, i, j)]; }
  std::size_t slices() const { return times.size(); }
};

namespace detail {

struct DpStepData {
  std::vector<double> f0, f1; // drift per node
  Mat cols;                   // merged input directions (2 x m)
  Vec coef;                   // Hamiltonian coefficients of |cols^T p|
};

inline void merged_columns_2d(const AffineInputSystem &sys, double t, Mat &cols,
                              Vec &coef) {
  const Mat B1 = sys.B1(t), B2 = sys.B2(t);
  std::vector<Vec> cs;
  std::vector<double> ks;
  auto add = [&](const Vec &col, double k) {
    if (col.isZero(0.0) || k == 0.0) return;
    for (std::size_t i = 0; i < cs.size(); ++i)
      if (cs[i] == col) { ks[i] += k; return; }
    cs.push_back(col);
    ks.push_back(k);
  };
  for (Eigen::Index j = 0; j < B1.cols(); ++j)
    add(B1.col(j), control_sign(sys.objective) * sys.control_bound[j]);
  for (Eigen::Index j = 0; j < B2.cols(); ++j)
    add(B2.col(j), disturbance_sign(sys.objective) * sys.disturb_bound[j]);
  cols.resize(2, static_cast<Eigen::Index>(cs.size()));
  coef.resize(static_cast<Eigen::Index>(cs.size()));
  for (std::size_t i = 0; i < cs.size(); ++i) {
    cols.col(static_cast<Eigen::Index>(i)) = cs[i];
    coef[static_cast<Eigen::Index>(i)] = ks[i];
  }
}

inline void fill_drift(const AffineInputSystem &sys, const GridSpec &g, double t,
                       DpStepData &d) {
  const std::size_t N = static_cast<std::size_t>(g.nx) * g.ny;
  d.f0.resize(N);
  d.f1.resize(N);
  const double dx = (g.bounds.hi[0] - g.bounds.lo[0]) / (g.nx - 1);
  const double dy = (g.bounds.hi[1] - g.bounds.lo[1]) / (g.ny - 1);
  Vec x(2);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      x[0] = g.bounds.lo[0] + i * dx;
      x[1] = g.bounds.lo[1] + j * dy;
      const Vec f = sys.drift(x, t);
      d.f0[static_cast<std::size_t>(i) * g.ny + j] = f[0];
      d.f1[static_cast<std::size_t>(i) * g.ny + j] = f[1];
    }
  merged_columns_2d(sys, t, d.cols, d.coef);
}

/// Bound on |dH/dp_i| over the grid: drift magnitude plus input authority.
inline std::array<double, 2> dissipation(const DpStepData &d) {
  std::array<double, 2> a{0.0, 0.0};
  for (std::size_t k = 0; k < d.f0.size(); ++k) {
    a[0] = std::max(a[0], std::abs(d.f0[k]));
    a[1] = std::max(a[1], std::abs(d.f1[k]));
  }
  for (Eigen::Index j = 0; j < d.cols.cols(); ++j) {
    a[0] += std::abs(d.coef[j] * d.cols(0, j));
    a[1] += std::abs(d.coef[j] * d.cols(1, j));
  }
  return a;
}

} // namespace detail

enum class Dissipation {
  Global, // alpha_i = max over the grid of |dH/dp_i|
  Local   // alpha_i = max of |dH/dp_i| over the node and its axis neighbours
};

/// Backward march of V_s = min{0, H} from J with a first-order Lax-Friedrichs
/// Hamiltonian and forward Euler; every step is clamped by the previous value
/// (minimum over time). Returns `n_slices` uniformly spaced time slices on
/// [-horizon, 0]. The time step always uses the global dissipation bound.
inline ValueGrid2D dp_solve_2d(const AffineInputSystem &sys,
                               const QuadraticTarget &target,
                               const GridSpec &grid, double horizon,
                               double cfl = 0.5, int n_slices = 21,
                               Dissipation dissipation = Dissipation::Local) {
  sys.validate();
  if (sys.state_dim != 2) throw DimensionError("dp_solve_2d: system must be 2-D");
  if (target.dim() != 2) throw DimensionError("dp_solve_2d: target must be 2-D");
  if (!(cfl > 0.0 && cfl <= 1.0)) throw Error("dp_solve_2d: cfl must be in (0,1]");
  if (grid.nx < 3 || grid.ny < 3) throw Error("dp_solve_2d: grid too small");
  if (grid.bounds.dim() != 2) throw DimensionError("dp_solve_2d: bounds");
  if (!(horizon >= 0.0)) throw Error("dp_solve_2d: horizon must be >= 0");
  if (n_slices < 2) throw Error("dp_solve_2d: need at least 2 slices");

  const int nx = grid.nx, ny = grid.ny;
  const std::size_t N = static_cast<std::size_t>(nx) * ny;
  ValueGrid2D out;
  out.bounds = grid.bounds;
  out.nx = nx;
  out.ny = ny;
  const double dx = out.dx(), dy = out.dy();

  std::vector<double> V(N), Vn(N);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      Vec x(2);
      x << out.x_at(i), out.y_at(j);
      V[static_cast<std::size_t>(i) * ny + j] = target.value(x);
    }

  detail::DpStepData data;
  detail::fill_drift(sys, grid, 0.0, data);
  auto alpha = detail::dissipation(data);
  std::vector<double> a0, a1;
  auto local_alpha = [&]() {
    if (dissipation != Dissipation::Local) return;
    a0.assign(N, 0.0);
    a1.assign(N, 0.0);
    double in0 = 0.0, in1 = 0.0;
    for (Eigen::Index c = 0; c < data.cols.cols(); ++c) {
      in0 += std::abs(data.coef[c] * data.cols(0, c));
      in1 += std::abs(data.coef[c] * data.cols(1, c));
    }
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        const std::size_t id = static_cast<std::size_t>(i) * ny + j;
        double m0 = std::abs(data.f0[id]), m1 = std::abs(data.f1[id]);
        if (i > 0) m0 = std::max(m0, std::abs(data.f0[id - ny]));
        if (i < nx - 1) m0 = std::max(m0, std::abs(data.f0[id + ny]));
        if (j > 0) m1 = std::max(m1, std::abs(data.f1[id - 1]));
        if (j < ny - 1) m1 = std::max(m1, std::abs(data.f1[id + 1]));
        a0[id] = m0 + in0;
        a1[id] = m1 + in1;
      }
  };
  local_alpha();
  auto dt_for = [&](const std::array<double, 2> &a) {
    const double rate = a[0] / dx + a[1] / dy;
    return rate > 0.0 ? cfl / rate : std::numeric_limits<double>::infinity();
  };
  double dt_max = dt_for(alpha);
  out.dt = std::isfinite(dt_max) ? dt_max : horizon;

  // Slices are produced in increasing backward time and reversed at the end.
  std::vector<std::vector<double>> slices;
  slices.push_back(V);
  double s = 0.0;
  for (int m = 1; m < n_slices; ++m) {
    const double s_target = horizon * m / (n_slices - 1);
    const double span = s_target - s;
    int steps = std::isfinite(dt_max)
                    ? std::max(1, static_cast<int>(std::ceil(span / dt_max - 1e-12)))
                    : 1;
    const double dt = span / steps;
    for (int k = 0; k < steps; ++k) {
      const double t_now = -s;
      if (!sys.time_invariant) {
        detail::fill_drift(sys, grid, t_now, data);
        alpha = detail::dissipation(data);
        local_alpha();
        if (dt * (alpha[0] / dx + alpha[1] / dy) > cfl * (1.0 + 1e-9))
          throw Error("dp_solve_2d: CFL violated by time-varying dynamics");
      }
      const Mat &cols = data.cols;
      const Vec &coef = data.coef;
      bool bad = false;
#pragma omp parallel for reduction(|| : bad)
      for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
          const std::size_t id = static_cast<std::size_t>(i) * ny + j;
          const double v = V[id];
          double px_p = i < nx - 1 ? (V[id + ny] - v) / dx : 0.0;
          double px_m = i > 0 ? (v - V[id - ny]) / dx : 0.0;
          if (i == nx - 1) px_p = px_m;
          if (i == 0) px_m = px_p;
          double py_p = j < ny - 1 ? (V[id + 1] - v) / dy : 0.0;
          double py_m = j > 0 ? (v - V[id - 1]) / dy : 0.0;
          if (j == ny - 1) py_p = py_m;
          if (j == 0) py_m = py_p;
          const double p0 = 0.5 * (px_p + px_m), p1 = 0.5 * (py_p + py_m);
          double h = p0 * data.f0[id] + p1 * data.f1[id];
          for (Eigen::Index c = 0; c < cols.cols(); ++c)
            h += coef[c] * std::abs(cols(0, c) * p0 + cols(1, c) * p1);
          const bool loc = dissipation == Dissipation::Local;
          const double al0 = loc ? a0[id] : alpha[0];
          const double al1 = loc ? a1[id] : alpha[1];
          const double lf =
              h + 0.5 * al0 * (px_p - px_m) + 0.5 * al1 * (py_p - py_m);
          const double vn = v + dt * lf;
          Vn[id] = std::min(vn, v);
          if (!std::isfinite(vn)) bad = true;
        }
      }
      if (bad)
        throw Error("dp_solve_2d: non-finite values at s=" + std::to_string(s) +
                    " (CFL or dynamics blow-up)");
      std::swap(V, Vn);
      s += dt;
    }
    s = s_target;
    slices.push_back(V);
  }

  out.times.resize(n_slices);
  out.values.resize(N * n_slices);
  for (int m = 0; m < n_slices; ++m) {
    const int k = n_slices - 1 - m; // ascending t
    out.times[k] = m == 0 ? 0.0 : -horizon * m / (n_slices - 1);
    std::copy(slices[m].begin(), slices[m].end(),
              out.values.begin() + static_cast<std::ptrdiff_t>(N * k));
  }
  out.meta["system"] = sys.name;
  out.meta["objective"] = to_string(sys.objective);
  out.meta["horizon"] = horizon;
  out.meta["cfl"] = cfl;
  out.meta["dissipation"] = dissipation == Dissipation::Local ? "local" : "global";
  out.meta["target_weights"] = std::vector<double>(target.weights.data(),
                                                    target.weights.data() + 2);
  out.meta["target_offset"] = target.offset;
  out.meta["target_radius"] = target.radius;
  return out;
}

/// Bilinear in space, linear in time. Out-of-bounds queries are errors.
inline double interpolate(const ValueGrid2D &g, const Vec &x, double t) {
  if (x.size() != 2) throw DimensionError("interpolate: x must be 2-D");
  constexpr double eps = 1e-12;
  if (!g.bounds.contains(x, eps))
    throw Error("interpolate: point outside grid bounds");
  if (t < g.times.front() - eps || t > g.times.back() + eps)
    throw Error("interpolate: time outside grid horizon");
  // Snap coordinates within 1e-9 cells of a node so nodes return stored values.
  auto cell = [](double f, int n) {
    const double r = std::round(f);
    return std::clamp(std::abs(f - r) < 1e-9 ? r : f, 0.0, n - 1.0);
  };
  const double fx = cell((x[0] - g.bounds.lo[0]) / g.dx(), g.nx);
  const double fy = cell((x[1] - g.bounds.lo[1]) / g.dy(), g.ny);
  const int i = std::min(static_cast<int>(fx), g.nx - 2);
  const int j = std::min(static_cast<int>(fy), g.ny - 2);
  const double ax = fx - i, ay = fy - j;

  std::size_t k = 0;
  double at = 0.0;
  if (g.slices() > 1) {
    const double tc = std::clamp(t, g.times.front(), g.times.back());
    auto it = std::upper_bound(g.times.begin(), g.times.end(), tc);
    k = static_cast<std::size_t>(std::distance(g.times.begin(), it));
    k = k == 0 ? 0 : k - 1;
    if (k >= g.slices() - 1) k = g.slices() - 2;
    at = (tc - g.times[k]) / (g.times[k + 1] - g.times[k]);
  }
  auto bil = [&](std::size_t kk) {
    const double v00 = g.at(kk, i, j), v10 = g.at(kk, i + 1, j);
    const double v01 = g.at(kk, i, j + 1), v11 = g.at(kk, i + 1, j + 1);
    return (1 - ax) * (1 - ay) * v00 + ax * (1 - ay) * v10 +
           (1 - ax) * ay * v01 + ax * ay * v11;
  };
  if (at == 0.0 || g.slices() == 1) return bil(k);
  if (at == 1.0) return bil(k + 1);
  return (1 - at) * bil(k) + at * bil(k + 1);
}

/// Central differences of the interpolated field with h = grid spacing;
/// one-sided where the stencil would leave the grid.
inline Vec grid_gradient(const ValueGrid2D &g, const Vec &x, double t) {
  Vec grad(2);
  const std::array<double, 2> h{g.dx(), g.dy()};
  for (int a = 0; a < 2; ++a) {
    Vec xp = x, xm = x;
    xp[a] = std::min(x[a] + h[a], g.bounds.hi[a]);
    xm[a] = std::max(x[a] - h[a], g.bounds.lo[a]);
    grad[a] = (interpolate(g, xp, t) - interpolate(g, xm, t)) / (xp[a] - xm[a]);
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Composition
// ---------------------------------------------------------------------------

struct ComposedOracle {
  std::vector<std::shared_ptr<const ValueGrid2D>> parts;
  std::vector<std::pair<int, int>> projections;

  int state_dim() const {
    int n = 0;
    for (auto [a, b] : projections) n = std::max({n, a + 1, b + 1});
    return n;
  }

  /// N-1 references to one shared part with projections (0, i).
  static ComposedOracle publisher_subscriber(std::shared_ptr<const ValueGrid2D> part,
                                             int N) {
    ComposedOracle o;
    for (int i = 1; i < N; ++i) {
      o.parts.push_back(part);
      o.projections.emplace_back(0, i);
    }
    o.validate();
    return o;
  }

  void validate() const {
    if (parts.size() != projections.size() || parts.empty())
      throw Error("ComposedOracle: parts/projections mismatch");
    for (const auto &p : parts) {
      if (p->times != parts.front()->times)
        throw Error("ComposedOracle: parts must share time slices");
      if (p->meta.value("target_radius", 0.0) !=
          parts.front()->meta.value("target_radius", 0.0))
        throw Error("ComposedOracle: parts must share the target radius");
    }
  }
};

inline double compose_value(const ComposedOracle &o, const Vec &x, double t) {
  double v = 0.0;
  Vec xi(2);
  for (std::size_t k = 0; k < o.parts.size(); ++k) {
    xi << x[o.projections[k].first], x[o.projections[k].second];
    v += interpolate(*o.parts[k], xi, t);
  }
  return v;
}

inline Vec compose_gradient(const ComposedOracle &o, const Vec &x, double t) {
  Vec g = Vec::Zero(x.size());
  Vec xi(2);
  for (std::size_t k = 0; k < o.parts.size(); ++k) {
    const auto [a, b] = o.projections[k];
    xi << x[a], x[b];
    const Vec gi = grid_gradient(*o.parts[k], xi, t);
    g[a] += gi[0];
    g[b] += gi[1];
  }
  return g;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

inline constexpr char kGridMagic[9] = "HJLSGRD1";
inline constexpr int kGridVersion = 1;

inline void save_grid(const ValueGrid2D &g, const std::filesystem::path &path) {
  json h;
  h["version"] = kGridVersion;
  h["bounds"] = {{g.bounds.lo[0], g.bounds.hi[0]}, {g.bounds.lo[1], g.bounds.hi[1]}};
  h["shape"] = {g.nx, g.ny};
  h["times"] = g.times;
  h["dt"] = g.dt;
  h["meta"] = g.meta;
  atomic_write(path, [&](std::ostream &os) {
    write_container(os, kGridMagic, h, g.values);
  });
}

inline ValueGrid2D load_grid(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open grid " + path.string());
  auto c = read_container(is, kGridMagic);
  if (c.header.value("version", -1) != kGridVersion)
    throw Error("grid: unsupported version");
  ValueGrid2D g;
  Vec lo(2), hi(2);
  lo << c.header["bounds"][0][0].get<double>(), c.header["bounds"][1][0].get<double>();
  hi << c.header["bounds"][0][1].get<double>(), c.header["bounds"][1][1].get<double>();
  g.bounds = Box(lo, hi);
  g.nx = c.header["shape"][0].get<int>();
  g.ny = c.header["shape"][1].get<int>();
  g.times = c.header["times"].get<std::vector<double>>();
  g.dt = c.header.value("dt", 0.0);
  g.meta = c.header.value("meta", json::object());
  if (c.blob.size() != g.times.size() * g.nx * g.ny)
    throw Error("grid: blob size does not match shape");
  g.values = std::move(c.blob);
  return g;
}

/// Composition manifest: the part files (relative to the manifest) and the
/// state indices each part is projected onto.
inline void save_oracle_manifest(const std::filesystem::path &path,
                                 const std::vector<std::string> &part_files,
                                 const std::vector<std::pair<int, int>> &projections,
                                 const json &meta = json::object()) {
  if (part_files.size() != projections.size() || part_files.empty())
    throw Error("oracle manifest: parts/projections mismatch");
  json m;
  m["version"] = kGridVersion;
  m["meta"] = meta;
  m["parts"] = json::array();
  for (std::size_t k = 0; k < part_files.size(); ++k)
    m["parts"].push_back({{"grid", part_files[k]},
                          {"projection", {projections[k].first, projections[k].second}}});
  write_text_file(path, m.dump(2) + "\n");
}

inline ComposedOracle load_oracle_manifest(const std::filesystem::path &path) {
  json m;
  try {
    m = json::parse(read_text_file(path));
  } catch (const json::exception &e) {
    throw Error("oracle manifest: " + std::string(e.what()));
  }
  if (m.value("version", -1) != kGridVersion) throw Error("oracle manifest: unsupported version");
  std::map<std::string, std::shared_ptr<const ValueGrid2D>> cache;
  ComposedOracle o;
  for (const auto &part : m.at("parts")) {
    const auto file = part.at("grid").get<std::string>();
    auto &g = cache[file];
    if (!g) g = std::make_shared<ValueGrid2D>(load_grid(path.parent_path() / file));
    o.parts.push_back(g);
    o.projections.emplace_back(part.at("projection")[0].get<int>(),
                               part.at("projection")[1].get<int>());
  }
  o.validate();
  return o;
}

} // namespace hjlss

#endif // HJLSS_LEVELSET_HPP
