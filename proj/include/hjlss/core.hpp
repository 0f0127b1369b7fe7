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
#ifndef HJLSS_CORE_HPP
#define HJLSS_CORE_HPP

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>

namespace hjlss {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base class for all hard errors raised by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string &what) : std::runtime_error(what) {}
};

/// Raised when argument dimensions do not agree.
class DimensionError : public Error {
public:
  explicit DimensionError(const std::string &what) : Error(what) {}
};

/// Reach: the control minimizes J and the disturbance maximizes it.
/// Avoid: the roles swap. Both use the minimum-over-time value.
enum class Objective { Reach, Avoid };

inline const char *to_string(Objective o) {
  return o == Objective::Reach ? "reach" : "avoid";
}

inline Objective objective_from_string(const std::string &s) {
  if (s == "reach") return Objective::Reach;
  if (s == "avoid") return Objective::Avoid;
  throw Error("unknown objective '" + s + "' (expected reach|avoid)");
}

/// Sign applied to the control term of the analytic Hamiltonian.
inline double control_sign(Objective o) {
  return o == Objective::Reach ? -1.0 : 1.0;
}

/// Sign applied to the disturbance term of the analytic Hamiltonian.
inline double disturbance_sign(Objective o) {
  return o == Objective::Reach ? 1.0 : -1.0;
}

// ---------------------------------------------------------------------------
// Warnings
// ---------------------------------------------------------------------------

namespace detail {
struct WarnSink {
  std::mutex mu;
  std::function<void(const std::string &)> fn;
  std::atomic<std::uint64_t> count{0};
};
inline WarnSink &warn_sink() {
  static WarnSink s;
  return s;
}
} // namespace detail

/// Emit a non-fatal diagnostic. Goes to stderr unless a sink is installed.
inline void warn(const std::string &msg) {
  auto &s = detail::warn_sink();
  s.count.fetch_add(1, std::memory_order_relaxed);
  std::lock_guard<std::mutex> lock(s.mu);
  if (s.fn) {
    s.fn(msg);
  } else {
    std::cerr << "[hjlss] warning: " << msg << '\n';
  }
}

/// Replace the warning sink; pass an empty function to restore stderr.
inline void set_warning_sink(std::function<void(const std::string &)> fn) {
  auto &s = detail::warn_sink();
  std::lock_guard<std::mutex> lock(s.mu);
  s.fn = std::move(fn);
}

inline std::uint64_t warning_count() {
  return detail::warn_sink().count.load(std::memory_order_relaxed);
}

// ---------------------------------------------------------------------------
// Seeds
// ---------------------------------------------------------------------------

/// SplitMix64 finalizer; used to derive independent seeds from (seed, index).
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix_seed(mix_seed(seed) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b) {
  return derive_seed(derive_seed(seed, a), b);
}

/// Axis-aligned box in R^n.
struct Box {
  Vec lo;
  Vec hi;

  Box() = default;
  Box(Vec lo_, Vec hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
    if (lo.size() != hi.size())
      throw DimensionError("Box: lo/hi size mismatch");
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      if (!(lo[i] <= hi[i])) throw Error("Box: lo > hi on axis " + std::to_string(i));
  }
  static Box cube(int n, double lo, double hi) {
    return Box(Vec::Constant(n, lo), Vec::Constant(n, hi));
  }

  int dim() const { return static_cast<int>(lo.size()); }
  Vec center() const { return 0.5 * (lo + hi); }
  Vec half_width() const { return 0.5 * (hi - lo); }
  bool contains(const Vec &x, double slack = 0.0) const {
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
    return true;
  }
  /// Box scaled about its center by `factor`.
  Box scaled(double factor) const {
    Vec c = center(), h = half_width() * factor;
    return Box(c - h, c + h);
  }
};

inline bool all_finite(const Eigen::Ref<const Mat> &m) {
  return m.allFinite();
}

} // namespace hjlss

#endif // HJLSS_CORE_HPP
