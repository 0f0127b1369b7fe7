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
#ifndef HJLSS_TESTS_ORACLES_HPP
#define HJLSS_TESTS_ORACLES_HPP

// Brute-force oracles shared by the unit and acceptance tests.

#include "hjlss/dynamics.hpp"

#include <algorithm>
#include <vector>

namespace hjlss::oracle {

// min over a u-grid of max over a d-grid of <p, f>, or the reverse order for
// Avoid. With affine dynamics the extremes sit on box vertices, which every
// odd grid contains.
inline double grid_minmax(const AffineInputSystem &sys, const Vec &x, const Vec &p,
                          double t, int pts = 41) {
  const int nu = sys.control_dim, nd = sys.disturb_dim;
  auto for_each = [pts](int dim, const Vec &bound, auto &&fn) {
    std::vector<int> idx(dim, 0);
    Vec v(dim);
    while (true) {
      for (int j = 0; j < dim; ++j)
        v[j] = -bound[j] + 2.0 * bound[j] * idx[j] / (pts - 1);
      fn(v);
      int j = 0;
      while (j < dim && ++idx[j] == pts) idx[j++] = 0;
      if (j == dim) break;
    }
  };
  const bool reach = sys.objective == Objective::Reach;
  double outer = reach ? 1e300 : -1e300;
  for_each(nu, sys.control_bound, [&](const Vec &u) {
    double inner = reach ? -1e300 : 1e300;
    for_each(nd, sys.disturb_bound, [&](const Vec &d) {
      const double v = p.dot(eval_dynamics(sys, x, u, d, t));
      inner = reach ? std::max(inner, v) : std::min(inner, v);
    });
    outer = reach ? std::min(outer, inner) : std::max(outer, inner);
  });
  return outer;
}

} // namespace hjlss::oracle

#endif // HJLSS_TESTS_ORACLES_HPP
