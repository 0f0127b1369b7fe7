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
#ifndef HJLSS_TESTS_FD_HPP
#define HJLSS_TESTS_FD_HPP

// Finite-difference oracles shared by the unit and acceptance tests.

#include <functional>

namespace hjlss::fd {

/// Second-order central difference of f at 0 with step h.
inline double central2(const std::function<double(double)> &f, double h) {
  return (f(h) - f(-h)) / (2.0 * h);
}

/// Fourth-order central difference of f at 0 with step h.
inline double central4(const std::function<double(double)> &f, double h) {
  return (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h);
}

} // namespace hjlss::fd

#endif // HJLSS_TESTS_FD_HPP
