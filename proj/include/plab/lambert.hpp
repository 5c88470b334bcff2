// Copyright 2026 The penalty-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace plab {

/// Real branch W_{-1} of the Lambert W function on [-1/e, 0): the unique
/// w <= -1 with w e^w = x.
///
/// Near the branch point we use the expansion in s = sqrt(2(e x + 1)); inputs
/// within rounding noise of -1/e itself snap to exactly -1. Everywhere else a
/// safeguarded Newton iteration runs on the log form
///     g(w) = w + ln(-w) - ln(-x),
/// which is monotone on w < -1, never under/overflows even for |x| near the
/// smallest normal, and relates to the defining residual by
/// w e^w - x = x (e^{g(w)} - 1), so driving |g| to ~2e-13 keeps the residual
/// within 1e-12 |x|.
inline double lambert_w_minus1(double x) {
  if (!std::isfinite(x) || !(x < 0.0)) {
    throw std::domain_error("lambert_w_minus1: x must lie in [-1/e, 0)");
  }
  const double q = std::fma(x, std::numbers::e, 1.0);  // height above branch point
  if (q < -1e-12) {
    throw std::domain_error("lambert_w_minus1: x must lie in [-1/e, 0)");
  }
  if (q < 1e-14) return -1.0;

  const double s = std::sqrt(2.0 * (q > 0.0 ? q : 0.0));
  const double series =
      -1.0 -
      s * (1.0 + s * (1.0 / 3.0 + s * (11.0 / 72.0 + s * (43.0 / 540.0))));
  if (q < 8e-6) return series;  // truncation error far below the residual bar

  const double target = std::log(-x);  // <= -1 throughout the domain
  double lo = target - 10.0;           // g(lo) < 0 for any target
  double hi = -1.0;                    // g(-1) = -1 - target >= 0
  double w;
  if (q < 0.05) {
    w = series;
  } else {
    const double l1 = target;
    const double l2 = std::log(-l1);
    w = l1 - l2 + l2 / l1;  // asymptotic guess, exact as x -> 0-
  }
  if (!(w > lo && w < hi)) w = 0.5 * (lo + hi);

  for (int iter = 0; iter < 100; ++iter) {
    const double g = w + std::log(-w) - target;
    if (std::abs(g) < 2e-13) break;
    if (g > 0.0) {
      hi = w;
    } else {
      lo = w;
    }
    double next = w - g * w / (w + 1.0);  // Newton; g'(w) = (w+1)/w
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == w) break;
    w = next;
  }
  return w;
}

}  // namespace plab
