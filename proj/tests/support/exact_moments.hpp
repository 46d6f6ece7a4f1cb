// Copyright 2026 The RepStrat Authors
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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "repstrat/random.hpp"

// Builds integer multisets (cents) with a prescribed count, sum and sum of
// squares inside [lo, hi]. Used to synthesize fixtures whose statistics
// match reference tables exactly.
namespace repstrat::testing {

namespace detail {

// Two indices i < j of a sorted vector with v[j] - v[i] == diff, taking the
// first copy of v[i] and the last copy of v[j] so a move keeps the order.
inline std::optional<std::pair<std::size_t, std::size_t>> pair_with_gap(const std::vector<std::int64_t>& v,
                                                                        std::int64_t diff) {
  std::size_t i = 0, j = 0;
  while (j < v.size()) {
    const std::int64_t gap = v[j] - v[i];
    if (gap < diff || i == j) {
      ++j;
    } else if (gap > diff) {
      ++i;
    } else {
      std::size_t last = j;
      while (last + 1 < v.size() && v[last + 1] == v[j]) ++last;
      return std::pair{i, last};
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Beta-shaped values on [lo, hi] with exactly the given sum and sum of
// squares. Returns nullopt if the repair loop does not converge for this
// draw; callers retry with the same generator.
inline std::optional<std::vector<std::int64_t>> fill_exact_moments(std::int64_t count, std::int64_t lo,
                                                                   std::int64_t hi, std::int64_t sum,
                                                                   std::int64_t sum_sq, Generator& rng) {
  const double n = static_cast<double>(count);
  const double mean = static_cast<double>(sum) / n;
  const double var = static_cast<double>(sum_sq) / n - mean * mean;
  const double width = static_cast<double>(hi - lo);
  const double m = (mean - static_cast<double>(lo)) / width;
  const double v = var / (width * width);
  if (!(m > 0 && m < 1 && v > 0 && v < m * (1 - m))) return std::nullopt;
  const double k = m * (1 - m) / v - 1;
  std::gamma_distribution<double> ga(m * k), gb((1 - m) * k);

  std::vector<double> x(static_cast<std::size_t>(count));
  for (auto& xi : x) {
    const double a = ga(rng), b = gb(rng);
    xi = static_cast<double>(lo) + width * a / (a + b);
  }
  // Standardize, clamp, repeat: settles on the target moments in the reals.
  for (int iter = 0; iter < 50; ++iter) {
    const double xbar = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0;
    for (double xi : x) ss += (xi - xbar) * (xi - xbar);
    const double scale = std::sqrt(var / (ss / n));
    for (auto& xi : x)
      xi = std::clamp(mean + (xi - xbar) * scale, static_cast<double>(lo), static_cast<double>(hi));
  }

  std::vector<std::int64_t> c(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) c[j] = std::llround(x[j]);
  std::sort(c.begin(), c.end());

  // Exact sum: nudge interior values by one cent.
  std::int64_t diff = sum - std::accumulate(c.begin(), c.end(), std::int64_t{0});
  for (std::size_t pass = 0; diff != 0 && pass < 1000; ++pass)
    for (std::size_t j = 0; j < c.size() && diff != 0; ++j) {
      const std::int64_t step = diff > 0 ? 1 : -1;
      if (c[j] + step < lo || c[j] + step > hi) continue;
      c[j] += step;
      diff -= step;
    }
  if (diff != 0) return std::nullopt;
  std::sort(c.begin(), c.end());

  // Exact sum of squares: (a, b) -> (a - 1, b + 1) adds 2 (b - a + 1);
  // (a, b) -> (a + 1, b - 1) subtracts 2 (b - a - 1). Both keep the sum.
  auto sq = [&] {
    std::int64_t s = 0;
    for (auto ci : c) s += ci * ci;
    return s;
  };
  std::int64_t residual = sum_sq - sq();
  if (residual % 2) return std::nullopt;
  for (int iter = 0; residual != 0 && iter < 100000; ++iter) {
    const std::int64_t span = c.back() - c.front();
    if (residual > 0) {
      std::int64_t want = std::min(residual / 2 - 1, span);
      for (; want >= 0; --want) {
        const auto p = detail::pair_with_gap(c, want);
        if (p && c[p->first] - 1 >= lo && c[p->second] + 1 <= hi) {
          --c[p->first];
          ++c[p->second];
          residual -= 2 * (want + 1);
          break;
        }
      }
      if (want < 0) return std::nullopt;
    } else {
      std::int64_t want = std::min(-residual / 2 + 1, span);
      for (; want >= 2; --want) {
        const auto p = detail::pair_with_gap(c, want);
        if (p) {
          // Move the last copy of the low value and the first of the high.
          std::size_t i = p->first, j = p->second;
          while (i + 1 < c.size() && c[i + 1] == c[i]) ++i;
          while (j > 0 && c[j - 1] == c[j]) --j;
          ++c[i];
          --c[j];
          residual += 2 * (want - 1);
          break;
        }
      }
      if (want < 2) {
        // Overshoot upward by the smallest available step and try again.
        const auto p = detail::pair_with_gap(c, 0);
        if (!p || c[p->first] - 1 < lo || c[p->second] + 1 > hi) return std::nullopt;
        --c[p->first];
        ++c[p->second];
        residual -= 2;
      }
    }
  }
  if (residual != 0) return std::nullopt;
  return c;
}

}  // namespace repstrat::testing
