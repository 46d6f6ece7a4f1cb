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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "repstrat/allocation.hpp"
#include "repstrat/errors.hpp"
#include "repstrat/population.hpp"
#include "repstrat/random.hpp"

namespace repstrat {

struct StratumSample {
  std::vector<ClaimRecord> claims;  // in draw order
  double mean = 0.0;                // ybar_i
};

struct SampleSet {
  std::uint64_t seed = 0;
  std::vector<StratumSample> strata;
  double mean = 0.0;  // ybar_st = sum N_i ybar_i / N

  std::vector<double> stratum_means() const {
    std::vector<double> m;
    m.reserve(strata.size());
    for (const auto& s : strata) m.push_back(s.mean);
    return m;
  }
};

struct StratumRepresentativeness {
  double sample_mean = 0.0;
  double population_mean = 0.0;
  double abs_diff = 0.0;
  double precision = 0.0;  // g_i
  bool pass = false;
};

struct RepresentativenessReport {
  double sample_mean = 0.0;      // ybar_st
  double population_mean = 0.0;  // Ybar
  double abs_diff = 0.0;
  double threshold = 0.0;        // g
  std::vector<StratumRepresentativeness> strata;
  bool overall_pass = false;
};

/// Indices of an SRSWOR of `size` out of `population`, via a partial
/// Fisher-Yates shuffle.
inline std::vector<std::size_t> srswor_indices(Generator& rng, std::size_t population, std::size_t size) {
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t j = 0; j < size; ++j) {
    const std::size_t k = j + static_cast<std::size_t>(uniform_below(rng, population - j));
    std::swap(idx[j], idx[k]);
  }
  idx.resize(size);
  return idx;
}

/// Per-stratum SRSWOR indices into `frame.strata[i].claims`. Stratum i uses
/// the substream keyed by (seed, i), so a given stratum's draw does not
/// depend on how many other strata there are.
inline std::vector<std::vector<std::size_t>> draw_sample_indices(const PopulationFrame& frame,
                                                                 std::span<const std::size_t> sizes,
                                                                 std::uint64_t seed) {
  if (sizes.size() != frame.strata.size())
    throw StructuralError("plan has " + std::to_string(sizes.size()) + " strata, frame has " +
                          std::to_string(frame.strata.size()));
  std::vector<std::vector<std::size_t>> out;
  out.reserve(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const std::size_t population = frame.strata[i].claims.size();
    if (sizes[i] == 0 || sizes[i] > population)
      throw StructuralError("stratum " + std::to_string(i + 1) + ": sample size " + std::to_string(sizes[i]) +
                            " not in [1, " + std::to_string(population) + "]");
    Generator rng = make_generator(seed, i);
    out.push_back(srswor_indices(rng, population, sizes[i]));
  }
  return out;
}

inline SampleSet draw_sample(const PopulationFrame& frame, std::span<const std::size_t> sizes, std::uint64_t seed) {
  const auto indices = draw_sample_indices(frame, sizes, seed);
  SampleSet out;
  out.seed = seed;
  out.strata.resize(sizes.size());
  double weighted = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const auto& claims = frame.strata[i].claims;
    auto& s = out.strata[i];
    s.claims.reserve(sizes[i]);
    std::int64_t cents = 0;
    for (std::size_t k : indices[i]) {
      s.claims.push_back(claims[k]);
      cents += claims[k].amount.cents();
    }
    s.mean = static_cast<double>(cents) / 100.0 / static_cast<double>(sizes[i]);
    weighted += static_cast<double>(claims.size()) * s.mean;
  }
  out.mean = weighted / static_cast<double>(frame.total_count);
  return out;
}

inline SampleSet draw_sample(const PopulationFrame& frame, const AllocationPlan& plan, std::uint64_t seed) {
  const auto sizes = plan.sizes();
  return draw_sample(frame, sizes, seed);
}

/// Compares stratum sample means against the population. Both the per-stratum
/// and the overall checks are inclusive (|diff| <= threshold).
inline RepresentativenessReport check_representativeness(const PopulationFrame& frame,
                                                         std::span<const double> sample_means,
                                                         std::span<const double> precisions,
                                                         double overall_precision) {
  if (sample_means.size() != frame.strata.size() || precisions.size() != frame.strata.size())
    throw StructuralError("check_representativeness: stratum counts do not match the frame");
  RepresentativenessReport r;
  r.threshold = overall_precision;
  r.population_mean = frame.mean;
  double weighted = 0.0;
  for (std::size_t i = 0; i < sample_means.size(); ++i) {
    const auto& st = frame.strata[i].stats;
    StratumRepresentativeness s;
    s.sample_mean = sample_means[i];
    s.population_mean = st.mean;
    s.abs_diff = std::abs(s.sample_mean - s.population_mean);
    s.precision = precisions[i];
    s.pass = s.abs_diff <= s.precision;
    r.strata.push_back(s);
    weighted += static_cast<double>(st.count) * sample_means[i];
  }
  r.sample_mean = weighted / static_cast<double>(frame.total_count);
  r.abs_diff = std::abs(r.sample_mean - r.population_mean);
  r.overall_pass = r.abs_diff <= r.threshold;
  return r;
}

inline RepresentativenessReport check_representativeness(const PopulationFrame& frame, const SampleSet& sample,
                                                         std::span<const double> precisions,
                                                         double overall_precision) {
  const auto means = sample.stratum_means();
  return check_representativeness(frame, means, precisions, overall_precision);
}

}  // namespace repstrat
