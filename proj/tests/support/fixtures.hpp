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

#include <array>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "exact_moments.hpp"
#include "repstrat/estimation.hpp"
#include "repstrat/population.hpp"
#include "repstrat/random.hpp"
#include "repstrat/serialize.hpp"

// Reference example data: population strata (counts, means, variances),
// the audited sample's non-zero overpayments and its per-stratum summaries.
namespace repstrat::testing {

struct Table1Row {
  std::int64_t lower_cents;
  std::int64_t upper_cents;
  std::int64_t count;
  std::int64_t mean;      // dollars
  std::int64_t variance;  // dollars^2
  std::size_t sample_size;
};

inline constexpr std::array<Table1Row, 6> kTable1 = {{
    {1, 19999, 4000, 120, 703, 74},
    {20000, 49999, 2200, 313, 3500, 54},
    {50000, 99999, 1000, 620, 10000, 39},
    {100000, 199999, 500, 1148, 30000, 33},
    {200000, 399999, 200, 2374, 110000, 27},
    {400000, 699999, 100, 5061, 250000, 14},
}};
inline constexpr std::int64_t kCertaintyThresholdCents = 700000;

inline StrataConfig table1_strata() {
  StrataConfig c;
  for (const auto& r : kTable1)
    c.boundaries.push_back({Money::from_cents(r.lower_cents), Money::from_cents(r.upper_cents)});
  c.certainty_threshold = Money::from_cents(kCertaintyThresholdCents);
  return c;
}

// 8000 claims whose per-stratum N_i, mean and divisor-N variance equal the
// reference values exactly. Rows are shuffled with a fixed seed.
inline std::vector<ClaimRecord> table1_claims() {
  std::vector<Money> amounts;
  for (std::size_t i = 0; i < kTable1.size(); ++i) {
    const auto& r = kTable1[i];
    const std::int64_t sum = r.count * r.mean * 100;
    const std::int64_t sum_sq = r.count * (r.variance + r.mean * r.mean) * 10000;
    Generator draw = make_generator(20080101, i + 1);
    std::optional<std::vector<std::int64_t>> values;
    for (int attempt = 0; attempt < 20 && !values; ++attempt)
      values = fill_exact_moments(r.count, r.lower_cents, r.upper_cents, sum, sum_sq, draw);
    if (!values) throw std::logic_error("table 1 stratum not constructible");
    for (auto v : *values) amounts.push_back(Money::from_cents(v));
  }
  Generator rng = make_generator(20080101, 0);
  for (std::size_t j = amounts.size(); j > 1; --j) std::swap(amounts[j - 1], amounts[uniform_below(rng, j)]);
  std::vector<ClaimRecord> claims;
  claims.reserve(amounts.size());
  for (std::size_t j = 0; j < amounts.size(); ++j) {
    std::string id = std::to_string(j + 1);
    claims.push_back({"C" + std::string(5 - id.size(), '0') + id, amounts[j]});
  }
  return claims;
}

inline std::string population_csv(const std::vector<ClaimRecord>& claims) {
  std::ostringstream out;
  out << "claim_id,amount\n";
  for (const auto& c : claims) out << c.id << ',' << c.amount.to_string() << '\n';
  return out.str();
}

struct Table3Row {
  std::size_t n;
  double ybar;
  double dbar;
  double s2_y;
  std::vector<OverpaymentPair> nonzero;  // Table 2
};

inline std::vector<Table3Row> table3() {
  return {
      {74, 115, 4.2432, 680, {{9, 44}, {105, 105}, {57, 57}, {143, 143}}},
      {54, 300, 27.6296, 3400, {{8, 288}, {422, 422}, {115, 380}, {93, 455}, {495, 495}, {359, 359}}},
      {39, 650, 22.8718, 10500, {{530, 530}, {76, 516}, {12, 736}, {124, 540}, {54, 711}, {96, 674}}},
      {33, 1200, 118.9394, 30300, {{804, 1804}, {628, 1000}, {718, 1000}, {475, 1000}, {500, 1500}, {800, 1500}}},
      {27,
       2400,
       450.2222,
       111000,
       {{1120, 2520}, {2607, 2607}, {389, 3456}, {1990, 3265}, {3900, 3900}, {100, 3900}, {1550, 3000}, {500, 3000}}},
      {14, 5000, 799.5000, 250000, {{1220, 6102}, {1750, 6999}, {3, 5232}, {6900, 6900}, {100, 6671}, {1220, 6102}}},
  };
}

inline std::vector<StratumSampleStats> table3_stats() {
  std::vector<StratumSampleStats> out;
  for (const auto& r : table3()) out.push_back(sparse_stratum_stats(r.nonzero, r.n, r.ybar, r.s2_y));
  return out;
}

inline Json table3_summary_json() {
  Json strata = Json::array();
  for (const auto& r : table3()) {
    Json pairs = Json::array();
    for (const auto& p : r.nonzero) pairs.push_back({{"d", p.d}, {"y", p.y}});
    strata.push_back({{"n_i", r.n}, {"ybar_i", r.ybar}, {"s2_y_i", r.s2_y}, {"nonzero", pairs}});
  }
  return {{"strata", strata}};
}

inline Json table1_explicit_spec_json() {
  Json g = Json::array();
  for (const auto& r : kTable1) g.push_back(0.05 * static_cast<double>(r.mean));
  return {{"mode", "explicit"}, {"g_i", g}, {"gamma", 0.05}, {"use_fpc", true}};
}

}  // namespace repstrat::testing
