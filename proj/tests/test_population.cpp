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


#include <numeric>
#include <random>

#include "gtest/gtest.h"
#include "repstrat/population.hpp"
#include "support/fixtures.hpp"

namespace repstrat {
namespace {

std::vector<StratumBoundary> bounds(std::initializer_list<std::pair<double, double>> b) {
  std::vector<StratumBoundary> out;
  for (auto [lo, hi] : b) out.push_back({Money::from_dollars(lo), Money::from_dollars(hi)});
  return out;
}

TEST(Money, ParsesDecimals) {
  EXPECT_EQ(parse_money("120.00")->cents(), 12000);
  EXPECT_EQ(parse_money("120")->cents(), 12000);
  EXPECT_EQ(parse_money("0.5")->cents(), 50);
  EXPECT_EQ(parse_money(".07")->cents(), 7);
  EXPECT_EQ(parse_money("-3.10")->cents(), -310);
  EXPECT_FALSE(parse_money("1,200.00"));
  EXPECT_FALSE(parse_money("1.234"));
  EXPECT_FALSE(parse_money("1e3"));
  EXPECT_FALSE(parse_money(""));
  EXPECT_FALSE(parse_money("."));
  EXPECT_EQ(Money::from_cents(12345).to_string(), "123.45");
  EXPECT_EQ(Money::from_cents(5).to_string(), "0.05");
  EXPECT_EQ(Money::from_dollars(199.99).cents(), 19999);
  EXPECT_THROW(Money::from_dollars(0.001), DomainError);
}

TEST(LoadPopulation, EchoesRows) {
  const auto claims = load_population("claim_id,amount\nc1,120.00\nc2,0.00\n");
  ASSERT_EQ(claims.size(), 2u);
  EXPECT_EQ(claims[0].id, "c1");
  EXPECT_EQ(claims[0].amount.cents(), 12000);
  EXPECT_EQ(claims[1].id, "c2");
  EXPECT_EQ(claims[1].amount.cents(), 0);
}

TEST(LoadPopulation, HeaderOnlyIsEmpty) {
  EXPECT_TRUE(load_population("claim_id,amount\n").empty());
  EXPECT_TRUE(load_population("claim_id,amount").empty());
}

TEST(LoadPopulation, AcceptsCrLf) {
  const auto claims = load_population("claim_id,amount\r\nc1,1.50\r\nc2,2\r\n");
  ASSERT_EQ(claims.size(), 2u);
  EXPECT_EQ(claims[1].amount.cents(), 200);
}

TEST(LoadPopulation, MalformedRowNamesLine) {
  try {
    load_population("claim_id,amount\nc1,1.00\nc2,abc\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(load_population("claim_id,amount\nc1\n"), ParseError);
  EXPECT_THROW(load_population("id,amount\nc1,1\n"), ParseError);
  EXPECT_THROW(load_population(""), ParseError);
}

TEST(LoadPopulation, NegativeAndDuplicateAreDomainErrors) {
  EXPECT_THROW(load_population("claim_id,amount\nc1,-5.00\n"), DomainError);
  EXPECT_THROW(load_population("claim_id,amount\nc1,5\nc1,6\n"), DomainError);
}

TEST(LoadPopulation, Table1FixtureHas8000Records) {
  const auto claims = testing::table1_claims();
  const auto loaded = load_population(testing::population_csv(claims));
  EXPECT_EQ(loaded.size(), 8000u);
  EXPECT_EQ(loaded, claims);
}

TEST(Stratify, OneClaimPerBucket) {
  const std::vector<ClaimRecord> claims = {{"a", Money::from_dollars(0)},
                                           {"b", Money::from_dollars(50)},
                                           {"c", Money::from_dollars(250)},
                                           {"d", Money::from_dollars(10000)}};
  const auto frame = stratify(claims, bounds({{0.01, 199}, {200, 499}}), Money::from_dollars(7000));
  ASSERT_EQ(frame.stratum_count(), 2u);
  EXPECT_EQ(frame.strata[0].stats.count, 1u);
  EXPECT_EQ(frame.strata[1].stats.count, 1u);
  EXPECT_EQ(frame.certainty_claims.size(), 1u);
  EXPECT_EQ(frame.certainty_total.cents(), 1000000);
  EXPECT_EQ(frame.excluded_zero_count, 1u);
  EXPECT_EQ(frame.total_count, 2u);
  EXPECT_DOUBLE_EQ(frame.mean, 150.0);
}

TEST(Stratify, Table1Counts) {
  const auto frame = stratify(testing::table1_claims(), testing::table1_strata());
  const std::size_t expected[] = {4000, 2200, 1000, 500, 200, 100};
  ASSERT_EQ(frame.stratum_count(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(frame.strata[i].stats.count, expected[i]);
  EXPECT_EQ(frame.total_count, 8000u);
  EXPECT_DOUBLE_EQ(frame.mean, 417.9375);
}

TEST(Stratify, SingleStratumIsDegenerate) {
  const std::vector<ClaimRecord> claims = {{"a", Money::from_dollars(10)}, {"b", Money::from_dollars(30)}};
  const auto frame = stratify(claims, bounds({{0.01, 100}}), Money::from_dollars(1000));
  EXPECT_EQ(frame.strata[0].stats.weight, 1.0);
  EXPECT_EQ(frame.strata[0].stats.mean, frame.mean);
}

TEST(Stratify, GapListsOffendingAmounts) {
  const std::vector<ClaimRecord> claims = {{"a", Money::from_dollars(199.50)},
                                           {"b", Money::from_dollars(150)},
                                           {"c", Money::from_dollars(600)}};
  try {
    stratify(claims, bounds({{0.01, 199}, {200, 499}}), Money::from_dollars(7000));
    FAIL();
  } catch (const StratificationGapError& e) {
    EXPECT_EQ(e.amounts(), (std::vector<std::string>{"199.50", "600.00"}));
  }
}

TEST(Stratify, EmptyStratumIsWarnedNotRejected) {
  const std::vector<ClaimRecord> claims = {{"a", Money::from_dollars(10)}, {"b", Money::from_dollars(30)}};
  const auto frame = stratify(claims, bounds({{0.01, 100}, {100.01, 200}}), Money::from_dollars(1000));
  EXPECT_EQ(frame.strata[1].stats.count, 0u);
  EXPECT_FALSE(frame.strata[1].stats.defined());
  EXPECT_TRUE(std::isnan(frame.strata[1].stats.mean));
  EXPECT_EQ(frame.strata[1].stats.weight, 0.0);
  ASSERT_FALSE(frame.warnings.empty());
  EXPECT_NE(frame.warnings[0].find("stratum 2"), std::string::npos);
}

TEST(Stratify, RejectsBadBoundaries) {
  const std::vector<ClaimRecord> none;
  EXPECT_THROW(stratify(none, bounds({{10, 5}}), Money::from_dollars(100)), DomainError);
  EXPECT_THROW(stratify(none, bounds({{1, 10}, {10, 20}}), Money::from_dollars(100)), DomainError);
  EXPECT_THROW(stratify(none, bounds({{20, 30}, {1, 10}}), Money::from_dollars(100)), DomainError);
  EXPECT_THROW(stratify(none, bounds({{1, 10}}), Money::from_dollars(10)), DomainError);
  EXPECT_THROW(stratify(none, std::vector<StratumBoundary>{}, Money::from_dollars(10)), DomainError);
}

TEST(StratumStats, TwoPointVariance) {
  const std::vector<ClaimRecord> claims = {{"a", Money::from_dollars(2)}, {"b", Money::from_dollars(4)}};
  const auto s = compute_stats(claims);
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_DOUBLE_EQ(s.variance, 1.0);
}

TEST(StratumStats, ConstantHasZeroVariance) {
  std::vector<ClaimRecord> claims;
  for (int i = 0; i < 17; ++i) claims.push_back({std::to_string(i), Money::from_dollars(12.34)});
  EXPECT_EQ(compute_stats(claims).variance, 0.0);
}

TEST(StratumStats, Table1MatchesReferenceValues) {
  const auto frame = stratify(testing::table1_claims(), testing::table1_strata());
  const auto stats = stratum_stats(frame);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_NEAR(stats[i].mean, static_cast<double>(testing::kTable1[i].mean), 1e-9);
    EXPECT_NEAR(stats[i].variance, static_cast<double>(testing::kTable1[i].variance),
                1e-9 * static_cast<double>(testing::kTable1[i].variance));
  }
}

// Exact rational check in integer cents: N * sum(v^2) - (sum v)^2 == N^2 V 10^4.
TEST(StratumStats, Table1ExactIntegerOracle) {
  const auto frame = stratify(testing::table1_claims(), testing::table1_strata());
  for (std::size_t i = 0; i < 6; ++i) {
    __int128 sum = 0, sum_sq = 0;
    for (const auto& c : frame.strata[i].claims) {
      sum += c.amount.cents();
      sum_sq += static_cast<__int128>(c.amount.cents()) * c.amount.cents();
    }
    const auto& row = testing::kTable1[i];
    const __int128 n = row.count;
    EXPECT_TRUE(sum == n * row.mean * 100) << "stratum " << i + 1;
    EXPECT_TRUE(n * sum_sq - sum * sum == n * n * row.variance * 10000) << "stratum " << i + 1;
  }
}

TEST(StratumStats, EmptyStratumIsUndefined) {
  const auto s = compute_stats(std::vector<ClaimRecord>{});
  EXPECT_EQ(s.count, 0u);
  EXPECT_FALSE(s.defined());
  EXPECT_TRUE(std::isnan(s.variance));
}

// ---- properties over random populations -------------------------------------

std::vector<ClaimRecord> random_claims(std::mt19937_64& rng, std::size_t count) {
  std::uniform_int_distribution<std::int64_t> cents(0, 900000);
  std::bernoulli_distribution zero(0.05);
  std::vector<ClaimRecord> out;
  for (std::size_t i = 0; i < count; ++i)
    out.push_back({"r" + std::to_string(i), Money::from_cents(zero(rng) ? 0 : cents(rng))});
  return out;
}

const std::vector<StratumBoundary> kBounds = bounds({{0.01, 199.99}, {200, 999.99}, {1000, 3999.99}, {4000, 6999.99}});

TEST(StratifyProperty, InvariantsHoldOnRandomPopulations) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto claims = random_claims(rng, 200 + trial * 37);
    const auto frame = stratify(claims, kBounds, Money::from_dollars(7000));

    double weight_sum = 0.0;
    std::size_t total = 0;
    double weighted_mean = 0.0;
    for (const auto& s : frame.strata) {
      weight_sum += s.stats.weight;
      total += s.stats.count;
      for (const auto& c : s.claims) EXPECT_TRUE(s.boundary.contains(c.amount));
      if (!s.stats.defined()) continue;
      weighted_mean += static_cast<double>(s.stats.count) * s.stats.mean;
      // two-pass vs sum-of-squares shortcut
      double sq = 0.0;
      for (const auto& c : s.claims) sq += c.amount.dollars() * c.amount.dollars();
      const double shortcut = sq / static_cast<double>(s.stats.count) - s.stats.mean * s.stats.mean;
      EXPECT_NEAR(shortcut, s.stats.variance, 1e-8 * std::max(1.0, s.stats.variance));
    }
    EXPECT_NEAR(weight_sum, 1.0, 1e-12);
    EXPECT_EQ(total, frame.total_count);
    EXPECT_NEAR(weighted_mean / static_cast<double>(total), frame.mean, 1e-9 * frame.mean);
    EXPECT_EQ(frame.excluded_zero_count + frame.certainty_claims.size() + frame.total_count, claims.size());

    // Re-stratifying the included claims is idempotent.
    const auto again = stratify(included_claims(frame), kBounds, Money::from_dollars(7000));
    for (std::size_t i = 0; i < frame.strata.size(); ++i) {
      EXPECT_EQ(again.strata[i].claims, frame.strata[i].claims);
      EXPECT_EQ(again.strata[i].stats.count, frame.strata[i].stats.count);
      if (frame.strata[i].stats.defined()) {
        EXPECT_EQ(again.strata[i].stats.mean, frame.strata[i].stats.mean);
        EXPECT_EQ(again.strata[i].stats.variance, frame.strata[i].stats.variance);
      }
    }
  }
}

TEST(StratumStatsProperty, RecomputationIsIdempotent) {
  const auto frame = stratify(testing::table1_claims(), testing::table1_strata());
  const auto a = stratum_stats(frame);
  const auto b = stratum_stats(frame);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].mean, b[i].mean);
    EXPECT_EQ(a[i].variance, b[i].variance);
    EXPECT_EQ(a[i].mean, frame.strata[i].stats.mean);
  }
}

}  // namespace
}  // namespace repstrat
