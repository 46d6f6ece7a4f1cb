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


#include <algorithm>
#include <cmath>
#include <set>

#include "gtest/gtest.h"
#include "repstrat/allocation.hpp"
#include "repstrat/sampling.hpp"
#include "support/fixtures.hpp"

namespace repstrat {
namespace {

const std::vector<std::size_t> kTable1Sizes = {74, 54, 39, 33, 27, 14};

const PopulationFrame& table1_frame() {
  static const PopulationFrame frame = stratify(testing::table1_claims(), testing::table1_strata());
  return frame;
}

std::vector<double> table1_precisions() {
  std::vector<double> g;
  for (const auto& r : testing::kTable1) g.push_back(0.05 * static_cast<double>(r.mean));
  return g;
}

// Upper tail of chi-square via the Wilson-Hilferty cube-root transform.
double chi_square_upper_tail(double statistic, double df) {
  const double z = (std::cbrt(statistic / df) - (1.0 - 2.0 / (9.0 * df))) / std::sqrt(2.0 / (9.0 * df));
  return 1.0 - normal_cdf(z);
}

TEST(Random, SubstreamsAreDistinctAndStable) {
  EXPECT_NE(substream_seed(1, 0), substream_seed(1, 1));
  EXPECT_NE(substream_seed(1, 0), substream_seed(2, 0));
  auto a = make_generator(42, 3);
  auto b = make_generator(42, 3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
  // Pinned value so a change of scheme is caught.
  EXPECT_EQ(kRandomSchemeVersion, 1);
  EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
}

TEST(Random, UniformBelowStaysInRange) {
  auto rng = make_generator(5, 0);
  std::vector<int> counts(7);
  for (int i = 0; i < 70000; ++i) {
    const auto v = uniform_below(rng, 7);
    ASSERT_LT(v, 7u);
    ++counts[v];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
  EXPECT_EQ(uniform_below(rng, 1), 0u);
}

TEST(DrawSample, SizesAndDistinctIds) {
  const auto& frame = table1_frame();
  const auto sample = draw_sample(frame, kTable1Sizes, 1);
  ASSERT_EQ(sample.strata.size(), 6u);
  double weighted = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    const auto& s = sample.strata[i];
    EXPECT_EQ(s.claims.size(), kTable1Sizes[i]);
    std::set<std::string> ids;
    double sum = 0.0;
    for (const auto& c : s.claims) {
      ids.insert(c.id);
      EXPECT_TRUE(frame.strata[i].boundary.contains(c.amount));
      sum += c.amount.dollars();
    }
    EXPECT_EQ(ids.size(), s.claims.size());
    EXPECT_NEAR(s.mean, sum / static_cast<double>(s.claims.size()), 1e-9);
    weighted += static_cast<double>(frame.strata[i].stats.count) * s.mean;
  }
  EXPECT_NEAR(sample.mean, weighted / 8000.0, 1e-9);
  EXPECT_EQ(sample.seed, 1u);
}

TEST(DrawSample, Deterministic) {
  const auto& frame = table1_frame();
  const auto a = draw_sample(frame, kTable1Sizes, 99);
  const auto b = draw_sample(frame, kTable1Sizes, 99);
  const auto c = draw_sample(frame, kTable1Sizes, 100);
  bool differs = false;
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(a.strata[i].claims, b.strata[i].claims);
    EXPECT_EQ(a.strata[i].mean, b.strata[i].mean);
    differs |= a.strata[i].claims != c.strata[i].claims;
  }
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_TRUE(differs);
}

TEST(DrawSample, StratumDrawIgnoresOtherStrata) {
  const auto& frame = table1_frame();
  PopulationFrame fewer = frame;
  fewer.strata.resize(3);
  const std::vector<std::size_t> sizes(kTable1Sizes.begin(), kTable1Sizes.begin() + 3);
  const auto full = draw_sample_indices(frame, kTable1Sizes, 7);
  const auto part = draw_sample_indices(fewer, sizes, 7);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(full[i], part[i]);
}

TEST(DrawSample, CensusReturnsWholeStratum) {
  const std::vector<ClaimRecord> claims = {{"a", Money::from_dollars(10)}, {"b", Money::from_dollars(20)},
                                           {"c", Money::from_dollars(35)}, {"d", Money::from_dollars(300)},
                                           {"e", Money::from_dollars(400)}};
  const auto frame = stratify(claims,
                              std::vector<StratumBoundary>{{Money::from_dollars(0.01), Money::from_dollars(99.99)},
                                                           {Money::from_dollars(100), Money::from_dollars(999.99)}},
                              Money::from_dollars(1000));
  for (std::uint64_t seed : {0ull, 1ull, 12345ull}) {
    const auto sample = draw_sample(frame, std::vector<std::size_t>{3, 2}, seed);
    for (std::size_t i = 0; i < 2; ++i) {
      auto got = sample.strata[i].claims;
      auto want = frame.strata[i].claims;
      auto by_id = [](const ClaimRecord& x, const ClaimRecord& y) { return x.id < y.id; };
      std::sort(got.begin(), got.end(), by_id);
      std::sort(want.begin(), want.end(), by_id);
      EXPECT_EQ(got, want);
    }
    const auto report = check_representativeness(frame, sample, std::vector<double>{1, 1}, 1);
    EXPECT_EQ(report.abs_diff, 0.0);
    EXPECT_TRUE(report.overall_pass);
    for (const auto& s : report.strata) EXPECT_TRUE(s.pass);
  }
}

TEST(DrawSample, MisalignedPlanIsStructuralError) {
  const auto& frame = table1_frame();
  EXPECT_THROW(draw_sample(frame, std::vector<std::size_t>{74, 54}, 1), StructuralError);
  EXPECT_THROW(draw_sample(frame, std::vector<std::size_t>{74, 54, 39, 33, 27, 101}, 1), StructuralError);
  EXPECT_THROW(draw_sample(frame, std::vector<std::size_t>{74, 54, 39, 33, 27, 0}, 1), StructuralError);
}

TEST(DrawSample, SelectionIsUniformWithinStrata) {
  const auto& frame = table1_frame();
  const int draws = 50000;
  std::vector<std::vector<int>> counts;
  for (const auto& s : frame.strata) counts.emplace_back(s.claims.size(), 0);
  for (int r = 0; r < draws; ++r) {
    const auto idx = draw_sample_indices(frame, kTable1Sizes, 5000000 + static_cast<std::uint64_t>(r));
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t k : idx[i]) ++counts[i][k];
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double cells = static_cast<double>(counts[i].size());
    const double expected = static_cast<double>(draws) * static_cast<double>(kTable1Sizes[i]) / cells;
    double chi2 = 0.0;
    for (int c : counts[i]) chi2 += (c - expected) * (c - expected) / expected;
    const double p = chi_square_upper_tail(chi2, cells - 1.0);
    EXPECT_GT(p, 0.001) << "stratum " << i + 1 << " chi2 " << chi2;
  }
}

TEST(Representativeness, Table3StratumMeans) {
  const auto& frame = table1_frame();
  const std::vector<double> means = {115, 300, 650, 1200, 2400, 5000};
  const auto report = check_representativeness(frame, means, table1_precisions(), 0.02 * frame.mean);
  EXPECT_EQ(report.sample_mean, 418.75);
  EXPECT_EQ(report.population_mean, 417.9375);
  EXPECT_EQ(report.abs_diff, 0.8125);
  EXPECT_TRUE(report.overall_pass);
  EXPECT_LT(report.abs_diff, 0.02 * frame.mean);
}

TEST(Representativeness, BoundaryIsInclusive) {
  const auto& frame = table1_frame();
  std::vector<double> means, g;
  for (std::size_t i = 0; i < 6; ++i) {
    means.push_back(frame.strata[i].stats.mean + table1_precisions()[i]);
    g.push_back(means[i] - frame.strata[i].stats.mean);  // exactly representable gap
  }
  const auto report = check_representativeness(frame, means, g, 1000);
  for (const auto& s : report.strata) {
    EXPECT_EQ(s.abs_diff, s.precision);
    EXPECT_TRUE(s.pass);
  }
  const auto at = check_representativeness(frame, means, g, report.abs_diff);
  EXPECT_TRUE(at.overall_pass);
  const auto below = check_representativeness(frame, means, g, std::nextafter(report.abs_diff, 0.0));
  EXPECT_FALSE(below.overall_pass);
}

TEST(Representativeness, CountsMustMatch) {
  const auto& frame = table1_frame();
  EXPECT_THROW(check_representativeness(frame, std::vector<double>{1, 2}, table1_precisions(), 1), StructuralError);
}

TEST(SamplingCoverage, Table1PlanMeetsStratumPrecision) {
  const auto& frame = table1_frame();
  PrecisionSpec spec;
  spec.stratum_precisions = table1_precisions();
  spec.gamma = 0.05;
  const auto plan = allocate(spec, frame);
  const double g = 0.05 * frame.mean;
  const int reps = 10000;
  std::vector<int> hits(6, 0);
  int overall = 0;
  for (int r = 0; r < reps; ++r) {
    const auto sample = draw_sample(frame, plan, 77000000 + static_cast<std::uint64_t>(r));
    const auto report = check_representativeness(frame, sample, spec.stratum_precisions, g);
    for (std::size_t i = 0; i < 6; ++i) hits[i] += report.strata[i].pass;
    overall += report.overall_pass;
  }
  int worst = reps;
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_GE(hits[i], 0.93 * reps) << "stratum " << i + 1;
    worst = std::min(worst, hits[i]);
  }
  EXPECT_GE(overall, worst);
}

}  // namespace
}  // namespace repstrat
