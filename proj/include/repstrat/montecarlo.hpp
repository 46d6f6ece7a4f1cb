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
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

#include "repstrat/allocation.hpp"
#include "repstrat/errors.hpp"
#include "repstrat/estimation.hpp"
#include "repstrat/population.hpp"
#include "repstrat/random.hpp"
#include "repstrat/sampling.hpp"

namespace repstrat {

// Book amount families. Draws are rounded to cents and must land inside the
// stratum's [lower, upper].
struct TruncatedLognormal {
  double log_mean = 0.0;
  double log_sd = 1.0;
};
struct UniformBook {};
struct PointMass {
  Money value;
};
// Beta distribution rescaled to [lower, upper] with the given mean and
// variance (method of moments).
struct MomentBeta {
  double mean = 0.0;
  double variance = 0.0;
};
using BookDistribution = std::variant<TruncatedLognormal, UniformBook, PointMass, MomentBeta>;

// Given an error, d = y * B where B = 1 with probability `full_probability`
// (claim should not have been paid at all), otherwise B ~ Beta(a, b).
struct OverpaymentModel {
  double full_probability = 0.2;
  double beta_a = 1.0;
  double beta_b = 3.0;
};

struct ErrorModel {
  double error_rate = 0.0;
  OverpaymentModel overpayment;
};

// Error models for an existing population, one per stratum.
struct OverpaymentSpec {
  std::vector<ErrorModel> strata;
  std::uint64_t seed = 0;
};

struct SyntheticStratumSpec {
  std::size_t count = 0;
  Money lower;
  Money upper;
  BookDistribution book = TruncatedLognormal{};
  double error_rate = 0.0;
  OverpaymentModel overpayment;
};

struct SyntheticPopulationSpec {
  std::vector<SyntheticStratumSpec> strata;
  std::optional<Money> certainty_threshold;  // default: last upper + 0.01
  std::uint64_t seed = 0;
};

struct PopulationTruth {
  double total_overpayment = 0.0;               // OP
  std::vector<double> stratum_mean;             // mu_i
  std::vector<double> stratum_variance;         // sigma_i^2, divisor N_i
  double mean = 0.0;                            // mu = sum N_i mu_i / N
};

struct SyntheticPopulation {
  PopulationFrame frame;
  std::vector<std::vector<Money>> overpayments;  // aligned with frame.strata[i].claims
  PopulationTruth truth;
};

namespace detail {

inline double draw_beta(Generator& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return (x + y) > 0.0 ? x / (x + y) : 0.5;
}

inline Money draw_book(Generator& rng, const SyntheticStratumSpec& s, std::size_t stratum) {
  const std::string name = "stratum " + std::to_string(stratum + 1);
  const double lo = s.lower.dollars();
  const double hi = s.upper.dollars();
  auto to_cents = [&](double v) {
    return Money::from_cents(std::clamp(static_cast<std::int64_t>(std::llround(v * 100.0)), s.lower.cents(),
                                        s.upper.cents()));
  };
  return std::visit(
      [&](const auto& dist) -> Money {
        using T = std::decay_t<decltype(dist)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          if (!(s.lower <= dist.value && dist.value <= s.upper))
            throw SpecError(name + ": point mass outside stratum bounds");
          return dist.value;
        } else if constexpr (std::is_same_v<T, UniformBook>) {
          return to_cents(lo + (hi - lo) * uniform_unit(rng));
        } else if constexpr (std::is_same_v<T, MomentBeta>) {
          const double width = hi - lo;
          const double m = (dist.mean - lo) / width;
          const double v = dist.variance / (width * width);
          if (!(m > 0.0 && m < 1.0) || !(v > 0.0 && v < m * (1.0 - m)))
            throw SpecError(name + ": mean/variance not attainable within stratum bounds");
          const double k = m * (1.0 - m) / v - 1.0;
          return to_cents(lo + width * draw_beta(rng, m * k, (1.0 - m) * k));
        } else {
          if (!(dist.log_sd > 0.0)) throw SpecError(name + ": lognormal log_sd must be positive");
          std::lognormal_distribution<double> ln(dist.log_mean, dist.log_sd);
          for (int attempt = 0; attempt < 10000; ++attempt) {
            const double v = ln(rng);
            const double cents = std::round(v * 100.0);
            if (cents >= static_cast<double>(s.lower.cents()) && cents <= static_cast<double>(s.upper.cents()))
              return Money::from_cents(static_cast<std::int64_t>(cents));
          }
          throw SpecError(name + ": lognormal parameters rarely produce books inside the stratum");
        }
      },
      s.book);
}

}  // namespace detail

/// Draws overpayments for every claim of an existing frame. Claim j of
/// stratum i is in error with probability error_rate_i; the truth is summed
/// exactly from the drawn cents.
inline SyntheticPopulation attach_overpayments(PopulationFrame frame, std::span<const ErrorModel> models,
                                               std::uint64_t seed) {
  if (models.size() != frame.strata.size())
    throw StructuralError("error models cover " + std::to_string(models.size()) + " strata, frame has " +
                          std::to_string(frame.strata.size()));
  SyntheticPopulation out;
  out.overpayments.resize(frame.strata.size());
  std::int64_t total_cents = 0;
  for (std::size_t i = 0; i < frame.strata.size(); ++i) {
    const std::string name = "stratum " + std::to_string(i + 1);
    const auto& m = models[i];
    const auto& op = m.overpayment;
    if (!(m.error_rate >= 0.0 && m.error_rate <= 1.0)) throw SpecError(name + ": error_rate must lie in [0, 1]");
    if (!(op.full_probability >= 0.0 && op.full_probability <= 1.0) || !(op.beta_a > 0.0) || !(op.beta_b > 0.0))
      throw SpecError(name + ": invalid overpayment model");
    if (frame.strata[i].claims.empty()) throw SpecError(name + " is empty");

    Generator rng = make_generator(seed, (std::uint64_t{1} << 31) + i);
    auto& d = out.overpayments[i];
    d.reserve(frame.strata[i].claims.size());
    std::int64_t cents = 0;
    for (const auto& claim : frame.strata[i].claims) {
      Money v;
      if (uniform_unit(rng) < m.error_rate) {
        const double fraction = uniform_unit(rng) < op.full_probability
                                    ? 1.0
                                    : detail::draw_beta(rng, op.beta_a, op.beta_b);
        const std::int64_t book = claim.amount.cents();
        v = Money::from_cents(std::clamp<std::int64_t>(std::llround(static_cast<double>(book) * fraction), 0, book));
      }
      cents += v.cents();
      d.push_back(v);
    }
    total_cents += cents;
    const double mu = static_cast<double>(cents) / 100.0 / static_cast<double>(d.size());
    double ss = 0.0;
    for (Money v : d) ss += (v.dollars() - mu) * (v.dollars() - mu);
    out.truth.stratum_mean.push_back(mu);
    out.truth.stratum_variance.push_back(ss / static_cast<double>(d.size()));
  }
  out.truth.total_overpayment = static_cast<double>(total_cents) / 100.0;
  out.truth.mean = out.truth.total_overpayment / static_cast<double>(frame.total_count);
  out.frame = std::move(frame);
  return out;
}

/// Builds a synthetic audited population. Deterministic in spec.seed.
inline SyntheticPopulation generate_population(const SyntheticPopulationSpec& spec) {
  if (spec.strata.empty()) throw SpecError("synthetic population needs at least one stratum");
  std::vector<StratumBoundary> boundaries;
  std::vector<ErrorModel> models;
  for (std::size_t i = 0; i < spec.strata.size(); ++i) {
    const auto& s = spec.strata[i];
    const std::string name = "stratum " + std::to_string(i + 1);
    if (s.count < 2) throw SpecError(name + ": count must be at least 2");
    if (s.lower.cents() <= 0) throw SpecError(name + ": lower bound must be positive");
    boundaries.push_back({s.lower, s.upper});
    models.push_back({s.error_rate, s.overpayment});
  }
  const Money threshold =
      spec.certainty_threshold.value_or(boundaries.back().upper + Money::from_cents(1));

  std::vector<ClaimRecord> claims;
  for (std::size_t i = 0; i < spec.strata.size(); ++i) {
    const auto& s = spec.strata[i];
    Generator rng = make_generator(spec.seed, i);
    for (std::size_t j = 0; j < s.count; ++j)
      claims.push_back({"s" + std::to_string(i + 1) + "-" + std::to_string(j + 1), detail::draw_book(rng, s, i)});
  }

  PopulationFrame frame;
  try {
    frame = stratify(claims, boundaries, threshold);
  } catch (const DomainError& e) {
    throw SpecError(std::string("synthetic strata: ") + e.what());
  }
  if (!frame.certainty_claims.empty())
    throw SpecError("synthetic strata: certainty threshold falls inside a stratum");
  return attach_overpayments(std::move(frame), models, spec.seed);
}

/// Sum by recursive halving; the result depends only on the order of `v`.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct CoverageOptions {
  std::size_t replications = 10000;
  double beta = 0.05;
  // Overall precision g for the |ybar_st - Ybar| <= g check. The plan's
  // resolved g wins; otherwise `overall_precision`, then
  // `relative_overall_precision` * Ybar. With none of these the overall
  // check is skipped.
  std::optional<double> overall_precision;
  std::optional<double> relative_overall_precision;
  bool keep_replications = false;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct ReplicationRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  double sample_mean = 0.0;
  std::vector<std::uint8_t> stratum_hit;
  bool overall_hit = false;
  std::array<double, 3> point{};
  std::array<double, 3> lcb{};
};

struct EstimatorCoverage {
  Estimator estimator = Estimator::kDifference;
  double mean = 0.0;
  double sd = 0.0;
  double se = 0.0;  // sd / sqrt(replications)
  double bias = 0.0;
  double max_abs_error = 0.0;
  double lcb_coverage = 0.0;
  double lcb_coverage_se = 0.0;
};

struct CoverageReport {
  std::size_t replications = 0;
  std::uint64_t seed = 0;
  double beta = 0.0;
  double total_overpayment = 0.0;
  double population_mean = 0.0;
  std::vector<std::size_t> sample_sizes;
  std::vector<double> stratum_precisions;
  std::vector<double> stratum_coverage;
  std::vector<double> stratum_coverage_se;
  std::optional<double> overall_precision;
  std::optional<double> overall_coverage;
  std::optional<double> overall_coverage_se;
  std::array<EstimatorCoverage, 3> estimators{};
  std::vector<ReplicationRecord> records;
};

/// Seed of replication r; disjoint from the population generator's keys.
inline std::uint64_t replication_seed(std::uint64_t seed, std::size_t replication) {
  return substream_seed(seed, (std::uint64_t{1} << 32) + replication);
}

namespace detail {

struct Frequency {
  double value = 0.0;
  double se = 0.0;
};

inline Frequency frequency(std::span<const double> hits) {
  const double n = static_cast<double>(hits.size());
  const double p = pairwise_sum(hits) / n;
  return {p, std::sqrt(p * (1.0 - p) * n / (n - 1.0) / n)};
}

}  // namespace detail

/// Runs `options.replications` independent stratified samples from a
/// generated population and reports empirical coverage of the stratum and
/// overall representativeness statements, plus estimator bias and LCB
/// coverage. Replication r draws with replication_seed(seed, r), so results
/// do not depend on the thread count.
inline CoverageReport run_coverage(const SyntheticPopulation& population, std::uint64_t seed,
                                   const PrecisionSpec& plan_spec, const CoverageOptions& options) {
  if (options.replications < 1000) throw DomainError("run_coverage needs at least 1000 replications");
  if (!(options.beta > 0.0 && options.beta < 1.0)) throw DomainError("beta must lie in (0, 1)");
  const PopulationFrame& frame = population.frame;
  const AllocationPlan plan = allocate(plan_spec, frame);
  const std::vector<std::size_t> sizes = plan.sizes();
  const std::vector<double> precisions = plan.stratum_precisions();
  std::optional<double> g = plan.overall_precision;
  if (!g && options.overall_precision) g = options.overall_precision;
  if (!g && options.relative_overall_precision) g = *options.relative_overall_precision * frame.mean;

  const std::size_t reps = options.replications;
  const std::size_t strata = frame.strata.size();
  const double op = population.truth.total_overpayment;
  const double slack = 1e-9 * std::max(1.0, std::abs(op));

  std::vector<ReplicationRecord> records(reps);
  auto run_one = [&](std::size_t r) {
    ReplicationRecord& rec = records[r];
    rec.index = r;
    rec.seed = replication_seed(seed, r);
    rec.stratum_hit.assign(strata, 0);
    const auto indices = draw_sample_indices(frame, sizes, rec.seed);
    std::vector<StratumSampleStats> stats;
    stats.reserve(strata);
    double weighted = 0.0;
    std::vector<double> d, y;
    for (std::size_t i = 0; i < strata; ++i) {
      const auto& claims = frame.strata[i].claims;
      d.clear();
      y.clear();
      for (std::size_t k : indices[i]) {
        d.push_back(population.overpayments[i][k].dollars());
        y.push_back(claims[k].amount.dollars());
      }
      stats.push_back(stratum_sample_stats(d, y));
      const double diff = std::abs(stats.back().ybar - frame.strata[i].stats.mean);
      rec.stratum_hit[i] = diff <= precisions[i] ? 1 : 0;
      weighted += static_cast<double>(claims.size()) * stats.back().ybar;
    }
    rec.sample_mean = weighted / static_cast<double>(frame.total_count);
    rec.overall_hit = g && std::abs(rec.sample_mean - frame.mean) <= *g;
    const EstimateSet est = estimate_all(frame, stats, options.beta);
    const std::array<const EstimateReport*, 3> all = {&est.difference, &est.separate_ratio, &est.combined_ratio};
    for (std::size_t e = 0; e < 3; ++e) {
      rec.point[e] = all[e]->point;
      rec.lcb[e] = all[e]->lcb;
    }
  };

  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, reps));
  if (threads <= 1) {
    for (std::size_t r = 0; r < reps; ++r) run_one(r);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
          try {
            for (std::size_t r = t; r < reps; r += threads) run_one(r);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  CoverageReport report;
  report.replications = reps;
  report.seed = seed;
  report.beta = options.beta;
  report.total_overpayment = op;
  report.population_mean = frame.mean;
  report.sample_sizes = sizes;
  report.stratum_precisions = precisions;
  report.overall_precision = g;

  std::vector<double> column(reps);
  for (std::size_t i = 0; i < strata; ++i) {
    for (std::size_t r = 0; r < reps; ++r) column[r] = records[r].stratum_hit[i];
    const auto f = detail::frequency(column);
    report.stratum_coverage.push_back(f.value);
    report.stratum_coverage_se.push_back(f.se);
  }
  if (g) {
    for (std::size_t r = 0; r < reps; ++r) column[r] = records[r].overall_hit ? 1.0 : 0.0;
    const auto f = detail::frequency(column);
    report.overall_coverage = f.value;
    report.overall_coverage_se = f.se;
  }
  const std::array<Estimator, 3> kinds = {Estimator::kDifference, Estimator::kSeparateRatio,
                                          Estimator::kCombinedRatio};
  const double n = static_cast<double>(reps);
  for (std::size_t e = 0; e < 3; ++e) {
    EstimatorCoverage& c = report.estimators[e];
    c.estimator = kinds[e];
    for (std::size_t r = 0; r < reps; ++r) column[r] = records[r].point[e];
    c.mean = pairwise_sum(column) / n;
    for (std::size_t r = 0; r < reps; ++r) {
      const double dev = records[r].point[e] - c.mean;
      c.max_abs_error = std::max(c.max_abs_error, std::abs(records[r].point[e] - op));
      column[r] = dev * dev;
    }
    c.sd = std::sqrt(pairwise_sum(column) / (n - 1.0));
    c.se = c.sd / std::sqrt(n);
    c.bias = c.mean - op;
    for (std::size_t r = 0; r < reps; ++r) column[r] = records[r].lcb[e] <= op + slack ? 1.0 : 0.0;
    const auto f = detail::frequency(column);
    c.lcb_coverage = f.value;
    c.lcb_coverage_se = f.se;
  }
  if (options.keep_replications) report.records = std::move(records);
  return report;
}

inline CoverageReport run_coverage(const SyntheticPopulationSpec& spec, const PrecisionSpec& plan_spec,
                                   const CoverageOptions& options) {
  return run_coverage(generate_population(spec), spec.seed, plan_spec, options);
}

}  // namespace repstrat
