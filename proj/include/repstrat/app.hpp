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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "repstrat/allocation.hpp"
#include "repstrat/errors.hpp"
#include "repstrat/estimation.hpp"
#include "repstrat/montecarlo.hpp"
#include "repstrat/population.hpp"
#include "repstrat/report.hpp"
#include "repstrat/sampling.hpp"
#include "repstrat/serialize.hpp"

// The plan / sample / estimate / simulate pipelines. The CLI and the HTTP
// facade both go through these so their outputs agree field for field.
namespace repstrat::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNotRepresentative = 3;

inline constexpr std::string_view kVersion = "1.0.0";

inline Json parse_json(std::string_view text, const char* what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

inline PopulationFrame build_frame(std::string_view population_csv, const Json& strata) {
  const auto claims = load_population(population_csv);
  return stratify(claims, strata_config_from_json(strata));
}

inline PrecisionSpec build_spec(const Json& plan_spec, std::optional<bool> fpc_override) {
  PrecisionSpec spec = precision_spec_from_json(plan_spec);
  if (fpc_override) spec.use_fpc = *fpc_override;
  return spec;
}

struct PlanOutput {
  PopulationFrame frame;
  AllocationPlan plan;
  Json document;  // {"frame": ..., "plan": ...}
  std::string table;
};

inline PlanOutput run_plan(const PopulationFrame& frame, const PrecisionSpec& spec) {
  PlanOutput out{frame, allocate(spec, frame), {}, {}};
  out.document = {{"frame", to_json(out.frame)}, {"plan", to_json(out.plan)}};
  out.table = report::plan_table(out.frame, out.plan);
  return out;
}

struct SampleOutput {
  SampleSet sample;
  RepresentativenessReport representativeness;
  std::string csv;
  Json sidecar;  // {seed, n_i, ybar_i, ybar_st, ..., representativeness}
  std::string table;
  int exit_code = kExitOk;
};

/// Draws the sample for `spec` and checks it. The overall threshold is
/// `overall_precision` if given, else the plan's g, else
/// sqrt(sum W_i^2 g_i^2), the tightest g the stratum precisions support.
inline SampleOutput run_sample(const PopulationFrame& frame, const PrecisionSpec& spec, std::uint64_t seed,
                               std::optional<double> overall_precision) {
  const AllocationPlan plan = allocate(spec, frame);
  const auto precisions = plan.stratum_precisions();
  double g = 0.0;
  if (overall_precision) {
    if (!(*overall_precision > 0.0)) throw DomainError("overall precision must be positive");
    g = *overall_precision;
  } else if (plan.overall_precision) {
    g = *plan.overall_precision;
  } else {
    g = implied_overall_precision(frame, precisions);
  }
  SampleOutput out;
  out.sample = draw_sample(frame, plan, seed);
  out.representativeness = check_representativeness(frame, out.sample, precisions, g);
  out.csv = sample_csv(out.sample);
  out.sidecar = sample_sidecar(out.sample);
  out.sidecar["representativeness"] = to_json(out.representativeness);
  out.table = report::representativeness_table(out.representativeness);
  out.exit_code = out.representativeness.overall_pass ? kExitOk : kExitNotRepresentative;
  return out;
}

struct EstimateOutput {
  std::vector<StratumSampleStats> stats;
  EstimateSet estimates;
  Json document;
  std::string table;
};

inline EstimateOutput run_estimate(const PopulationFrame& frame, std::vector<StratumSampleStats> stats,
                                   double beta) {
  EstimateOutput out;
  out.stats = std::move(stats);
  out.estimates = estimate_all(frame, out.stats, beta);
  out.document = to_json(out.estimates, out.stats);
  out.document["certainty"] = {{"count", frame.certainty_claims.size()},
                               {"book_total", frame.certainty_total.dollars()},
                               {"note", "certainty claims are audited in full and excluded from these estimates"}};
  out.table = report::estimate_table(out.estimates);
  return out;
}

inline EstimateOutput run_estimate(const PopulationFrame& frame, std::string_view audited_csv, double beta) {
  return run_estimate(frame, sample_stats(load_audited(audited_csv, frame)), beta);
}

inline EstimateOutput run_estimate_summary(const PopulationFrame& frame, const Json& summary, double beta) {
  return run_estimate(frame, audited_summary_from_json(summary), beta);
}

struct SimulateOutput {
  CoverageReport report;
  Json document;
  std::string table;
  std::string replications_csv;
};

inline SimulateOutput run_simulate(const SyntheticPopulation& population, std::uint64_t seed,
                                   const PrecisionSpec& plan_spec, const CoverageOptions& options) {
  SimulateOutput out;
  out.report = run_coverage(population, seed, plan_spec, options);
  out.document = to_json(out.report);
  out.table = report::coverage_table(out.report);
  if (options.keep_replications) out.replications_csv = repstrat::replications_csv(out.report);
  return out;
}

inline SimulateOutput run_simulate(const SyntheticPopulationSpec& spec, const PrecisionSpec& plan_spec,
                                   const CoverageOptions& options) {
  return run_simulate(generate_population(spec), spec.seed, plan_spec, options);
}

// Simulation on an existing stratified population with synthetic errors.
inline SimulateOutput run_simulate(PopulationFrame frame, const OverpaymentSpec& errors,
                                   const PrecisionSpec& plan_spec, const CoverageOptions& options) {
  return run_simulate(attach_overpayments(std::move(frame), errors.strata, errors.seed), errors.seed, plan_spec,
                      options);
}

}  // namespace repstrat::app
