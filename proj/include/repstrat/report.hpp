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
#include <cstdio>
#include <sstream>
#include <string>

#include "repstrat/allocation.hpp"
#include "repstrat/estimation.hpp"
#include "repstrat/montecarlo.hpp"
#include "repstrat/population.hpp"
#include "repstrat/sampling.hpp"

// Human-readable tables. Money is rendered to whole dollars.
namespace repstrat::report {

inline std::string whole_dollars(double v) {
  if (!std::isfinite(v)) return "-";
  const long long rounded = std::llround(v);
  std::string digits = std::to_string(rounded < 0 ? -rounded : rounded);
  for (int pos = static_cast<int>(digits.size()) - 3; pos > 0; pos -= 3) digits.insert(static_cast<std::size_t>(pos), ",");
  return (rounded < 0 ? "-" : "") + digits;
}

inline std::string fixed(double v, int decimals) {
  if (!std::isfinite(v)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

inline std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

inline std::string plan_table(const PopulationFrame& frame, const AllocationPlan& plan) {
  std::ostringstream out;
  out << pad_right("Stratum", 9) << pad_right("Dollar Value Strata", 22) << pad_left("N_i", 8) << pad_left("Ybar_i", 10)
      << pad_left("V_i", 12) << pad_left("g_i", 10) << pad_left("n_i", 6) << "  flags\n";
  for (std::size_t i = 0; i < frame.strata.size(); ++i) {
    const auto& s = frame.strata[i];
    const auto& a = plan.strata[i];
    std::string flags;
    if (a.sample.degenerate) flags += " degenerate";
    else if (a.sample.floor_applied) flags += " floor";
    if (a.sample.census) flags += " census";
    out << pad_right("(" + std::to_string(i + 1) + ")", 9) << pad_right(s.boundary.label(), 22)
        << pad_left(std::to_string(s.stats.count), 8) << pad_left(whole_dollars(s.stats.mean), 10)
        << pad_left(whole_dollars(s.stats.variance), 12) << pad_left(fixed(a.precision, 2), 10)
        << pad_left(std::to_string(a.sample.size), 6) << ' ' << flags << '\n';
  }
  out << pad_right("", 31) << pad_left(std::to_string(frame.total_count), 8) << pad_left("", 32)
      << pad_left(std::to_string(plan.total_size), 6) << '\n';
  out << "gamma = " << fixed(plan.gamma, 4);
  if (plan.alpha) out << "  alpha = " << fixed(*plan.alpha, 6);
  if (plan.overall_precision) out << "  g = " << fixed(*plan.overall_precision, 4);
  if (plan.predicted_alpha) out << "  predicted alpha = " << fixed(*plan.predicted_alpha, 6);
  if (plan.representative) out << "  representative: " << (*plan.representative ? "yes" : "no");
  out << "  fpc: " << (plan.fpc_applied ? "on" : "off") << '\n';
  if (frame.excluded_zero_count) out << frame.excluded_zero_count << " zero-dollar claim(s) excluded from N\n";
  if (!frame.certainty_claims.empty())
    out << frame.certainty_claims.size() << " certainty claim(s) >= " << frame.certainty_threshold.to_string()
        << " audited in full, book total " << whole_dollars(frame.certainty_total.dollars()) << '\n';
  return out.str();
}

inline std::string representativeness_table(const RepresentativenessReport& r) {
  std::ostringstream out;
  out << pad_right("Stratum", 9) << pad_left("ybar_i", 12) << pad_left("Ybar_i", 12) << pad_left("|diff|", 12)
      << pad_left("g_i", 12) << "  pass\n";
  for (std::size_t i = 0; i < r.strata.size(); ++i) {
    const auto& s = r.strata[i];
    out << pad_right("(" + std::to_string(i + 1) + ")", 9) << pad_left(fixed(s.sample_mean, 4), 12)
        << pad_left(fixed(s.population_mean, 4), 12) << pad_left(fixed(s.abs_diff, 4), 12)
        << pad_left(fixed(s.precision, 4), 12) << "  " << (s.pass ? "yes" : "no") << '\n';
  }
  out << "|ybar_st - Ybar| = |" << fixed(r.sample_mean, 4) << " - " << fixed(r.population_mean, 4)
      << "| = " << fixed(r.abs_diff, 6) << (r.overall_pass ? " <= " : " > ") << fixed(r.threshold, 4)
      << (r.overall_pass ? "  representative\n" : "  NOT representative\n");
  return out.str();
}

inline std::string estimate_table(const EstimateSet& e) {
  std::ostringstream out;
  const double confidence = 100.0 * (1.0 - e.difference.beta);
  const std::string conf = std::abs(confidence - std::round(confidence)) < 1e-9 ? fixed(confidence, 0) : fixed(confidence, 2);
  out << pad_right("Type of Estimator", 20) << pad_left("Estimator", 14) << pad_left("Lower " + conf + "% Confidence Bound", 32)
      << '\n';
  const std::pair<const char*, const EstimateReport*> rows[] = {
      {"Difference", &e.difference}, {"Separate Ratio", &e.separate_ratio}, {"Combined Ratio", &e.combined_ratio}};
  for (const auto& [name, r] : rows)
    out << pad_right(name, 20) << pad_left(whole_dollars(r->point), 14) << pad_left(whole_dollars(r->lcb), 32) << '\n';
  return out.str();
}

inline std::string coverage_table(const CoverageReport& r) {
  std::ostringstream out;
  out << "replications = " << r.replications << "  seed = " << r.seed << "  OP = " << whole_dollars(r.total_overpayment)
      << '\n';
  out << pad_right("Stratum", 9) << pad_left("n_i", 6) << pad_left("g_i", 12) << pad_left("coverage", 12) << '\n';
  for (std::size_t i = 0; i < r.stratum_coverage.size(); ++i)
    out << pad_right("(" + std::to_string(i + 1) + ")", 9) << pad_left(std::to_string(r.sample_sizes[i]), 6)
        << pad_left(fixed(r.stratum_precisions[i], 2), 12) << pad_left(fixed(r.stratum_coverage[i], 4), 12) << '\n';
  if (r.overall_coverage)
    out << "overall coverage at g = " << fixed(*r.overall_precision, 4) << ": " << fixed(*r.overall_coverage, 4) << '\n';
  out << pad_right("Estimator", 16) << pad_left("mean", 14) << pad_left("bias/SE", 10) << pad_left("LCB coverage", 14)
      << '\n';
  for (const auto& e : r.estimators)
    out << pad_right(std::string(to_string(e.estimator)), 16) << pad_left(whole_dollars(e.mean), 14)
        << pad_left(e.se > 0 ? fixed(e.bias / e.se, 2) : "-", 10) << pad_left(fixed(e.lcb_coverage, 4), 14) << '\n';
  return out.str();
}

}  // namespace repstrat::report
