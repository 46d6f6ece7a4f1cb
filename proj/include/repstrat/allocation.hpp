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
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "repstrat/errors.hpp"
#include "repstrat/normal.hpp"
#include "repstrat/population.hpp"

namespace repstrat {

// How the stratum precisions g_i are specified. The five cases tie g_i to a
// single parameter p (C for case A, f otherwise) times a per-stratum shape:
//   A: g_i = C               B: g_i = f * Ybar_i        C: g_i = f * sqrt(V_i / W_i)
//   D: g_i = f * V_i^(1/4) / sqrt(W_i)                  E: g_i = f * sqrt(Ybar_i)
enum class PrecisionMode { kExplicit, kCaseA, kCaseB, kCaseC, kCaseD, kCaseE };

inline std::string_view to_string(PrecisionMode mode) {
  switch (mode) {
    case PrecisionMode::kExplicit: return "explicit";
    case PrecisionMode::kCaseA: return "caseA";
    case PrecisionMode::kCaseB: return "caseB";
    case PrecisionMode::kCaseC: return "caseC";
    case PrecisionMode::kCaseD: return "caseD";
    case PrecisionMode::kCaseE: return "caseE";
  }
  return "?";
}

inline PrecisionMode parse_precision_mode(std::string_view name) {
  for (auto m : {PrecisionMode::kExplicit, PrecisionMode::kCaseA, PrecisionMode::kCaseB, PrecisionMode::kCaseC,
                 PrecisionMode::kCaseD, PrecisionMode::kCaseE})
    if (to_string(m) == name) return m;
  throw SpecError("unknown precision mode '" + std::string(name) + "'");
}

struct PrecisionSpec {
  PrecisionMode mode = PrecisionMode::kExplicit;
  std::vector<double> stratum_precisions;  // explicit g_i
  std::optional<double> case_parameter;    // C (case A) or f (cases B-E)
  std::optional<double> gamma;             // per-stratum tail probability
  std::optional<double> alpha;             // overall tail probability
  std::optional<double> overall_precision; // g
  bool use_fpc = true;
};

// Outcome of resolve_case: the g_i list plus whichever of {p, alpha, gamma, g}
// could be determined. gamma is always resolved.
struct ResolvedPrecision {
  std::vector<double> stratum_precisions;
  std::optional<double> case_parameter;
  double gamma = 0.0;
  std::optional<double> alpha;
  std::optional<double> overall_precision;
};

struct SampleSize {
  double raw = 0.0;
  std::size_t size = 0;
  bool floor_applied = false;  // ceil(raw) < 2
  bool capped = false;         // ceil(raw) > N_i
  bool census = false;         // size == N_i
  bool degenerate = false;     // V_i == 0
};

struct StratumAllocation {
  double precision = 0.0;  // g_i
  SampleSize sample;
  double weight = 0.0;     // w_i = n_i / n
};

struct AllocationPlan {
  PrecisionMode mode = PrecisionMode::kExplicit;
  std::vector<StratumAllocation> strata;
  std::size_t total_size = 0;
  std::optional<double> case_parameter;
  double gamma = 0.0;
  std::optional<double> alpha;              // from the precision relation, before rounding
  std::optional<double> overall_precision;  // g
  std::optional<double> predicted_alpha;    // achieved integer n_i, fpc-aware
  std::optional<bool> representative;       // sum W_i^2 (g_i/g)^2 <= 1
  bool fpc_applied = false;
  std::vector<std::string> warnings;

  std::vector<double> stratum_precisions() const {
    std::vector<double> g;
    g.reserve(strata.size());
    for (const auto& s : strata) g.push_back(s.precision);
    return g;
  }
  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> n;
    n.reserve(strata.size());
    for (const auto& s : strata) n.push_back(s.sample.size);
    return n;
  }
};

namespace detail {

inline void check_probability(const char* name, double p) {
  if (!(p > 0.0 && p < 1.0)) throw SpecError(std::string(name) + " must lie in (0, 1)");
}

inline void check_positive(const char* name, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) throw SpecError(std::string(name) + " must be positive");
}

inline void require_populated(const PopulationFrame& frame) {
  if (frame.strata.empty()) throw DomainError("frame has no strata");
  for (std::size_t i = 0; i < frame.strata.size(); ++i)
    if (frame.strata[i].stats.count == 0)
      throw DomainError("stratum " + std::to_string(i + 1) + " is empty");
}

// Per-stratum multiplier h_i with g_i = p * h_i.
inline std::vector<double> case_shape(PrecisionMode mode, const PopulationFrame& frame) {
  require_populated(frame);
  std::vector<double> h;
  h.reserve(frame.strata.size());
  for (std::size_t i = 0; i < frame.strata.size(); ++i) {
    const auto& st = frame.strata[i].stats;
    const bool needs_mean = mode == PrecisionMode::kCaseB || mode == PrecisionMode::kCaseE;
    if (needs_mean && !(st.mean > 0.0))
      throw DomainError("stratum " + std::to_string(i + 1) + " has non-positive mean");
    switch (mode) {
      case PrecisionMode::kCaseA: h.push_back(1.0); break;
      case PrecisionMode::kCaseB: h.push_back(st.mean); break;
      case PrecisionMode::kCaseC: h.push_back(std::sqrt(st.variance / st.weight)); break;
      case PrecisionMode::kCaseD: h.push_back(std::pow(st.variance, 0.25) / std::sqrt(st.weight)); break;
      case PrecisionMode::kCaseE: h.push_back(std::sqrt(st.mean)); break;
      case PrecisionMode::kExplicit: throw SpecError("explicit mode has no case shape");
    }
  }
  return h;
}

// sum_i W_i^2 g_i^2
inline double weighted_square_sum(const PopulationFrame& frame, std::span<const double> g) {
  double sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double w = frame.strata[i].stats.weight;
    sum += w * w * g[i] * g[i];
  }
  return sum;
}

}  // namespace detail

/// Sample size for one stratum so that P(|ybar_i - Ybar_i| <= g_i) >= 1 - gamma
/// under the normal approximation. With fpc:
///   n = z^2 V N / (g^2 (N - 1) + z^2 V),
/// otherwise n = z^2 V / g^2, where z = z_{gamma/2}. The integer size is
/// min(N, max(2, ceil(n))).
inline SampleSize stratum_sample_size(std::size_t population, double variance, double precision, double gamma,
                                      bool use_fpc) {
  if (population < 2) throw DomainError("stratum sample size needs N_i >= 2");
  if (!(variance >= 0.0)) throw DomainError("stratum variance must be non-negative");
  if (!(precision > 0.0)) throw DomainError("stratum precision g_i must be positive");
  detail::check_probability("gamma", gamma);

  SampleSize out;
  const double n_pop = static_cast<double>(population);
  if (variance == 0.0) {
    out.degenerate = true;
    out.raw = 0.0;
  } else {
    const double z = two_sided_critical(gamma);
    const double zv = z * z * variance;
    out.raw = use_fpc ? zv * n_pop / (precision * precision * (n_pop - 1.0) + zv)
                      : zv / (precision * precision);
  }
  // Absorb rounding noise so an exact integer n_raw is not bumped up by one.
  const double ceiled = std::ceil(out.raw - 1e-9);
  out.floor_applied = ceiled < 2.0;
  out.capped = ceiled > n_pop;
  out.size = static_cast<std::size_t>(std::min(n_pop, std::max(2.0, ceiled)));
  out.census = out.size == population;
  return out;
}

/// True iff sum_i W_i^2 (g_i / g)^2 <= 1, in which case the overall sample
/// mean is within g of Ybar with probability at least 1 - gamma.
inline bool representativeness_condition(const PopulationFrame& frame, std::span<const double> precisions,
                                         double overall_precision) {
  if (precisions.size() != frame.strata.size())
    throw StructuralError("representativeness_condition: g_i count does not match strata");
  return detail::weighted_square_sum(frame, precisions) / (overall_precision * overall_precision) <= 1.0 + 1e-12;
}

/// Turns a PrecisionSpec into concrete g_i, solving the missing member of
/// {p, alpha, gamma, g} from
///   sum W_i^2 g_i^2 = g^2 z_{gamma/2}^2 / z_{alpha/2}^2.
/// Case modes accept exactly three of the four, or just {p, gamma} (which
/// fixes the g_i and leaves alpha and g open).
inline ResolvedPrecision resolve_case(const PrecisionSpec& spec, const PopulationFrame& frame) {
  if (spec.gamma) detail::check_probability("gamma", *spec.gamma);
  if (spec.alpha) detail::check_probability("alpha", *spec.alpha);
  if (spec.overall_precision) detail::check_positive("g", *spec.overall_precision);
  if (spec.case_parameter) detail::check_positive(spec.mode == PrecisionMode::kCaseA ? "C" : "f", *spec.case_parameter);

  ResolvedPrecision out;
  const std::size_t strata = frame.strata.size();

  if (spec.mode == PrecisionMode::kExplicit) {
    detail::require_populated(frame);
    if (spec.case_parameter) throw SpecError("explicit mode takes g_i, not C or f");
    if (!spec.gamma) throw SpecError("explicit mode requires gamma");
    if (spec.stratum_precisions.size() != strata)
      throw SpecError("explicit mode needs " + std::to_string(strata) + " g_i values, got " +
                      std::to_string(spec.stratum_precisions.size()));
    for (double g : spec.stratum_precisions) detail::check_positive("g_i", g);
    if (spec.alpha && spec.overall_precision) throw SpecError("explicit mode: give at most one of alpha and g");
    out.stratum_precisions = spec.stratum_precisions;
    out.gamma = *spec.gamma;
    const double root = std::sqrt(detail::weighted_square_sum(frame, out.stratum_precisions));
    const double z_gamma = two_sided_critical(out.gamma);
    if (spec.overall_precision) {
      out.overall_precision = spec.overall_precision;
      out.alpha = two_sided_tail(z_gamma * *spec.overall_precision / root);
    } else if (spec.alpha) {
      out.alpha = spec.alpha;
      out.overall_precision = two_sided_critical(*spec.alpha) * root / z_gamma;
    }
    return out;
  }

  if (!spec.stratum_precisions.empty()) throw SpecError("g_i may only be given in explicit mode");
  const std::vector<double> shape = detail::case_shape(spec.mode, frame);
  const double root = std::sqrt(detail::weighted_square_sum(frame, shape));  // sqrt(sum W_i^2 h_i^2)

  const int given = int(spec.case_parameter.has_value()) + int(spec.gamma.has_value()) +
                    int(spec.alpha.has_value()) + int(spec.overall_precision.has_value());
  if (given == 4) throw SpecError("over-determined: give exactly three of {C/f, alpha, gamma, g}");
  const bool minimal = given == 2 && spec.case_parameter && spec.gamma;
  if (given < 3 && !minimal)
    throw SpecError("under-determined: give three of {C/f, alpha, gamma, g}, or C/f with gamma");

  out.case_parameter = spec.case_parameter;
  out.alpha = spec.alpha;
  out.overall_precision = spec.overall_precision;
  if (minimal) {
    out.gamma = *spec.gamma;
  } else if (!spec.case_parameter) {
    const double z_gamma = two_sided_critical(*spec.gamma);
    const double z_alpha = two_sided_critical(*spec.alpha);
    out.case_parameter = *spec.overall_precision * z_gamma / (z_alpha * root);
    out.gamma = *spec.gamma;
  } else if (!spec.overall_precision) {
    const double z_gamma = two_sided_critical(*spec.gamma);
    const double z_alpha = two_sided_critical(*spec.alpha);
    out.overall_precision = *spec.case_parameter * z_alpha * root / z_gamma;
    out.gamma = *spec.gamma;
  } else if (!spec.gamma) {
    const double z_alpha = two_sided_critical(*spec.alpha);
    out.gamma = two_sided_tail(*spec.case_parameter * z_alpha * root / *spec.overall_precision);
    if (!(out.gamma > 0.0)) throw SpecError("solved gamma underflows to zero");
  } else {
    const double z_gamma = two_sided_critical(*spec.gamma);
    out.alpha = two_sided_tail(*spec.overall_precision * z_gamma / (*spec.case_parameter * root));
    if (!(*out.alpha > 0.0)) throw SpecError("solved alpha underflows to zero");
    out.gamma = *spec.gamma;
  }

  out.stratum_precisions.reserve(strata);
  for (double h : shape) out.stratum_precisions.push_back(*out.case_parameter * h);
  return out;
}

/// Tail probability alpha = P(|ybar_st - Ybar| > g) under the normal
/// approximation, using the plan's integer n_i and, when the plan used it,
/// the finite population correction.
inline double predicted_overall_precision(const PopulationFrame& frame, const AllocationPlan& plan,
                                          double overall_precision) {
  if (plan.strata.size() != frame.strata.size())
    throw StructuralError("plan has " + std::to_string(plan.strata.size()) + " strata, frame has " +
                          std::to_string(frame.strata.size()));
  if (!(overall_precision > 0.0)) throw DomainError("g must be positive");
  double variance = 0.0;
  for (std::size_t i = 0; i < frame.strata.size(); ++i) {
    const auto& st = frame.strata[i].stats;
    const double n = static_cast<double>(plan.strata[i].sample.size);
    if (!(n > 0.0)) throw DomainError("plan has an empty stratum sample");
    const double factor = plan.fpc_applied ? (1.0 / n - 1.0 / static_cast<double>(st.count)) : 1.0 / n;
    variance += st.weight * st.weight * st.variance * factor;
  }
  if (variance <= 0.0) return 0.0;
  return two_sided_tail(overall_precision / std::sqrt(variance));
}

/// Builds the per-stratum allocation for a precision spec.
inline AllocationPlan allocate(const PrecisionSpec& spec, const PopulationFrame& frame) {
  detail::require_populated(frame);
  for (std::size_t i = 0; i < frame.strata.size(); ++i)
    if (frame.strata[i].stats.count < 2)
      throw DomainError("stratum " + std::to_string(i + 1) + " has fewer than 2 claims");

  const ResolvedPrecision resolved = resolve_case(spec, frame);

  AllocationPlan plan;
  plan.mode = spec.mode;
  plan.fpc_applied = spec.use_fpc;
  plan.case_parameter = resolved.case_parameter;
  plan.gamma = resolved.gamma;
  plan.alpha = resolved.alpha;
  plan.overall_precision = resolved.overall_precision;

  for (std::size_t i = 0; i < frame.strata.size(); ++i) {
    const auto& st = frame.strata[i].stats;
    StratumAllocation a;
    a.precision = resolved.stratum_precisions[i];
    a.sample = stratum_sample_size(st.count, st.variance, a.precision, resolved.gamma, spec.use_fpc);
    plan.total_size += a.sample.size;
    const std::string name = "stratum " + std::to_string(i + 1);
    if (a.sample.degenerate) plan.warnings.push_back(name + ": zero variance, n_i set to 2");
    else if (a.sample.floor_applied) plan.warnings.push_back(name + ": n_i raised to the minimum of 2");
    if (a.sample.census) plan.warnings.push_back(name + ": census (n_i = N_i)");
    plan.strata.push_back(a);
  }
  for (auto& a : plan.strata)
    a.weight = static_cast<double>(a.sample.size) / static_cast<double>(plan.total_size);

  if (plan.overall_precision) {
    plan.predicted_alpha = predicted_overall_precision(frame, plan, *plan.overall_precision);
    plan.representative =
        representativeness_condition(frame, resolved.stratum_precisions, *plan.overall_precision);
  }
  return plan;
}

/// n_raw_i / sum_j n_raw_j: the allocation weights before rounding.
inline std::vector<double> raw_weights(const AllocationPlan& plan) {
  double total = 0.0;
  for (const auto& s : plan.strata) total += s.sample.raw;
  std::vector<double> w;
  w.reserve(plan.strata.size());
  for (const auto& s : plan.strata) w.push_back(s.sample.raw / total);
  return w;
}

/// Smallest g for which the representativeness condition holds at the given
/// stratum precisions: sqrt(sum W_i^2 g_i^2).
inline double implied_overall_precision(const PopulationFrame& frame, std::span<const double> precisions) {
  return std::sqrt(detail::weighted_square_sum(frame, precisions));
}

}  // namespace repstrat
