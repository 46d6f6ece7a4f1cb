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
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "repstrat/allocation.hpp"
#include "repstrat/errors.hpp"
#include "repstrat/estimation.hpp"
#include "repstrat/montecarlo.hpp"
#include "repstrat/population.hpp"
#include "repstrat/random.hpp"
#include "repstrat/sampling.hpp"

// JSON wire formats. Reals are written at full round-trip precision.
namespace repstrat {

using Json = nlohmann::json;

namespace detail {

inline void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw SpecError(std::string(what) + " must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key)) throw SpecError(std::string(what) + ": unknown key '" + key + "'");
}

inline double number_at(const Json& j, const char* key, const char* what) {
  if (!j.contains(key)) throw SpecError(std::string(what) + ": missing '" + key + "'");
  if (!j.at(key).is_number()) throw SpecError(std::string(what) + ": '" + key + "' must be a number");
  return j.at(key).get<double>();
}

inline std::optional<double> optional_number(const Json& j, const char* key, const char* what) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return number_at(j, key, what);
}

inline Money money_at(const Json& j, const char* key, const char* what) {
  try {
    return Money::from_dollars(number_at(j, key, what));
  } catch (const DomainError& e) {
    throw SpecError(std::string(what) + ": '" + key + "': " + e.what());
  }
}

template <typename T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace detail

// ---- strata config ----------------------------------------------------------

inline StrataConfig strata_config_from_json(const Json& j) {
  detail::reject_unknown_keys(j, {"boundaries", "certainty_threshold"}, "strata config");
  if (!j.contains("boundaries") || !j.at("boundaries").is_array())
    throw SpecError("strata config: 'boundaries' must be an array");
  StrataConfig c;
  for (const auto& b : j.at("boundaries")) {
    detail::reject_unknown_keys(b, {"lower", "upper"}, "strata boundary");
    c.boundaries.push_back({detail::money_at(b, "lower", "strata boundary"), detail::money_at(b, "upper", "strata boundary")});
  }
  c.certainty_threshold = detail::money_at(j, "certainty_threshold", "strata config");
  return c;
}

inline Json to_json(const StrataConfig& c) {
  Json b = Json::array();
  for (const auto& s : c.boundaries) b.push_back({{"lower", s.lower.dollars()}, {"upper", s.upper.dollars()}});
  return {{"boundaries", b}, {"certainty_threshold", c.certainty_threshold.dollars()}};
}

// ---- precision spec ---------------------------------------------------------

inline PrecisionSpec precision_spec_from_json(const Json& j) {
  constexpr const char* what = "plan spec";
  detail::reject_unknown_keys(j, {"mode", "g_i", "C", "f", "gamma", "alpha", "g", "use_fpc"}, what);
  if (!j.contains("mode") || !j.at("mode").is_string()) throw SpecError("plan spec: 'mode' must be a string");
  PrecisionSpec s;
  s.mode = parse_precision_mode(j.at("mode").get<std::string>());
  if (j.contains("g_i") && !j.at("g_i").is_null()) {
    if (!j.at("g_i").is_array()) throw SpecError("plan spec: 'g_i' must be an array");
    for (const auto& v : j.at("g_i")) {
      if (!v.is_number()) throw SpecError("plan spec: 'g_i' entries must be numbers");
      s.stratum_precisions.push_back(v.get<double>());
    }
  }
  const auto c = detail::optional_number(j, "C", what);
  const auto f = detail::optional_number(j, "f", what);
  if (c && s.mode != PrecisionMode::kCaseA) throw SpecError("plan spec: 'C' only applies to caseA");
  if (f && (s.mode == PrecisionMode::kCaseA || s.mode == PrecisionMode::kExplicit))
    throw SpecError("plan spec: 'f' only applies to caseB..caseE");
  s.case_parameter = c ? c : f;
  s.gamma = detail::optional_number(j, "gamma", what);
  s.alpha = detail::optional_number(j, "alpha", what);
  s.overall_precision = detail::optional_number(j, "g", what);
  if (j.contains("use_fpc")) {
    if (!j.at("use_fpc").is_boolean()) throw SpecError("plan spec: 'use_fpc' must be a boolean");
    s.use_fpc = j.at("use_fpc").get<bool>();
  }
  return s;
}

inline Json to_json(const PrecisionSpec& s) {
  Json j{{"mode", std::string(to_string(s.mode))}, {"use_fpc", s.use_fpc}};
  if (!s.stratum_precisions.empty()) j["g_i"] = s.stratum_precisions;
  if (s.case_parameter) j[s.mode == PrecisionMode::kCaseA ? "C" : "f"] = *s.case_parameter;
  if (s.gamma) j["gamma"] = *s.gamma;
  if (s.alpha) j["alpha"] = *s.alpha;
  if (s.overall_precision) j["g"] = *s.overall_precision;
  return j;
}

// ---- frame / plan -----------------------------------------------------------

inline Json to_json(const PopulationFrame& f) {
  Json strata = Json::array();
  for (const auto& s : f.strata) {
    const bool defined = s.stats.defined();
    strata.push_back({{"lower", s.boundary.lower.dollars()},
                      {"upper", s.boundary.upper.dollars()},
                      {"N_i", s.stats.count},
                      {"Ybar_i", defined ? Json(s.stats.mean) : Json(nullptr)},
                      {"V_i", defined ? Json(s.stats.variance) : Json(nullptr)},
                      {"W_i", s.stats.weight}});
  }
  return {{"N", f.total_count},
          {"Ybar", f.total_count ? Json(f.mean) : Json(nullptr)},
          {"strata", strata},
          {"excluded_zero_count", f.excluded_zero_count},
          {"zero_dollar_policy", "excluded from N"},
          {"certainty_threshold", f.certainty_threshold.dollars()},
          {"certainty_count", f.certainty_claims.size()},
          {"certainty_total", f.certainty_total.dollars()},
          {"warnings", f.warnings}};
}

inline Json to_json(const AllocationPlan& p) {
  Json strata = Json::array();
  for (const auto& s : p.strata)
    strata.push_back({{"g_i", s.precision},
                      {"n_raw_i", s.sample.raw},
                      {"n_i", s.sample.size},
                      {"w_i", s.weight},
                      {"floor_applied", s.sample.floor_applied},
                      {"capped", s.sample.capped},
                      {"census", s.sample.census},
                      {"degenerate", s.sample.degenerate}});
  Json j{{"mode", std::string(to_string(p.mode))},
         {"strata", strata},
         {"n", p.total_size},
         {"gamma", p.gamma},
         {"alpha", detail::optional_json(p.alpha)},
         {"g", detail::optional_json(p.overall_precision)},
         {"predicted_alpha", detail::optional_json(p.predicted_alpha)},
         {"rep_condition_holds", detail::optional_json(p.representative)},
         {"fpc_applied", p.fpc_applied},
         {"warnings", p.warnings}};
  j[p.mode == PrecisionMode::kCaseA ? "C" : "f"] = detail::optional_json(p.case_parameter);
  return j;
}

// ---- sampling ---------------------------------------------------------------

inline std::string sample_csv(const SampleSet& s) {
  std::ostringstream out;
  out << "stratum,claim_id,book_amount\n";
  for (std::size_t i = 0; i < s.strata.size(); ++i)
    for (const auto& c : s.strata[i].claims) out << (i + 1) << ',' << c.id << ',' << c.amount.to_string() << '\n';
  return out.str();
}

inline Json sample_sidecar(const SampleSet& s) {
  std::vector<std::size_t> n;
  for (const auto& st : s.strata) n.push_back(st.claims.size());
  return {{"seed", s.seed},
          {"random_scheme_version", kRandomSchemeVersion},
          {"n_i", n},
          {"ybar_i", s.stratum_means()},
          {"ybar_st", s.mean}};
}

inline Json to_json(const RepresentativenessReport& r) {
  Json strata = Json::array();
  for (const auto& s : r.strata)
    strata.push_back({{"ybar_i", s.sample_mean},
                      {"Ybar_i", s.population_mean},
                      {"abs_diff_i", s.abs_diff},
                      {"g_i", s.precision},
                      {"pass_i", s.pass}});
  return {{"ybar_st", r.sample_mean},  {"Ybar", r.population_mean}, {"abs_diff", r.abs_diff},
          {"threshold", r.threshold}, {"strata", strata},          {"overall_pass", r.overall_pass}};
}

// ---- estimation -------------------------------------------------------------

inline Json to_json(const StratumSampleStats& s) {
  return {{"n_i", s.n},     {"ybar_i", s.ybar}, {"dbar_i", s.dbar}, {"s2_y_i", s.s2_y},
          {"s2_d_i", s.s2_d}, {"s_dy_i", s.s_dy}, {"r_i", detail::optional_json(s.ratio)}};
}

inline Json to_json(const EstimateReport& r) {
  Json strata = Json::array();
  for (const auto& c : r.strata)
    strata.push_back({{"point", c.point},
                      {"variance", c.variance},
                      {"residual_variance", c.residual_variance},
                      {"ratio", detail::optional_json(c.ratio)}});
  Json j{{"estimator", std::string(to_string(r.estimator))},
         {"point", r.point},
         {"variance", r.variance},
         {"beta", r.beta},
         {"z_beta", r.z_beta},
         {"lcb", r.lcb},
         {"strata", strata}};
  if (r.combined_ratio) j["r_c"] = *r.combined_ratio;
  return j;
}

inline Json to_json(const EstimateSet& e, std::span<const StratumSampleStats> stats) {
  Json st = Json::array();
  for (const auto& s : stats) st.push_back(to_json(s));
  return {{"difference", to_json(e.difference)},
          {"separate_ratio", to_json(e.separate_ratio)},
          {"combined_ratio", to_json(e.combined_ratio)},
          {"beta", e.difference.beta},
          {"sample_stats", st}};
}

// Audited summary: per stratum the sample size, sample mean and variance of
// book amounts, and only the (d, y) pairs with d > 0.
//   {"strata": [{"n_i": 74, "ybar_i": 115, "s2_y_i": 680,
//                "nonzero": [{"d": 9, "y": 44}, ...]}, ...]}
inline std::vector<StratumSampleStats> audited_summary_from_json(const Json& j) {
  detail::reject_unknown_keys(j, {"strata"}, "audited summary");
  if (!j.contains("strata") || !j.at("strata").is_array()) throw SpecError("audited summary: 'strata' must be an array");
  std::vector<StratumSampleStats> out;
  std::size_t ordinal = 0;
  for (const auto& s : j.at("strata")) {
    ++ordinal;
    const std::string what = "audited summary stratum " + std::to_string(ordinal);
    detail::reject_unknown_keys(s, {"n_i", "ybar_i", "s2_y_i", "nonzero"}, what.c_str());
    if (!s.contains("n_i") || !s.at("n_i").is_number_unsigned()) throw SpecError(what + ": 'n_i' must be a count");
    std::vector<OverpaymentPair> pairs;
    if (s.contains("nonzero")) {
      if (!s.at("nonzero").is_array()) throw SpecError(what + ": 'nonzero' must be an array");
      for (const auto& p : s.at("nonzero")) {
        detail::reject_unknown_keys(p, {"d", "y"}, what.c_str());
        pairs.push_back({detail::number_at(p, "d", what.c_str()), detail::number_at(p, "y", what.c_str())});
      }
    }
    try {
      out.push_back(sparse_stratum_stats(pairs, s.at("n_i").get<std::size_t>(),
                                         detail::number_at(s, "ybar_i", what.c_str()),
                                         detail::number_at(s, "s2_y_i", what.c_str())));
    } catch (const Error& e) {
      throw ConsistencyError(what + ": " + e.what());
    }
  }
  return out;
}

// ---- monte carlo ------------------------------------------------------------

namespace detail {

inline std::uint64_t seed_at(const Json& j, const char* what) {
  if (!j.contains("seed")) return 0;
  if (!j.at("seed").is_number_unsigned()) throw SpecError(std::string(what) + ": 'seed' must be a non-negative integer");
  return j.at("seed").get<std::uint64_t>();
}

inline OverpaymentModel overpayment_model_from_json(const Json& o) {
  detail::reject_unknown_keys(o, {"full_probability", "beta_a", "beta_b"}, "overpayment");
  OverpaymentModel m;
  m.full_probability = optional_number(o, "full_probability", "overpayment").value_or(m.full_probability);
  m.beta_a = optional_number(o, "beta_a", "overpayment").value_or(m.beta_a);
  m.beta_b = optional_number(o, "beta_b", "overpayment").value_or(m.beta_b);
  return m;
}

}  // namespace detail

inline SyntheticPopulationSpec synthetic_spec_from_json(const Json& j) {
  constexpr const char* what = "simulation spec";
  detail::reject_unknown_keys(j, {"seed", "certainty_threshold", "strata"}, what);
  SyntheticPopulationSpec spec;
  spec.seed = detail::seed_at(j, what);
  if (j.contains("certainty_threshold")) spec.certainty_threshold = detail::money_at(j, "certainty_threshold", what);
  if (!j.contains("strata") || !j.at("strata").is_array()) throw SpecError("simulation spec: 'strata' must be an array");
  for (const auto& s : j.at("strata")) {
    detail::reject_unknown_keys(s, {"count", "lower", "upper", "book", "error_rate", "overpayment"}, "synthetic stratum");
    SyntheticStratumSpec st;
    if (!s.contains("count") || !s.at("count").is_number_integer())
      throw SpecError("synthetic stratum: 'count' must be an integer");
    st.count = s.at("count").get<std::size_t>();
    st.lower = detail::money_at(s, "lower", "synthetic stratum");
    st.upper = detail::money_at(s, "upper", "synthetic stratum");
    st.error_rate = detail::optional_number(s, "error_rate", "synthetic stratum").value_or(0.0);
    if (s.contains("book")) {
      const Json& b = s.at("book");
      if (!b.is_object() || !b.contains("family") || !b.at("family").is_string())
        throw SpecError("book: 'family' must be a string");
      const std::string family = b.at("family").get<std::string>();
      if (family == "lognormal") {
        detail::reject_unknown_keys(b, {"family", "log_mean", "log_sd"}, "book");
        st.book = TruncatedLognormal{detail::number_at(b, "log_mean", "book"), detail::number_at(b, "log_sd", "book")};
      } else if (family == "uniform") {
        detail::reject_unknown_keys(b, {"family"}, "book");
        st.book = UniformBook{};
      } else if (family == "point") {
        detail::reject_unknown_keys(b, {"family", "value"}, "book");
        st.book = PointMass{detail::money_at(b, "value", "book")};
      } else if (family == "moment_beta") {
        detail::reject_unknown_keys(b, {"family", "mean", "variance"}, "book");
        st.book = MomentBeta{detail::number_at(b, "mean", "book"), detail::number_at(b, "variance", "book")};
      } else {
        throw SpecError("book: unknown family '" + family + "'");
      }
    }
    if (s.contains("overpayment")) st.overpayment = detail::overpayment_model_from_json(s.at("overpayment"));
    spec.strata.push_back(st);
  }
  return spec;
}

/// `{"seed": s, "strata": [{"error_rate": r, "overpayment": {...}}, ...]}`,
/// for simulating on a population that is already stratified.
inline OverpaymentSpec overpayment_spec_from_json(const Json& j) {
  constexpr const char* what = "simulation spec";
  detail::reject_unknown_keys(j, {"seed", "strata"}, what);
  OverpaymentSpec spec;
  spec.seed = detail::seed_at(j, what);
  if (!j.contains("strata") || !j.at("strata").is_array()) throw SpecError("simulation spec: 'strata' must be an array");
  for (const auto& s : j.at("strata")) {
    detail::reject_unknown_keys(s, {"error_rate", "overpayment"}, "error model (population given)");
    ErrorModel m;
    m.error_rate = detail::optional_number(s, "error_rate", "error model").value_or(0.0);
    if (s.contains("overpayment")) m.overpayment = detail::overpayment_model_from_json(s.at("overpayment"));
    spec.strata.push_back(m);
  }
  return spec;
}

inline Json to_json(const CoverageReport& r) {
  Json est = Json::object();
  for (const auto& e : r.estimators)
    est[std::string(to_string(e.estimator))] = {{"mean", e.mean},
                                                {"sd", e.sd},
                                                {"se", e.se},
                                                {"bias", e.bias},
                                                {"bias_in_se", e.se > 0 ? Json(e.bias / e.se) : Json(nullptr)},
                                                {"max_abs_error", e.max_abs_error},
                                                {"lcb_coverage", e.lcb_coverage},
                                                {"lcb_coverage_se", e.lcb_coverage_se}};
  return {{"replications", r.replications},
          {"seed", r.seed},
          {"replication_seed_scheme", "substream_seed(seed, 2^32 + r)"},
          {"beta", r.beta},
          {"total_overpayment", r.total_overpayment},
          {"Ybar", r.population_mean},
          {"n_i", r.sample_sizes},
          {"g_i", r.stratum_precisions},
          {"stratum_coverage", r.stratum_coverage},
          {"stratum_coverage_se", r.stratum_coverage_se},
          {"g", detail::optional_json(r.overall_precision)},
          {"overall_coverage", detail::optional_json(r.overall_coverage)},
          {"overall_coverage_se", detail::optional_json(r.overall_coverage_se)},
          {"estimators", est}};
}

inline std::string replications_csv(const CoverageReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "replication,seed,ybar_st,overall_hit";
  for (std::size_t i = 0; i < r.stratum_coverage.size(); ++i) out << ",hit_" << (i + 1);
  out << ",point_difference,lcb_difference,point_separate_ratio,lcb_separate_ratio,point_combined_ratio,"
         "lcb_combined_ratio\n";
  for (const auto& rec : r.records) {
    out << rec.index << ',' << rec.seed << ',' << rec.sample_mean << ',' << int(rec.overall_hit);
    for (auto h : rec.stratum_hit) out << ',' << int(h);
    for (std::size_t e = 0; e < 3; ++e) out << ',' << rec.point[e] << ',' << rec.lcb[e];
    out << '\n';
  }
  return out.str();
}

// ---- errors -----------------------------------------------------------------

inline Json error_json(const Error& e) {
  Json j{{"kind", e.kind()}, {"message", e.what()}};
  if (const auto* gap = dynamic_cast<const StratificationGapError*>(&e)) j["amounts"] = gap->amounts();
  if (const auto* parse = dynamic_cast<const ParseError*>(&e); parse && parse->line()) j["line"] = parse->line();
  return {{"error", j}};
}

}  // namespace repstrat
