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
#include <istream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "repstrat/errors.hpp"
#include "repstrat/money.hpp"
#include "repstrat/normal.hpp"
#include "repstrat/population.hpp"

namespace repstrat {

/// d = max(0, y - x). Underpayments are truncated to zero.
inline double overpayment(double book, double audited) { return std::max(0.0, book - audited); }
inline Money overpayment(Money book, Money audited) { return std::max(Money{}, book - audited); }

struct AuditedItem {
  std::size_t stratum = 0;  // 0-based
  std::string claim_id;
  Money book;     // y
  Money audited;  // x

  Money overpayment() const { return repstrat::overpayment(book, audited); }
};

// Per-stratum sample moments of book amounts y and overpayments d. The raw
// sums are kept because the combined-ratio residual variance is written in
// terms of them.
struct StratumSampleStats {
  std::size_t n = 0;
  double ybar = 0.0;
  double dbar = 0.0;
  double s2_y = 0.0;
  double s2_d = 0.0;
  double s_dy = 0.0;  // covariance; may be negative
  std::optional<double> ratio;  // dbar / ybar, absent when ybar == 0
  double sum_d = 0.0;
  double sum_d2 = 0.0;
  double sum_dy = 0.0;
  double sum_y2 = 0.0;
};

/// {n sum x^2 - (sum x)^2} / {n (n - 1)}, clamped at zero.
inline double sample_variance_shortcut(std::size_t n, double sum, double sum_sq) {
  const double nn = static_cast<double>(n);
  return std::max(0.0, (nn * sum_sq - sum * sum) / (nn * (nn - 1.0)));
}

/// Direct moments of one stratum sample. s2_d and s_dy are two-pass.
inline StratumSampleStats stratum_sample_stats(std::span<const double> d, std::span<const double> y) {
  if (d.size() != y.size()) throw StructuralError("d and y lengths differ");
  const std::size_t n = d.size();
  if (n < 2) throw DomainError("stratum sample needs at least 2 items");
  const double nn = static_cast<double>(n);

  StratumSampleStats s;
  s.n = n;
  double sum_y = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (d[j] < 0.0 || y[j] < 0.0) throw DomainError("negative d or y in stratum sample");
    s.sum_d += d[j];
    sum_y += y[j];
    s.sum_d2 += d[j] * d[j];
    s.sum_dy += d[j] * y[j];
    s.sum_y2 += y[j] * y[j];
  }
  s.dbar = s.sum_d / nn;
  s.ybar = sum_y / nn;
  double ss_d = 0.0, ss_y = 0.0, sp = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double ed = d[j] - s.dbar;
    const double ey = y[j] - s.ybar;
    ss_d += ed * ed;
    ss_y += ey * ey;
    sp += ed * ey;
  }
  s.s2_d = ss_d / (nn - 1.0);
  s.s2_y = ss_y / (nn - 1.0);
  s.s_dy = sp / (nn - 1.0);
  if (s.ybar > 0.0) s.ratio = s.dbar / s.ybar;
  return s;
}

inline StratumSampleStats stratum_sample_stats(std::span<const AuditedItem> items) {
  std::vector<double> d, y;
  d.reserve(items.size());
  y.reserve(items.size());
  for (const auto& it : items) {
    if (!items.empty() && it.stratum != items.front().stratum)
      throw StructuralError("stratum_sample_stats: items span several strata");
    d.push_back(it.overpayment().dollars());
    y.push_back(it.book.dollars());
  }
  return stratum_sample_stats(d, y);
}

struct OverpaymentPair {
  double d = 0.0;
  double y = 0.0;
};

/// Stratum moments from only the (d, y) pairs with d > 0, plus the sample
/// mean and variance of y. The implied zeros contribute nothing to the d
/// sums; sum y^2 is recovered as (n - 1) s2_y + n ybar^2.
inline StratumSampleStats sparse_stratum_stats(std::span<const OverpaymentPair> nonzero, std::size_t n,
                                               double ybar, double s2_y) {
  if (n < 2) throw DomainError("stratum sample needs at least 2 items");
  if (nonzero.size() > n)
    throw ConsistencyError("more non-zero pairs (" + std::to_string(nonzero.size()) + ") than n_i (" +
                           std::to_string(n) + ")");
  if (!(ybar > 0.0)) throw DomainError("sparse stratum stats need ybar > 0");
  if (!(s2_y >= 0.0)) throw DomainError("s2_y must be non-negative");
  const double nn = static_cast<double>(n);

  StratumSampleStats s;
  s.n = n;
  s.ybar = ybar;
  s.s2_y = s2_y;
  double pair_y2 = 0.0;
  for (const auto& p : nonzero) {
    if (p.d < 0.0 || p.y < 0.0) throw DomainError("negative d or y in non-zero pairs");
    if (p.d > p.y) throw ConsistencyError("overpayment exceeds book amount");
    s.sum_d += p.d;
    s.sum_d2 += p.d * p.d;
    s.sum_dy += p.d * p.y;
    pair_y2 += p.y * p.y;
  }
  s.sum_y2 = (nn - 1.0) * s2_y + nn * ybar * ybar;
  if (s.sum_y2 < pair_y2 * (1.0 - 1e-12))
    throw ConsistencyError("implied sum of y^2 (" + std::to_string(s.sum_y2) +
                           ") is below the non-zero pairs' own sum (" + std::to_string(pair_y2) + ")");
  s.dbar = s.sum_d / nn;
  s.s2_d = sample_variance_shortcut(n, s.sum_d, s.sum_d2);
  s.s_dy = (s.sum_dy - ybar * s.sum_d) / (nn - 1.0);
  s.ratio = s.dbar / ybar;
  return s;
}

enum class Estimator { kDifference, kSeparateRatio, kCombinedRatio };

inline std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::kDifference: return "difference";
    case Estimator::kSeparateRatio: return "separate_ratio";
    case Estimator::kCombinedRatio: return "combined_ratio";
  }
  return "?";
}

struct StratumContribution {
  double point = 0.0;
  double variance = 0.0;
  double residual_variance = 0.0;  // s2_d, s2_RS or s2_r as used
  std::optional<double> ratio;
};

struct EstimateReport {
  Estimator estimator = Estimator::kDifference;
  double point = 0.0;
  double variance = 0.0;
  double beta = 0.0;
  double z_beta = 0.0;
  double lcb = 0.0;
  std::optional<double> combined_ratio;  // r_c
  std::vector<StratumContribution> strata;
};

/// point - z_beta * sqrt(variance). Not clamped at zero.
inline double lower_confidence_bound(double point, double variance, double beta) {
  if (!(variance >= 0.0)) throw DomainError("variance must be non-negative");
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("beta must lie in (0, 1)");
  return point - normal_quantile(1.0 - beta) * std::sqrt(variance);
}

namespace detail {

inline void check_estimation_inputs(const PopulationFrame& frame, std::span<const StratumSampleStats> stats) {
  if (stats.size() != frame.strata.size())
    throw StructuralError("sample statistics cover " + std::to_string(stats.size()) + " strata, frame has " +
                          std::to_string(frame.strata.size()));
  for (std::size_t i = 0; i < stats.size(); ++i) {
    if (stats[i].n < 2) throw DomainError("stratum " + std::to_string(i + 1) + ": n_i < 2");
    if (stats[i].n > frame.strata[i].stats.count)
      throw StructuralError("stratum " + std::to_string(i + 1) + ": n_i exceeds N_i");
  }
}

// N_i (N_i - n_i) / n_i
inline double expansion(const PopulationFrame& frame, const StratumSampleStats& s, std::size_t i) {
  const double big = static_cast<double>(frame.strata[i].stats.count);
  const double n = static_cast<double>(s.n);
  return big * (big - n) / n;
}

inline void finish(EstimateReport& r, double beta) {
  r.beta = beta;
  r.z_beta = normal_quantile(1.0 - beta);
  r.lcb = lower_confidence_bound(r.point, r.variance, beta);
}

}  // namespace detail

/// Difference estimator: sum N_i dbar_i with variance
/// sum N_i (N_i - n_i) s2_d / n_i.
inline EstimateReport difference_estimate(const PopulationFrame& frame, std::span<const StratumSampleStats> stats,
                                          double beta) {
  detail::check_estimation_inputs(frame, stats);
  EstimateReport r;
  r.estimator = Estimator::kDifference;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    StratumContribution c;
    c.point = static_cast<double>(frame.strata[i].stats.count) * stats[i].dbar;
    c.residual_variance = stats[i].s2_d;
    c.variance = detail::expansion(frame, stats[i], i) * c.residual_variance;
    r.point += c.point;
    r.variance += c.variance;
    r.strata.push_back(c);
  }
  detail::finish(r, beta);
  return r;
}

/// Separate ratio estimator: sum N_i Ybar_i r_i, r_i = dbar_i / ybar_i, with
/// residual variance s2_d + r^2 s2_y - 2 r s_dy per stratum.
inline EstimateReport separate_ratio_estimate(const PopulationFrame& frame,
                                              std::span<const StratumSampleStats> stats, double beta) {
  detail::check_estimation_inputs(frame, stats);
  EstimateReport r;
  r.estimator = Estimator::kSeparateRatio;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto& s = stats[i];
    if (!s.ratio) throw DomainError("stratum " + std::to_string(i + 1) + ": ratio undefined (sample mean book is 0)");
    const double ri = *s.ratio;
    const auto& pop = frame.strata[i].stats;
    StratumContribution c;
    c.ratio = ri;
    c.point = static_cast<double>(pop.count) * pop.mean * ri;
    c.residual_variance = std::max(0.0, s.s2_d + ri * ri * s.s2_y - 2.0 * ri * s.s_dy);
    c.variance = detail::expansion(frame, s, i) * c.residual_variance;
    r.point += c.point;
    r.variance += c.variance;
    r.strata.push_back(c);
  }
  detail::finish(r, beta);
  return r;
}

/// Combined ratio estimator: r_c * sum N_i Ybar_i with
/// r_c = sum N_i dbar_i / sum N_i ybar_i and residual variance
/// {sum d^2 + r_c^2 sum y^2 - 2 r_c sum d y} / (n_i - 1) per stratum.
inline EstimateReport combined_ratio_estimate(const PopulationFrame& frame,
                                              std::span<const StratumSampleStats> stats, double beta) {
  detail::check_estimation_inputs(frame, stats);
  double num = 0.0, den = 0.0, book_total = 0.0;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const double big = static_cast<double>(frame.strata[i].stats.count);
    num += big * stats[i].dbar;
    den += big * stats[i].ybar;
    book_total += big * frame.strata[i].stats.mean;
  }
  if (!(den > 0.0)) throw DomainError("combined ratio undefined: sum N_i ybar_i is 0");
  const double rc = num / den;

  EstimateReport r;
  r.estimator = Estimator::kCombinedRatio;
  r.combined_ratio = rc;
  r.point = rc * book_total;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto& s = stats[i];
    const auto& pop = frame.strata[i].stats;
    StratumContribution c;
    c.ratio = rc;
    c.point = rc * static_cast<double>(pop.count) * pop.mean;
    c.residual_variance =
        std::max(0.0, (s.sum_d2 + rc * rc * s.sum_y2 - 2.0 * rc * s.sum_dy) / (static_cast<double>(s.n) - 1.0));
    c.variance = detail::expansion(frame, s, i) * c.residual_variance;
    r.variance += c.variance;
    r.strata.push_back(c);
  }
  detail::finish(r, beta);
  return r;
}

struct EstimateSet {
  EstimateReport difference;
  EstimateReport separate_ratio;
  EstimateReport combined_ratio;
};

inline EstimateSet estimate_all(const PopulationFrame& frame, std::span<const StratumSampleStats> stats,
                                double beta) {
  return {difference_estimate(frame, stats, beta), separate_ratio_estimate(frame, stats, beta),
          combined_ratio_estimate(frame, stats, beta)};
}

/// Reads `stratum,claim_id,book_amount,audited_amount` (stratum is 1-based)
/// and groups the items per stratum of `frame`. Every stratum must have at
/// least two items, and book amounts must lie inside their stratum.
inline std::vector<std::vector<AuditedItem>> load_audited(std::istream& in, const PopulationFrame& frame) {
  std::string line;
  if (!detail::read_line(in, line)) throw ParseError(1, "missing header");
  detail::strip_bom(line);
  {
    const auto h = detail::split_csv_line(line);
    if (h.size() != 4 || detail::trim(h[0]) != "stratum" || detail::trim(h[1]) != "claim_id" ||
        detail::trim(h[2]) != "book_amount" || detail::trim(h[3]) != "audited_amount")
      throw ParseError(1, "expected header `stratum,claim_id,book_amount,audited_amount`");
  }
  const std::size_t strata = frame.strata.size();
  std::vector<std::vector<AuditedItem>> grouped(strata);
  std::unordered_set<std::string> seen;
  std::size_t line_no = 1;
  while (detail::read_line(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 4) throw ParseError(line_no, "expected 4 fields, got " + std::to_string(f.size()));
    const std::string_view sid = detail::trim(f[0]);
    std::size_t ordinal = 0;
    if (sid.empty() || sid.size() > 9 || !std::all_of(sid.begin(), sid.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
      throw ParseError(line_no, "malformed stratum '" + std::string(sid) + "'");
    ordinal = std::stoul(std::string(sid));
    if (ordinal < 1 || ordinal > strata)
      throw StructuralError("line " + std::to_string(line_no) + ": stratum " + std::to_string(ordinal) +
                            " does not exist (frame has " + std::to_string(strata) + " strata)");
    AuditedItem item;
    item.stratum = ordinal - 1;
    item.claim_id = std::string(detail::trim(f[1]));
    if (item.claim_id.empty()) throw ParseError(line_no, "empty claim_id");
    const auto book = parse_money(f[2]);
    const auto audited = parse_money(f[3]);
    if (!book) throw ParseError(line_no, "malformed book_amount '" + std::string(f[2]) + "'");
    if (!audited) throw ParseError(line_no, "malformed audited_amount '" + std::string(f[3]) + "'");
    if (book->cents() < 0 || audited->cents() < 0)
      throw DomainError("line " + std::to_string(line_no) + ": negative amount");
    item.book = *book;
    item.audited = *audited;
    if (!frame.strata[item.stratum].boundary.contains(item.book))
      throw StructuralError("line " + std::to_string(line_no) + ": book amount " + item.book.to_string() +
                            " outside stratum " + std::to_string(ordinal) + " (" +
                            frame.strata[item.stratum].boundary.label() + ")");
    if (!seen.insert(item.claim_id).second)
      throw DomainError("line " + std::to_string(line_no) + ": duplicate claim_id " + item.claim_id);
    grouped[item.stratum].push_back(std::move(item));
  }
  for (std::size_t i = 0; i < strata; ++i) {
    if (grouped[i].size() < 2)
      throw StructuralError("stratum " + std::to_string(i + 1) + " has " + std::to_string(grouped[i].size()) +
                            " audited item(s); at least 2 are required");
    if (grouped[i].size() > frame.strata[i].stats.count)
      throw StructuralError("stratum " + std::to_string(i + 1) + " has more audited items than claims");
  }
  return grouped;
}

inline std::vector<std::vector<AuditedItem>> load_audited(std::string_view csv, const PopulationFrame& frame) {
  std::istringstream in{std::string(csv)};
  return load_audited(in, frame);
}

inline std::vector<StratumSampleStats> sample_stats(const std::vector<std::vector<AuditedItem>>& grouped) {
  std::vector<StratumSampleStats> out;
  out.reserve(grouped.size());
  for (const auto& g : grouped) out.push_back(stratum_sample_stats(g));
  return out;
}

}  // namespace repstrat
