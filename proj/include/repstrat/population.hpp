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
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "repstrat/errors.hpp"
#include "repstrat/money.hpp"

namespace repstrat {

struct ClaimRecord {
  std::string id;
  Money amount;

  friend bool operator==(const ClaimRecord&, const ClaimRecord&) = default;
};

// Closed class interval [lower, upper] at cent resolution.
struct StratumBoundary {
  Money lower;
  Money upper;

  bool contains(Money amount) const { return lower <= amount && amount <= upper; }
  std::string label() const { return lower.to_string() + "-" + upper.to_string(); }

  friend bool operator==(const StratumBoundary&, const StratumBoundary&) = default;
};

struct StrataConfig {
  std::vector<StratumBoundary> boundaries;
  Money certainty_threshold;
};

// Exact population statistics of one stratum. `variance` uses divisor N_i.
// For an empty stratum mean and variance are NaN and `defined()` is false.
struct StratumStats {
  std::size_t count = 0;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double variance = std::numeric_limits<double>::quiet_NaN();
  double weight = 0.0;

  bool defined() const { return count > 0; }
};

struct Stratum {
  StratumBoundary boundary;
  std::vector<ClaimRecord> claims;
  StratumStats stats;
};

struct PopulationFrame {
  std::vector<Stratum> strata;
  std::size_t total_count = 0;  // N, excludes zero-dollar and certainty claims
  double mean = std::numeric_limits<double>::quiet_NaN();  // Ybar
  std::vector<ClaimRecord> certainty_claims;
  Money certainty_threshold;
  Money certainty_total;
  std::size_t excluded_zero_count = 0;
  std::vector<std::string> warnings;

  std::size_t stratum_count() const { return strata.size(); }
};

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// Reads one line, dropping a trailing '\r'. Returns false at end of stream.
inline bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

inline void strip_bom(std::string& line) {
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
}

}  // namespace detail

/// Reads a population CSV with header `claim_id,amount`. Blank lines are
/// skipped; every other row must have exactly two fields.
inline std::vector<ClaimRecord> load_population(std::istream& in) {
  std::string line;
  if (!detail::read_line(in, line)) throw ParseError(1, "missing header `claim_id,amount`");
  detail::strip_bom(line);
  {
    const auto header = detail::split_csv_line(line);
    if (header.size() != 2 || detail::trim(header[0]) != "claim_id" ||
        detail::trim(header[1]) != "amount")
      throw ParseError(1, "expected header `claim_id,amount`");
  }

  std::vector<ClaimRecord> claims;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 1;
  while (detail::read_line(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 2) throw ParseError(line_no, "expected 2 fields, got " + std::to_string(fields.size()));
    const std::string id(detail::trim(fields[0]));
    if (id.empty()) throw ParseError(line_no, "empty claim_id");
    const auto amount = parse_money(fields[1]);
    if (!amount) throw ParseError(line_no, "malformed amount '" + std::string(fields[1]) + "'");
    if (amount->cents() < 0)
      throw DomainError("line " + std::to_string(line_no) + ": negative amount " + amount->to_string() +
                        " for claim " + id);
    if (!seen.insert(id).second)
      throw DomainError("line " + std::to_string(line_no) + ": duplicate claim_id " + id);
    claims.push_back({id, *amount});
  }
  return claims;
}

inline std::vector<ClaimRecord> load_population(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  return load_population(in);
}

/// Two-pass mean and divisor-N variance of a set of claims. The mean comes
/// from an exact integer cent sum.
inline StratumStats compute_stats(std::span<const ClaimRecord> claims) {
  StratumStats s;
  s.count = claims.size();
  if (claims.empty()) return s;
  std::int64_t total = 0;
  for (const auto& c : claims) total += c.amount.cents();
  s.mean = static_cast<double>(total) / 100.0 / static_cast<double>(claims.size());
  double ss = 0.0;
  for (const auto& c : claims) {
    const double dev = c.amount.dollars() - s.mean;
    ss += dev * dev;
  }
  s.variance = ss / static_cast<double>(claims.size());
  return s;
}

inline void validate_boundaries(std::span<const StratumBoundary> boundaries, Money certainty_threshold) {
  if (boundaries.empty()) throw DomainError("at least one stratum boundary is required");
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    const auto& b = boundaries[i];
    const std::string name = "stratum " + std::to_string(i + 1);
    if (b.lower.cents() < 0) throw DomainError(name + ": negative lower bound");
    if (b.lower > b.upper) throw DomainError(name + ": lower bound exceeds upper bound");
    if (i > 0 && b.lower <= boundaries[i - 1].upper)
      throw DomainError(name + ": overlaps or is out of order with stratum " + std::to_string(i));
  }
  if (certainty_threshold <= boundaries.back().upper)
    throw DomainError("certainty_threshold " + certainty_threshold.to_string() +
                      " must exceed the last stratum upper bound " + boundaries.back().upper.to_string());
}

/// Per-stratum {N_i, Ybar_i, V_i, W_i}, recomputed from the frame's claims.
inline std::vector<StratumStats> stratum_stats(const PopulationFrame& frame) {
  std::vector<StratumStats> out;
  out.reserve(frame.strata.size());
  std::size_t total = 0;
  for (const auto& s : frame.strata) total += s.claims.size();
  for (const auto& s : frame.strata) {
    StratumStats st = compute_stats(s.claims);
    st.weight = total == 0 ? 0.0 : static_cast<double>(st.count) / static_cast<double>(total);
    out.push_back(st);
  }
  return out;
}

/// Assigns claims to strata. Zero-dollar claims are dropped and counted;
/// claims at or above the certainty threshold are set aside; anything else
/// outside every stratum is a StratificationGapError.
inline PopulationFrame stratify(std::span<const ClaimRecord> claims,
                                std::span<const StratumBoundary> boundaries, Money certainty_threshold) {
  validate_boundaries(boundaries, certainty_threshold);

  PopulationFrame frame;
  frame.certainty_threshold = certainty_threshold;
  frame.strata.reserve(boundaries.size());
  for (const auto& b : boundaries) frame.strata.push_back({b, {}, {}});

  std::vector<std::string> gaps;
  for (const auto& claim : claims) {
    if (claim.amount.cents() < 0) throw DomainError("negative amount for claim " + claim.id);
    if (claim.amount.cents() == 0) {
      ++frame.excluded_zero_count;
      continue;
    }
    if (claim.amount >= certainty_threshold) {
      frame.certainty_claims.push_back(claim);
      frame.certainty_total = frame.certainty_total + claim.amount;
      continue;
    }
    // Boundaries are sorted and disjoint: the first stratum whose upper bound
    // reaches the amount is the only candidate.
    const auto it = std::lower_bound(boundaries.begin(), boundaries.end(), claim.amount,
                                     [](const StratumBoundary& b, Money a) { return b.upper < a; });
    if (it == boundaries.end() || !it->contains(claim.amount)) {
      gaps.push_back(claim.amount.to_string());
      continue;
    }
    frame.strata[static_cast<std::size_t>(it - boundaries.begin())].claims.push_back(claim);
  }

  if (!gaps.empty()) {
    std::string msg = std::to_string(gaps.size()) + " claim amount(s) fall in no stratum:";
    for (std::size_t i = 0; i < gaps.size() && i < 20; ++i) msg += " " + gaps[i];
    if (gaps.size() > 20) msg += " ...";
    throw StratificationGapError(msg, std::move(gaps));
  }

  const auto stats = stratum_stats(frame);
  std::int64_t included_cents = 0;
  for (std::size_t i = 0; i < frame.strata.size(); ++i) {
    frame.strata[i].stats = stats[i];
    frame.total_count += stats[i].count;
    for (const auto& c : frame.strata[i].claims) included_cents += c.amount.cents();
    if (stats[i].count == 0)
      frame.warnings.push_back("stratum " + std::to_string(i + 1) + " (" + frame.strata[i].boundary.label() +
                               ") is empty");
  }
  if (frame.total_count > 0)
    frame.mean = static_cast<double>(included_cents) / 100.0 / static_cast<double>(frame.total_count);
  if (frame.excluded_zero_count > 0)
    frame.warnings.push_back(std::to_string(frame.excluded_zero_count) +
                             " zero-dollar claim(s) excluded from N");
  return frame;
}

inline PopulationFrame stratify(std::span<const ClaimRecord> claims, const StrataConfig& config) {
  return stratify(claims, config.boundaries, config.certainty_threshold);
}

/// Claims that entered the statistical strata, in stratum order.
inline std::vector<ClaimRecord> included_claims(const PopulationFrame& frame) {
  std::vector<ClaimRecord> out;
  out.reserve(frame.total_count);
  for (const auto& s : frame.strata) out.insert(out.end(), s.claims.begin(), s.claims.end());
  return out;
}

}  // namespace repstrat
