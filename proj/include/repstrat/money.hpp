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
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "repstrat/errors.hpp"

namespace repstrat {

// A non-negative-or-signed dollar amount held as an exact count of cents.
// Book and audited amounts are parsed straight into cents so that stratum
// membership and population sums are exact.
class Money {
 public:
  constexpr Money() = default;

  static constexpr Money from_cents(std::int64_t cents) { return Money(cents); }

  // Rounds to the nearest cent. Rejects values that are not within 1e-6 of a
  // cent so that config numbers such as 199.99 survive the trip through
  // binary floating point but 0.001 does not.
  static Money from_dollars(double dollars) {
    if (!std::isfinite(dollars)) throw DomainError("non-finite dollar amount");
    const double scaled = dollars * 100.0;
    const double rounded = std::round(scaled);
    if (std::abs(scaled - rounded) > 1e-6 * std::max(1.0, std::abs(scaled)))
      throw DomainError("dollar amount " + std::to_string(dollars) +
                        " is not a whole number of cents");
    return Money(static_cast<std::int64_t>(rounded));
  }

  constexpr std::int64_t cents() const { return cents_; }
  constexpr double dollars() const { return static_cast<double>(cents_) / 100.0; }

  std::string to_string() const {
    const std::int64_t mag = cents_ < 0 ? -cents_ : cents_;
    std::string frac = std::to_string(mag % 100);
    if (frac.size() < 2) frac.insert(0, "0");
    return (cents_ < 0 ? "-" : "") + std::to_string(mag / 100) + "." + frac;
  }

  friend constexpr auto operator<=>(Money, Money) = default;
  friend constexpr Money operator+(Money a, Money b) { return Money(a.cents_ + b.cents_); }
  friend constexpr Money operator-(Money a, Money b) { return Money(a.cents_ - b.cents_); }

 private:
  constexpr explicit Money(std::int64_t cents) : cents_(cents) {}
  std::int64_t cents_ = 0;
};

// Parses "123", "123.4" or "123.45" (optionally signed). Returns nullopt for
// anything else: thousands separators, exponents, more than two fraction
// digits, empty strings.
inline std::optional<Money> parse_money(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  bool negative = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  if (text.empty()) return std::nullopt;

  constexpr std::int64_t kLimit = std::numeric_limits<std::int64_t>::max() / 1000;
  std::int64_t whole = 0;
  std::size_t i = 0;
  std::size_t whole_digits = 0;
  for (; i < text.size() && text[i] != '.'; ++i) {
    if (text[i] < '0' || text[i] > '9') return std::nullopt;
    whole = whole * 10 + (text[i] - '0');
    if (whole > kLimit) return std::nullopt;
    ++whole_digits;
  }
  std::int64_t frac = 0;
  std::size_t frac_digits = 0;
  if (i < text.size()) {
    ++i;  // '.'
    for (; i < text.size(); ++i) {
      if (text[i] < '0' || text[i] > '9') return std::nullopt;
      if (++frac_digits > 2) return std::nullopt;
      frac = frac * 10 + (text[i] - '0');
    }
    if (frac_digits == 0 && whole_digits == 0) return std::nullopt;
  }
  if (whole_digits == 0 && frac_digits == 0) return std::nullopt;
  if (frac_digits == 1) frac *= 10;
  const std::int64_t cents = whole * 100 + frac;
  return Money::from_cents(negative ? -cents : cents);
}

}  // namespace repstrat
