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

#include <stdexcept>
#include <string>
#include <vector>

namespace repstrat {

// Base of every validation failure raised by the library. `kind()` is the
// machine-readable tag written into CLI/serve error payloads.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
  virtual const char* kind() const noexcept = 0;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
  explicit ParseError(const std::string& message) : Error(message) {}
  const char* kind() const noexcept override { return "parse_error"; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain_error"; }
};

// Malformed or over/under-determined precision specification.
class SpecError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "spec_error"; }
};

class StratificationGapError : public Error {
 public:
  StratificationGapError(const std::string& message,
                         std::vector<std::string> amounts)
      : Error(message), amounts_(std::move(amounts)) {}
  const char* kind() const noexcept override { return "stratification_gap"; }
  const std::vector<std::string>& amounts() const noexcept { return amounts_; }

 private:
  std::vector<std::string> amounts_;
};

// Inputs that do not line up with each other (plan vs frame, sample vs
// frame, audited stratum ids vs frame).
class StructuralError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "structural_error"; }
};

class ConsistencyError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "consistency_error"; }
};

}  // namespace repstrat
