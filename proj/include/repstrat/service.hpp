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

#include <openssl/evp.h>

#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "repstrat/app.hpp"

// JSON-over-HTTP facade logic, independent of the HTTP server.
namespace repstrat::service {

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

class UnknownPopulation : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "unknown_population"; }
};

// Uploaded populations keyed by the SHA-256 of their CSV text.
class SessionStore {
 public:
  using Claims = std::shared_ptr<const std::vector<ClaimRecord>>;

  std::string insert(std::string_view csv) {
    std::string key = sha256_hex(csv);
    {
      std::shared_lock lock(mutex_);
      if (populations_.count(key)) return key;
    }
    auto claims = std::make_shared<const std::vector<ClaimRecord>>(load_population(csv));
    std::unique_lock lock(mutex_);
    populations_.emplace(key, std::move(claims));
    return key;
  }

  Claims find(const std::string& key) const {
    std::shared_lock lock(mutex_);
    const auto it = populations_.find(key);
    if (it == populations_.end()) throw UnknownPopulation("unknown population hash " + key);
    return it->second;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return populations_.size();
  }

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, Claims> populations_;
};

struct Response {
  int status = 200;
  Json body;
};

class Service {
 public:
  Response handle(std::string_view method, std::string_view path, std::string_view body) {
    try {
      if (method == "GET" && path == "/health")
        return {200, {{"status", "ok"}, {"version", std::string(app::kVersion)}}};
      if (method != "POST") return {404, error("not_found", "no route for " + std::string(method) + " " + std::string(path))};
      if (path == "/plan") return {200, plan(app::parse_json(body, "request body"))};
      if (path == "/sample") return {200, sample(app::parse_json(body, "request body"))};
      if (path == "/estimate") return {200, estimate(app::parse_json(body, "request body"))};
      if (path == "/simulate") return {200, simulate(app::parse_json(body, "request body"))};
      return {404, error("not_found", "no route for POST " + std::string(path))};
    } catch (const UnknownPopulation& e) {
      return {404, error_json(e)};
    } catch (const Error& e) {
      return {400, error_json(e)};
    } catch (const Json::exception& e) {
      return {400, error("spec_error", e.what())};
    } catch (const std::exception& e) {
      return {500, error("internal", e.what())};
    }
  }

  SessionStore& sessions() { return sessions_; }

 private:
  static Json error(const char* kind, const std::string& message) {
    return {{"error", {{"kind", kind}, {"message", message}}}};
  }

  static const Json& field(const Json& req, const char* key) {
    if (!req.is_object() || !req.contains(key)) throw SpecError(std::string("request: missing '") + key + "'");
    return req.at(key);
  }

  static std::optional<bool> fpc_override(const Json& req) {
    if (!req.contains("use_fpc") || req.at("use_fpc").is_null()) return std::nullopt;
    if (!req.at("use_fpc").is_boolean()) throw SpecError("request: 'use_fpc' must be a boolean");
    return req.at("use_fpc").get<bool>();
  }

  // Resolves the population from an inline CSV (stored on the way) or a
  // previously returned hash.
  std::pair<std::string, PopulationFrame> frame(const Json& req) {
    std::string key;
    if (req.contains("population_csv")) {
      if (!req.at("population_csv").is_string()) throw SpecError("request: 'population_csv' must be a string");
      key = sessions_.insert(req.at("population_csv").get<std::string>());
    } else if (req.contains("population_hash")) {
      if (!req.at("population_hash").is_string()) throw SpecError("request: 'population_hash' must be a string");
      key = req.at("population_hash").get<std::string>();
    } else {
      throw SpecError("request: give 'population_csv' or 'population_hash'");
    }
    const auto claims = sessions_.find(key);
    return {key, stratify(*claims, strata_config_from_json(field(req, "strata")))};
  }

  Json plan(const Json& req) {
    auto [key, fr] = frame(req);
    auto out = app::run_plan(fr, app::build_spec(field(req, "plan_spec"), fpc_override(req)));
    out.document["population_hash"] = key;
    return out.document;
  }

  Json sample(const Json& req) {
    auto [key, fr] = frame(req);
    const Json& seed = field(req, "seed");
    if (!seed.is_number_unsigned()) throw SpecError("request: 'seed' must be a non-negative integer");
    std::optional<double> g;
    if (req.contains("overall_g") && !req.at("overall_g").is_null()) g = req.at("overall_g").get<double>();
    auto out = app::run_sample(fr, app::build_spec(field(req, "plan_spec"), fpc_override(req)),
                               seed.get<std::uint64_t>(), g);
    return {{"population_hash", key},
            {"sample_csv", out.csv},
            {"sidecar", out.sidecar},
            {"representative", out.representativeness.overall_pass}};
  }

  Json estimate(const Json& req) {
    auto [key, fr] = frame(req);
    double beta = 0.05;
    if (req.contains("beta")) beta = req.at("beta").get<double>();
    app::EstimateOutput out;
    if (req.contains("audited_summary")) {
      out = app::run_estimate_summary(fr, req.at("audited_summary"), beta);
    } else {
      const Json& audited = field(req, "audited_csv");
      if (!audited.is_string()) throw SpecError("request: 'audited_csv' must be a string");
      out = app::run_estimate(fr, audited.get<std::string>(), beta);
    }
    out.document["population_hash"] = key;
    return out.document;
  }

  Json simulate(const Json& req) {
    CoverageOptions options;
    options.replications = req.value("replications", options.replications);
    options.beta = req.value("beta", options.beta);
    if (req.contains("relative_g") && !req.at("relative_g").is_null())
      options.relative_overall_precision = req.at("relative_g").get<double>();
    if (options.replications > 1000000) throw DomainError("replications capped at 1,000,000");
    const auto spec = app::build_spec(field(req, "plan_spec"), fpc_override(req));
    const bool has_population = req.contains("population_csv") || req.contains("population_hash");
    if (has_population) {
      auto [key, fr] = frame(req);
      auto errors = overpayment_spec_from_json(field(req, "sim_spec"));
      if (req.contains("seed")) errors.seed = req.at("seed").get<std::uint64_t>();
      auto doc = app::run_simulate(std::move(fr), errors, spec, options).document;
      doc["population_hash"] = key;
      return doc;
    }
    auto synthetic = synthetic_spec_from_json(field(req, "sim_spec"));
    if (req.contains("seed")) synthetic.seed = req.at("seed").get<std::uint64_t>();
    return app::run_simulate(synthetic, spec, options).document;
  }

  SessionStore sessions_;
};

}  // namespace repstrat::service
