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


#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "httplib.h"
#include "repstrat/app.hpp"
#include "repstrat/service.hpp"

namespace {

using repstrat::Json;
namespace app = repstrat::app;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw repstrat::ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw repstrat::ParseError("cannot write " + path);
  out << text;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// --seed, then REPSTRAT_SEED.
std::optional<std::uint64_t> resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return flag;
  if (const char* env = std::getenv("REPSTRAT_SEED")) {
    const std::string text(env);
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
      throw repstrat::ParseError("REPSTRAT_SEED must be a non-negative integer");
    return std::stoull(text);
  }
  return std::nullopt;
}

struct Options {
  std::string population, strata, plan_spec, audited, summary, sim_spec, out, replications_csv;
  std::string listen = "127.0.0.1:8080";
  std::optional<std::uint64_t> seed;
  double beta = 0.05;
  std::optional<double> overall_g;
  std::optional<double> relative_g;
  std::size_t replications = 10000;
  unsigned threads = 0;
  bool fpc = false;
  bool no_fpc = false;
  bool json = false;

  std::optional<bool> fpc_override() const {
    if (fpc) return true;
    if (no_fpc) return false;
    return std::nullopt;
  }
};

repstrat::PopulationFrame load_frame(const Options& o) {
  return app::build_frame(read_file(o.population), app::parse_json(read_file(o.strata), o.strata.c_str()));
}

repstrat::PrecisionSpec load_spec(const Options& o) {
  return app::build_spec(app::parse_json(read_file(o.plan_spec), o.plan_spec.c_str()), o.fpc_override());
}

int cmd_plan(const Options& o) {
  const auto out = app::run_plan(load_frame(o), load_spec(o));
  if (!o.out.empty()) write_file(o.out, dump(out.document));
  std::cout << (o.json ? dump(out.document) : out.table);
  for (const auto& w : out.plan.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& w : out.frame.warnings) std::cerr << "warning: " << w << '\n';
  return app::kExitOk;
}

int cmd_sample(const Options& o) {
  const auto seed = resolve_seed(o.seed);
  if (!seed) throw repstrat::SpecError("sample requires --seed or REPSTRAT_SEED");
  const auto out = app::run_sample(load_frame(o), load_spec(o), *seed, o.overall_g);
  if (!o.out.empty()) {
    write_file(o.out, out.csv);
    write_file(o.out + ".json", dump(out.sidecar));
    std::cout << out.table;
  } else {
    std::cout << out.csv;
    std::cerr << out.table;
  }
  return out.exit_code;
}

int cmd_estimate(const Options& o) {
  if (o.audited.empty() == o.summary.empty())
    throw repstrat::SpecError("estimate needs exactly one of --audited and --summary");
  const auto frame = load_frame(o);
  const auto out = o.summary.empty()
                       ? app::run_estimate(frame, read_file(o.audited), o.beta)
                       : app::run_estimate_summary(frame, app::parse_json(read_file(o.summary), o.summary.c_str()), o.beta);
  if (!o.out.empty()) write_file(o.out, dump(out.document));
  std::cout << (o.json ? dump(out.document) : out.table);
  return app::kExitOk;
}

int cmd_simulate(const Options& o) {
  if (o.population.empty() != o.strata.empty())
    throw repstrat::SpecError("simulate: --population and --strata go together");
  const auto sim_json = app::parse_json(read_file(o.sim_spec), o.sim_spec.c_str());
  const auto seed = resolve_seed(o.seed);
  repstrat::CoverageOptions options;
  options.replications = o.replications;
  options.beta = o.beta;
  options.relative_overall_precision = o.relative_g;
  options.keep_replications = !o.replications_csv.empty();
  options.threads = o.threads;
  app::SimulateOutput out;
  if (o.population.empty()) {
    auto spec = repstrat::synthetic_spec_from_json(sim_json);
    if (seed) spec.seed = *seed;
    out = app::run_simulate(spec, load_spec(o), options);
  } else {
    auto errors = repstrat::overpayment_spec_from_json(sim_json);
    if (seed) errors.seed = *seed;
    out = app::run_simulate(load_frame(o), errors, load_spec(o), options);
  }
  if (!o.out.empty()) write_file(o.out, dump(out.document));
  if (options.keep_replications) write_file(o.replications_csv, out.replications_csv);
  std::cout << (o.json ? dump(out.document) : out.table);
  return app::kExitOk;
}

int cmd_serve(const Options& o) {
  const auto colon = o.listen.rfind(':');
  if (colon == std::string::npos) throw repstrat::SpecError("--listen must be host:port");
  const std::string host = o.listen.substr(0, colon);
  const std::string port_text = o.listen.substr(colon + 1);
  if (port_text.empty() || port_text.size() > 5 || port_text.find_first_not_of("0123456789") != std::string::npos)
    throw repstrat::SpecError("--listen port must be a number");
  int port = std::stoi(port_text);

  repstrat::service::Service service;
  httplib::Server server;
  auto route = [&service](const httplib::Request& req, httplib::Response& res) {
    const auto r = service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get("/health", route);
  for (const char* path : {"/plan", "/sample", "/estimate", "/simulate"}) server.Post(path, route);
  // Port 0 picks a free port; the line below reports the one in use.
  if (port == 0) {
    port = server.bind_to_any_port(host);
    if (port < 0) throw repstrat::DomainError("cannot bind " + o.listen);
  } else if (!server.bind_to_port(host, port)) {
    throw repstrat::DomainError("cannot bind " + o.listen);
  }
  std::cerr << "repstrat " << app::kVersion << " listening on " << host << ':' << port << std::endl;
  if (!server.listen_after_bind()) throw repstrat::DomainError("server stopped unexpectedly");
  return app::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Representative stratified audit sampling"};
  cli.require_subcommand(1);
  cli.set_version_flag("--version", std::string(app::kVersion));
  Options o;

  auto add_fpc = [&o](CLI::App* sub) {
    auto* on = sub->add_flag("--fpc", o.fpc, "Force the finite population correction on");
    auto* off = sub->add_flag("--no-fpc", o.no_fpc, "Force the finite population correction off");
    on->excludes(off);
  };

  auto* plan = cli.add_subcommand("plan", "Stratify a population and compute per-stratum sample sizes");
  plan->add_option("--population", o.population, "Population CSV (claim_id,amount)")->required();
  plan->add_option("--strata", o.strata, "Strata config JSON")->required();
  plan->add_option("--plan-spec", o.plan_spec, "Precision spec JSON")->required();
  plan->add_option("--out", o.out, "Write plan JSON here");
  plan->add_flag("--json", o.json, "Print JSON instead of the table");
  add_fpc(plan);

  auto* sample = cli.add_subcommand("sample", "Draw a seeded stratified sample and check representativeness");
  sample->add_option("--population", o.population)->required();
  sample->add_option("--strata", o.strata)->required();
  sample->add_option("--plan-spec", o.plan_spec)->required();
  sample->add_option("--seed", o.seed, "64-bit seed (fallback: REPSTRAT_SEED)");
  sample->add_option("--overall-g", o.overall_g, "Overall precision g for |ybar_st - Ybar| <= g");
  sample->add_option("--out", o.out, "Sample CSV path; the JSON sidecar goes to <out>.json");
  add_fpc(sample);

  auto* estimate = cli.add_subcommand("estimate", "Estimate total overpayment from an audited sample");
  estimate->add_option("--population", o.population)->required();
  estimate->add_option("--strata", o.strata)->required();
  estimate->add_option("--audited", o.audited, "Audited CSV (stratum,claim_id,book_amount,audited_amount)");
  estimate->add_option("--summary", o.summary, "Audited summary JSON (n_i, ybar_i, s2_y_i, non-zero (d, y) pairs)");
  estimate->add_option("--beta", o.beta, "Lower bound tail probability")->capture_default_str();
  estimate->add_option("--out", o.out, "Write report JSON here");
  estimate->add_flag("--json", o.json, "Print JSON instead of the table");

  auto* simulate = cli.add_subcommand("simulate", "Monte Carlo coverage on a synthetic population");
  simulate->add_option("--sim-spec", o.sim_spec,
                       "Synthetic population spec JSON, or per-stratum error models when --population is given")
      ->required();
  simulate->add_option("--population", o.population, "Use this population's book amounts");
  simulate->add_option("--strata", o.strata, "Strata for --population");
  simulate->add_option("--plan-spec", o.plan_spec)->required();
  simulate->add_option("--seed", o.seed, "Overrides the spec seed (fallback: REPSTRAT_SEED)");
  simulate->add_option("--replications", o.replications)->capture_default_str();
  simulate->add_option("--beta", o.beta)->capture_default_str();
  simulate->add_option("--relative-g", o.relative_g, "Overall precision as a fraction of Ybar");
  simulate->add_option("--replications-csv", o.replications_csv, "Write per-replication rows here");
  simulate->add_option("--threads", o.threads, "Worker threads (0: all cores)");
  simulate->add_option("--out", o.out, "Write report JSON here");
  simulate->add_flag("--json", o.json, "Print JSON instead of the table");
  add_fpc(simulate);

  auto* serve = cli.add_subcommand("serve", "JSON-over-HTTP facade");
  serve->add_option("--listen", o.listen, "host:port")->capture_default_str();

  try {
    cli.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << Json{{"error", {{"kind", "usage"}, {"message", e.what()}}}}.dump() << '\n';
    return app::kExitValidation;
  }

  try {
    if (*plan) return cmd_plan(o);
    if (*sample) return cmd_sample(o);
    if (*estimate) return cmd_estimate(o);
    if (*simulate) return cmd_simulate(o);
    if (*serve) return cmd_serve(o);
  } catch (const repstrat::Error& e) {
    std::cerr << repstrat::error_json(e).dump() << '\n';
    return app::kExitValidation;
  }
  return app::kExitValidation;
}
