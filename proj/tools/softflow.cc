/*
 * Copyright (c) 2026, The softflow Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
*/

// softflow: model checker for SDN controller programs.
//
//   softflow check --topology star.json --controller rr-naive --por off
//   softflow gen-topo --clients 4 --servers 2 > star.json
//   softflow scaling --clients 3-5 --servers 2-3 --out results/

#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "softflow/cli.hh"

namespace {

using softflow::kExitBadArguments;

// "3", "3-5" or "3,4,7".
std::vector<int> ParseRange(const std::string& s) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto comma = s.find(',', pos);
    auto part = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    auto dash = part.find('-');
    if (dash == std::string::npos) {
      out.push_back(std::stoi(part));
    } else {
      int lo = std::stoi(part.substr(0, dash));
      int hi = std::stoi(part.substr(dash + 1));
      for (int i = lo; i <= hi; ++i) out.push_back(i);
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"softflow: explicit-state model checker for SDN controller programs"};
  app.require_subcommand(1);

  softflow::RunConfig run;
  std::string por = "off";
  std::string order = "bfs";
  std::uint64_t max_states = 0;
  double time_limit = 0;
  std::int64_t bound = 0;
  bool quiet = false;
  auto* check = app.add_subcommand("check", "explore a topology under a controller program");
  check->add_option("--topology", run.topology_path, "topology JSON document")->required();
  check->add_option("--controller", run.controller, "rr-naive | lc-naive | lc-rebalance")
      ->capture_default_str();
  check->add_option("--property", run.property,
                    "built-in property name, property JSON file, or inline JSON")
      ->capture_default_str();
  auto* bound_opt = check->add_option("--bound", bound, "load bound of the built-in property");
  check->add_option("--por", por, "partial-order reduction: on | off")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  check->add_flag("--assert-phi-invariant", run.assert_phi_invariant,
                  "treat flow-removed handling as invisible to the property");
  check->add_option("--order", order, "search order: bfs | dfs")
      ->check(CLI::IsMember({"bfs", "dfs"}))
      ->capture_default_str();
  auto* max_opt = check->add_option("--max-states", max_states, "state bound");
  auto* time_opt = check->add_option("--time-limit", time_limit, "time bound in seconds");
  check->add_option("--workers", run.worker_count, "successor-generation threads")
      ->capture_default_str();
  check->add_option("--output", run.output_path, "write the JSON report here");
  check->add_flag("--audit", run.audit, "check reduction side conditions at every state");
  check->add_flag("--quiet", quiet, "do not print the report");

  int clients = 4, servers = 2, dodgy = 1;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-topo", "write a single-switch star topology");
  gen->add_option("--clients", clients)->capture_default_str();
  gen->add_option("--servers", servers)->capture_default_str();
  gen->add_option("--dodgy", dodgy)->capture_default_str();
  gen->add_option("--output", gen_out, "file to write (default: stdout)");

  std::string client_range = "3", server_range = "2-3";
  softflow::ScalingOptions scaling;
  auto* sc = app.add_subcommand("scaling", "lc-rebalance over a grid of topologies");
  sc->add_option("--clients", client_range, "e.g. 3-5")->capture_default_str();
  sc->add_option("--servers", server_range, "e.g. 2-5")->capture_default_str();
  sc->add_option("--timeout", scaling.timeout_s, "per-run time limit in seconds")
      ->capture_default_str();
  sc->add_option("--out", scaling.out_dir, "directory for scaling.json");
  bool no_assert = false;
  sc->add_flag("--no-assert-phi-invariant", no_assert,
               "do not vouch for property invariance (por then reduces nothing)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitBadArguments;
  }

  if (check->parsed()) {
    run.por = por == "on";
    run.order = order == "dfs" ? softflow::SearchOrder::kDepthFirst
                               : softflow::SearchOrder::kBreadthFirst;
    if (*max_opt) run.max_states = max_states;
    if (*time_opt) run.time_limit_s = time_limit;
    if (*bound_opt) run.bound = bound;
    auto res = softflow::run_check(run);
    if (!res.error.empty()) {
      std::cerr << "softflow: " << res.error << "\n";
      return res.exit_code;
    }
    if (!quiet) std::cout << res.report->dump(2) << "\n";
    if (!res.listing.empty()) std::cerr << "counterexample:\n" << res.listing;
    return res.exit_code;
  }

  if (gen->parsed()) {
    try {
      const auto doc = softflow::generate_topology(clients, servers, dodgy).dump(2);
      if (gen_out.empty()) {
        std::cout << doc << "\n";
      } else {
        std::ofstream out(gen_out);
        out << doc << "\n";
        if (!out) {
          std::cerr << "softflow: cannot write " << gen_out << "\n";
          return softflow::kExitIo;
        }
      }
    } catch (const softflow::ConfigError& e) {
      std::cerr << "softflow: " << e.what() << "\n";
      return kExitBadArguments;
    }
    return 0;
  }

  try {
    scaling.clients = ParseRange(client_range);
    scaling.servers = ParseRange(server_range);
    scaling.assert_phi_invariant = !no_assert;
    std::cout << softflow::run_scaling_suite(scaling).dump(2) << "\n";
  } catch (const std::invalid_argument&) {
    std::cerr << "softflow: malformed range\n";
    return kExitBadArguments;
  } catch (const softflow::ConfigError& e) {
    std::cerr << "softflow: " << e.what() << "\n";
    return kExitBadArguments;
  }
  return 0;
}
