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

#ifndef SOFTFLOW_CLI_HH_
#define SOFTFLOW_CLI_HH_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "softflow/explorer.hh"
#include "softflow/topology.hh"

namespace softflow {

/// Process exit status. Everything from 10 up is a configuration error.
enum ExitCode : int {
  kExitHolds = 0,
  kExitViolated = 1,
  kExitBoundExceeded = 2,
  kExitIo = 10,
  kExitBadTopology = 11,
  kExitUnknownController = 12,
  kExitBadProperty = 13,
  kExitBadArguments = 14,
  kExitInternal = 15,
};

int ExitCodeFor(Verdict v);

struct RunConfig {
  std::string topology_path;
  std::string controller = "lc-rebalance";
  // A built-in name, a path to a property JSON file, or inline JSON.
  std::string property = kBuiltinPhiName;
  std::optional<std::int64_t> bound;  // built-in property only
  bool por = false;
  bool assert_phi_invariant = false;
  SearchOrder order = SearchOrder::kBreadthFirst;
  std::optional<std::uint64_t> max_states;
  std::optional<double> time_limit_s;
  std::string output_path;  // empty: no file written
  unsigned worker_count = 1;
  bool audit = false;
};

struct CheckResult {
  int exit_code = kExitHolds;
  std::optional<nlohmann::ordered_json> report;
  std::string listing;  // human-readable counterexample
  std::string error;    // set for exit codes >= 10
};

/// Loads and validates the configuration, explores, and builds the report.
/// Never throws; configuration problems come back as exit codes >= 10.
CheckResult run_check(const RunConfig& config);

/// Report document for an exploration. Key order is fixed.
nlohmann::ordered_json ReportJson(const ExplorationReport& rep, const Topology& topo,
                                  const std::string& controller,
                                  const std::string& property, bool por);

/// One line per step, indented, numbered from 1.
std::string TraceListing(const Trace& trace, const Topology& topo);

/// Single-switch star: clients on switch ports 1..c (the last `dodgy` of
/// them dodgy), servers on c+1..c+s, one packet per client to the cluster.
struct GeneratedTopology {
  TopologyConfig topology;
  WorkloadConfig workload;
};

GeneratedTopology generate_topology_config(int clients, int servers, int dodgy = 1);
nlohmann::ordered_json generate_topology(int clients, int servers, int dodgy = 1);

struct ScalingOptions {
  std::vector<int> clients;
  std::vector<int> servers;
  double timeout_s = 60;
  std::optional<std::uint64_t> max_states;
  std::string controller = "lc-rebalance";
  // Needed for any reduction with the built-in property, which reads sLoad.
  bool assert_phi_invariant = true;
  std::string out_dir;  // writes scaling.json when set
};

/// Grid of lc-rebalance runs, por off then on per cell. Cells that hit the
/// time limit or state bound are recorded with "completed": false.
nlohmann::ordered_json run_scaling_suite(const ScalingOptions& opts);

}  // namespace softflow

#endif /* SOFTFLOW_CLI_HH_ */
