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

#include "softflow/cli.hh"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "softflow/controller.hh"
#include "softflow/proplang.hh"

namespace softflow {

using ojson = nlohmann::ordered_json;

int ExitCodeFor(Verdict v) {
  switch (v) {
    case Verdict::kHolds:
      return kExitHolds;
    case Verdict::kViolated:
      return kExitViolated;
    case Verdict::kBoundExceeded:
      return kExitBoundExceeded;
  }
  return kExitInternal;
}

std::string TraceListing(const Trace& trace, const Topology& topo) {
  std::ostringstream os;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    os << "  " << (i + 1) << ". " << Describe(trace.steps[i].action, topo) << "\n";
  }
  return os.str();
}

ojson ReportJson(const ExplorationReport& rep, const Topology& topo,
                 const std::string& controller, const std::string& property,
                 bool por) {
  ojson j;
  j["verdict"] = ToString(rep.verdict);
  j["states_explored"] = rep.states_explored;
  j["transitions"] = rep.transitions;
  j["elapsed_ms"] = rep.elapsed_ms;
  j["por"] = por;
  j["controller"] = controller;
  j["property"] = property;
  j["reduced_states"] = rep.reduced_states;
  j["fsync_classification"] = rep.fsync_classification;
  if (rep.verdict == Verdict::kBoundExceeded) j["bound_reason"] = rep.bound_reason;
  if (rep.violation) j["violation"] = rep.violation->description;
  if (rep.counterexample) {
    const auto& t = *rep.counterexample;
    ojson ce;
    ce["initial_digest"] = t.initial.ToHex();
    ce["steps"] = ojson::array();
    ce["listing"] = ojson::array();
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
      ce["steps"].push_back({{"action", ToJson(t.steps[i].action, topo)},
                             {"digest", t.steps[i].digest.ToHex()}});
      ce["listing"].push_back(std::to_string(i + 1) + ". " +
                              Describe(t.steps[i].action, topo));
    }
    j["counterexample"] = std::move(ce);
  }
  return j;
}

namespace {

struct Failure {
  int code;
  std::string message;
};

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Failure{kExitIo, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json ParseJson(const std::string& text, int code, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Failure{code, what + ": invalid JSON: " + e.what()};
  }
}

}  // namespace

CheckResult run_check(const RunConfig& config) {
  CheckResult res;
  try {
    if (config.topology_path.empty()) throw Failure{kExitBadArguments, "--topology is required"};
    if (config.worker_count == 0) throw Failure{kExitBadArguments, "--workers must be positive"};
    if (config.max_states && *config.max_states == 0) {
      throw Failure{kExitBadArguments, "--max-states must be at least 1"};
    }

    const auto doc = ParseJson(ReadFile(config.topology_path), kExitBadTopology, "topology");
    std::optional<Topology> topo;
    WorkloadConfig workload;
    try {
      topo = build_topology(ParseTopologyConfig(doc));
      auto w = ParseWorkloadConfig(doc);
      workload = w ? *w : DefaultWorkload(*topo);
    } catch (const ConfigError& e) {
      throw Failure{kExitBadTopology, std::string("topology: ") + e.what()};
    }

    const auto& names = BuiltinControllerNames();
    if (std::find(names.begin(), names.end(), config.controller) == names.end()) {
      throw Failure{kExitUnknownController,
                    "controller: unknown controller program '" + config.controller + "'"};
    }
    ControllerProgram cp;
    try {
      cp = MakeBuiltinController(config.controller, *topo);
      // Workload names are resolved against the topology here.
      initial_state(*topo, workload, cp);
    } catch (const ConfigError& e) {
      throw Failure{kExitBadTopology, std::string("topology: ") + e.what()};
    }

    Property phi;
    try {
      nlohmann::json pdoc;
      const auto& p = config.property;
      if (!p.empty() && (p.front() == '{' || p.front() == '"')) {
        pdoc = ParseJson(p, kExitBadProperty, "property");
      } else if (p == kBuiltinPhiName) {
        pdoc = {{"builtin", p}};
      } else if (std::filesystem::exists(p)) {
        pdoc = ParseJson(ReadFile(p), kExitBadProperty, "property");
      } else {
        throw Failure{kExitBadProperty, "property: unknown property '" + p + "'"};
      }
      if (config.bound) {
        if (!pdoc.is_object() || !pdoc.contains("builtin")) {
          if (pdoc.is_string()) {
            pdoc = {{"builtin", pdoc}};
          } else {
            throw Failure{kExitBadArguments, "--bound applies to built-in properties only"};
          }
        }
        pdoc["bound"] = *config.bound;
      }
      phi = ParseProperty(pdoc, *topo, cp.layout);
    } catch (const ConfigError& e) {
      throw Failure{kExitBadProperty, e.what()};
    }

    ExplorationOptions opts;
    opts.por = config.por;
    opts.por_options.assert_phi_invariant = config.assert_phi_invariant;
    opts.order = config.order;
    opts.max_states = config.max_states;
    opts.time_limit_s = config.time_limit_s;
    opts.worker_count = config.worker_count;
    opts.audit = config.audit;
    const auto rep = explore(*topo, workload, cp, phi, opts);

    res.exit_code = ExitCodeFor(rep.verdict);
    res.report = ReportJson(rep, *topo, config.controller, phi.name, config.por);
    if (config.audit) {
      const auto& a = rep.audit;
      (*res.report)["audit_failures"] = a.total_failures();
      (*res.report)["audit"] = {
          {"states_audited", a.states_audited},
          {"c1_failures", a.c1_failures},
          {"safety_failures", a.safety_failures},
          {"safe_fsync_states", a.safe_fsync_states},
          {"commutation_checks", a.commutation_checks},
          {"commutation_failures", a.commutation_failures},
          {"fsync_fired", a.fsync_fired},
          {"frq_failures", a.frq_failures},
          {"barrier_failures", a.barrier_failures},
          {"timeout_failures", a.timeout_failures},
          {"examples", a.examples},
      };
    }
    if (rep.counterexample) res.listing = TraceListing(*rep.counterexample, *topo);

    if (!config.output_path.empty()) {
      std::ofstream out(config.output_path);
      if (!out) throw Failure{kExitIo, "cannot write " + config.output_path};
      out << res.report->dump(2) << "\n";
      if (!out) throw Failure{kExitIo, "cannot write " + config.output_path};
    }
  } catch (const Failure& f) {
    res = {};
    res.exit_code = f.code;
    res.error = f.message;
  } catch (const ModelError& e) {
    res = {};
    res.exit_code = kExitInternal;
    res.error = std::string("model error: ") + e.what();
  }
  return res;
}

GeneratedTopology generate_topology_config(int clients, int servers, int dodgy) {
  if (clients < 1) throw ConfigError("clients must be at least 1");
  if (servers < 1) throw ConfigError("servers must be at least 1");
  if (dodgy < 0 || dodgy > clients) throw ConfigError("dodgy must be between 0 and clients");
  GeneratedTopology g;
  auto& t = g.topology;
  t.switches.push_back(TopologyConfig::Switch::WithPorts("sw1", clients + servers));
  for (int i = 1; i <= clients; ++i) {
    const auto role = i > clients - dodgy ? HostRole::kDodgyClient : HostRole::kClient;
    t.hosts.push_back({"c" + std::to_string(i), role, false});
  }
  for (int i = 1; i <= servers; ++i) {
    t.hosts.push_back({"s" + std::to_string(i), HostRole::kServer, false});
  }
  for (int i = 0; i < clients + servers; ++i) {
    t.links.push_back({{t.hosts[i].name, 0}, {"sw1", i + 1}, true});
  }
  for (int i = 1; i <= clients; ++i) {
    g.workload.packets.push_back({"c" + std::to_string(i), t.cluster_address, std::nullopt});
  }
  return g;
}

ojson generate_topology(int clients, int servers, int dodgy) {
  auto g = generate_topology_config(clients, servers, dodgy);
  return ToJson(g.topology, g.workload);
}

ojson run_scaling_suite(const ScalingOptions& opts) {
  if (opts.clients.empty() || opts.servers.empty()) {
    throw ConfigError("scaling: client and server ranges must be non-empty");
  }
  ojson table;
  table["controller"] = opts.controller;
  table["property"] = kBuiltinPhiName;
  table["timeout_s"] = opts.timeout_s;
  table["assert_phi_invariant"] = opts.assert_phi_invariant;
  table["cells"] = ojson::array();
  for (int c : opts.clients) {
    for (int s : opts.servers) {
      auto g = generate_topology_config(c, s, 1);
      const auto topo = build_topology(g.topology);
      const auto cp = MakeBuiltinController(opts.controller, topo);
      const auto phi = ParseProperty(kBuiltinPhiName, topo, cp.layout);
      for (bool por : {false, true}) {
        ExplorationOptions eo;
        eo.por = por;
        eo.por_options.assert_phi_invariant = opts.assert_phi_invariant;
        eo.time_limit_s = opts.timeout_s;
        eo.max_states = opts.max_states;
        const auto rep = explore(topo, g.workload, cp, phi, eo);
        table["cells"].push_back({{"clients", c},
                                  {"servers", s},
                                  {"por", por},
                                  {"completed", rep.verdict != Verdict::kBoundExceeded},
                                  {"verdict", ToString(rep.verdict)},
                                  {"states_explored", rep.states_explored},
                                  {"transitions", rep.transitions},
                                  {"elapsed_ms", rep.elapsed_ms}});
      }
    }
  }
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    const auto path = std::filesystem::path(opts.out_dir) / "scaling.json";
    std::ofstream out(path);
    if (!out) throw ConfigError("scaling: cannot write " + path.string());
    out << table.dump(2) << "\n";
  }
  return table;
}

}  // namespace softflow
