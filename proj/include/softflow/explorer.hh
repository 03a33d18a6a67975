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

#ifndef SOFTFLOW_EXPLORER_HH_
#define SOFTFLOW_EXPLORER_HH_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "softflow/controller.hh"
#include "softflow/por.hh"
#include "softflow/proplang.hh"
#include "softflow/semantics.hh"
#include "softflow/state.hh"
#include "softflow/topology.hh"

namespace softflow {

enum class SearchOrder : std::uint8_t { kBreadthFirst, kDepthFirst };
enum class Verdict : std::uint8_t { kHolds, kViolated, kBoundExceeded };

const char* ToString(Verdict v);
const char* ToString(SearchOrder o);

struct ExplorationOptions {
  bool por = false;
  PorOptions por_options;
  SearchOrder order = SearchOrder::kBreadthFirst;
  std::optional<std::uint64_t> max_states;
  std::optional<double> time_limit_s;
  // Keep the search tree, edges and per-state expansion flags (audit_c4).
  bool record_graph = false;
  // Level-synchronous successor generation on this many threads. Merging
  // stays sequential, so counts do not depend on it.
  unsigned worker_count = 1;

  // Checks run at every expanded state: C1, ample/safety agreement, the
  // commutation oracle for every safe enabled action against every
  // co-enabled action, frq shrinking on fsync, FlowMods only from the first
  // control-queue segment, frmvd only for timed rules.
  bool audit = false;
  // Keep each digest's serialization and fail on a digest collision.
  bool check_collisions = false;
  // Return every visited digest / state (test oracles).
  bool collect_digests = false;
  bool collect_states = false;
};

struct TraceStep {
  Action action;
  StateDigest digest;  // state after the action
};

struct Trace {
  StateDigest initial;
  std::vector<TraceStep> steps;
};

/// What was violated: the invariant at the trace's last state, or
/// obligation `obligation` on its last transition.
struct Violation {
  bool invariant = true;
  std::size_t obligation = 0;
  std::string description;
};

struct AuditStats {
  std::uint64_t states_audited = 0;
  std::uint64_t c1_failures = 0;
  std::uint64_t safety_failures = 0;  // reduced ample set with an unsafe member
  std::uint64_t safe_fsync_states = 0;
  std::uint64_t commutation_checks = 0;
  std::uint64_t commutation_failures = 0;
  std::uint64_t fsync_fired = 0;
  std::uint64_t frq_failures = 0;
  std::uint64_t barrier_failures = 0;
  std::uint64_t timeout_failures = 0;
  std::vector<std::string> examples;  // first few failures, described

  std::uint64_t total_failures() const {
    return c1_failures + safety_failures + commutation_failures + frq_failures +
           barrier_failures + timeout_failures;
  }
};

/// Parent pointers of the search; node 0 is the initial state. The edge
/// from the parent is the `choice`-th action of enabled_actions(parent), so
/// states and actions are re-derived by replay rather than stored.
struct SearchNode {
  std::uint32_t parent = 0;
  std::uint16_t choice = 0;
};

struct ExplorationReport {
  Verdict verdict = Verdict::kHolds;
  std::uint64_t states_explored = 0;
  std::uint64_t transitions = 0;
  double elapsed_ms = 0;
  std::uint64_t reduced_states = 0;  // states where ample(s) != A(s)
  std::optional<Trace> counterexample;
  std::optional<Violation> violation;
  std::string bound_reason;
  std::string fsync_classification;

  AuditStats audit;
  std::optional<ExploredGraph> graph;
  std::vector<SearchNode> tree;  // filled when record_graph
  std::vector<StateDigest> digests;
  std::vector<GlobalState> states;
};

ExplorationReport explore(const Topology& topo, const WorkloadConfig& workload,
                          const ControllerProgram& cp, const Property& phi,
                          const ExplorationOptions& opts);

/// Path from node 0 to `node`, re-derived by replaying the recorded
/// choices. Throws ModelError for an unknown node or a tree that does not
/// fit the model.
Trace reconstruct_trace(const Topology& topo, const WorkloadConfig& workload,
                        const ControllerProgram& cp,
                        const std::vector<SearchNode>& tree, std::uint32_t node);

/// Re-applies the trace from the initial state, checking every digest.
/// Returns the final state, or nullopt if the trace does not replay.
std::optional<GlobalState> replay(const Topology& topo, const WorkloadConfig& workload,
                                  const ControllerProgram& cp, const Trace& trace);

/// True iff the trace replays and ends in the recorded violation.
bool replay_reproduces(const Topology& topo, const WorkloadConfig& workload,
                       const ControllerProgram& cp, const Property& phi,
                       const Trace& trace, const Violation& violation);

/// Checks that every action of the trace comes after its causal parent:
/// nomatch after send, ctrl after nomatch, add and fwd after ctrl, match
/// after add of its rule, frmvd after add of its rule, fsync after frmvd,
/// mod after fsync, recv after a delivery. Rules rewritten by mod may be
/// matched or expire after that mod.
bool causal_audit(const Trace& trace);

/// Like causal_audit but names the first offending step.
std::optional<std::string> causal_audit_failure(const Trace& trace);

}  // namespace softflow

#endif /* SOFTFLOW_EXPLORER_HH_ */
