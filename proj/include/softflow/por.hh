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

#ifndef SOFTFLOW_POR_HH_
#define SOFTFLOW_POR_HH_

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "softflow/controller.hh"
#include "softflow/proplang.hh"
#include "softflow/semantics.hh"
#include "softflow/state.hh"
#include "softflow/topology.hh"

namespace softflow {

struct PorOptions {
  // The user vouches that flow-removed handling never changes the truth of
  // the property. Skips the static register-footprint test.
  bool assert_phi_invariant = false;
  // Experimental: further action kinds treated as safe. Unsound in general;
  // run with auditing so the commutation oracle samples every use.
  std::set<Action::Kind> extra_safe_kinds;
};

/// Everything safe-action classification depends on: the controller, the
/// topology and the property.
class PorContext {
 public:
  PorContext(const Topology& topo, const ControllerProgram& cp,
             const Property& phi, PorOptions options = {});

  const Topology& topo() const { return *topo_; }
  const ControllerProgram& cp() const { return *cp_; }
  const Property& phi() const { return *phi_; }
  const PorOptions& options() const { return options_; }

  /// Whether fsync actions pass the independence and invisibility tests.
  bool fsync_safe() const { return fsync_safe_; }
  /// Human-readable reason for fsync_safe().
  const std::string& fsync_reason() const { return reason_; }

 private:
  const Topology* topo_;
  const ControllerProgram* cp_;
  const Property* phi_;
  PorOptions options_;
  bool fsync_safe_ = false;
  std::string reason_;
};

/// fsync under an order-insensitive program whose flow-removed handler is
/// invisible to the property; false for every other kind unless widened.
bool is_safe(const Action& a, const PorContext& ctx);

/// Safe enabled actions if there are any, else all of `enabled`.
std::vector<Action> ample(const GlobalState& s, const std::vector<Action>& enabled,
                          const PorContext& ctx);

/// Runs both interleavings of α and β from s. True iff each stays enabled
/// after the other and the two end states are canonically equal.
bool commutation_oracle(const GlobalState& s, const Action& alpha,
                        const Action& beta, const PorContext& ctx);

/// Reachability graph as recorded by the explorer.
/// Successor lists are stored back to back: node v's targets are
/// targets[offsets[v] .. offsets[v + 1]).
struct ExploredGraph {
  std::vector<std::uint64_t> offsets{0};
  std::vector<std::uint32_t> targets;
  std::vector<bool> fully_expanded;  // ample(s) = A(s)

  static ExploredGraph FromAdjacency(const std::vector<std::vector<std::uint32_t>>& succ,
                                     std::vector<bool> fully_expanded);

  std::size_t size() const { return offsets.size() - 1; }
  std::span<const std::uint32_t> successors(std::uint32_t v) const {
    return {targets.data() + offsets[v], targets.data() + offsets[v + 1]};
  }
};

/// True iff every cycle passes through a fully expanded state.
bool audit_c4(const ExploredGraph& g);

// --- Order sensitivity ----------------------------------------------------

struct OrderWitness {
  StateDigest state;
  Action alpha;
  Action beta;
  std::string detail;
};

struct OrderSensitivityReport {
  std::uint64_t states_checked = 0;
  std::uint64_t pairs_checked = 0;
  std::vector<OrderWitness> witnesses;  // at most `max_witnesses`

  std::uint64_t witness_count = 0;
  bool empty() const { return witness_count == 0; }
};

/// Bounded evidence for the program being order-insensitive: in each sampled
/// state, every pair of enabled handler actions (ctrl, bsync, fsync) is run
/// in both orders and the end states compared.
OrderSensitivityReport check_order_sensitivity(const ControllerProgram& cp,
                                               const Topology& topo,
                                               const std::vector<GlobalState>& sample,
                                               std::size_t max_witnesses = 16);

}  // namespace softflow

#endif /* SOFTFLOW_POR_HH_ */
