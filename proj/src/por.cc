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

#include "softflow/por.hh"

#include <algorithm>
#include <optional>

namespace softflow {

PorContext::PorContext(const Topology& topo, const ControllerProgram& cp,
                       const Property& phi, PorOptions options)
    : topo_(&topo), cp_(&cp), phi_(&phi), options_(std::move(options)) {
  if (!cp.declared_order_insensitive) {
    reason_ = "controller is not declared order-insensitive";
    return;
  }
  for (const auto& o : phi.obligations) {
    if (o.kind == Action::Kind::kFsync) {
      reason_ = "property carries an obligation on fsync";
      return;
    }
  }
  if (options_.assert_phi_invariant) {
    fsync_safe_ = true;
    reason_ = "property invariance asserted by the user";
    return;
  }
  const auto fp = registers_read(phi);
  if (!fp.has_ctrl_atoms()) {
    fsync_safe_ = true;
    reason_ = "property reads no controller state";
    return;
  }
  if (fp.whole_state) {
    reason_ = "property compares the whole controller state";
    return;
  }
  for (const auto& r : fp.registers) {
    if (cp.registers_written_by_flow_removed.count(r)) {
      reason_ = "property reads register '" + r + "' written by the flow-removed handler";
      return;
    }
  }
  fsync_safe_ = true;
  reason_ = "property registers disjoint from flow-removed writes";
}

bool is_safe(const Action& a, const PorContext& ctx) {
  if (a.kind == Action::Kind::kFsync) return ctx.fsync_safe();
  return ctx.options().extra_safe_kinds.count(a.kind) > 0;
}

std::vector<Action> ample(const GlobalState&, const std::vector<Action>& enabled,
                          const PorContext& ctx) {
  std::vector<Action> safe;
  for (const auto& a : enabled) {
    if (is_safe(a, ctx)) safe.push_back(a);
  }
  if (safe.empty()) return enabled;
  return safe;
}

namespace {

std::optional<GlobalState> TryApply(const GlobalState& s, const Action& a,
                                    const PorContext& ctx) {
  if (!is_enabled(s, a, ctx.topo(), ctx.cp())) return std::nullopt;
  try {
    return apply(s, a, ctx.topo(), ctx.cp());
  } catch (const ModelError&) {
    return std::nullopt;
  }
}

}  // namespace

bool commutation_oracle(const GlobalState& s, const Action& alpha,
                        const Action& beta, const PorContext& ctx) {
  auto sa = TryApply(s, alpha, ctx);
  auto sb = TryApply(s, beta, ctx);
  if (!sa || !sb) return false;
  auto sab = TryApply(*sa, beta, ctx);
  auto sba = TryApply(*sb, alpha, ctx);
  if (!sab || !sba) return false;
  return canonical_hash(*sab) == canonical_hash(*sba);
}

ExploredGraph ExploredGraph::FromAdjacency(
    const std::vector<std::vector<std::uint32_t>>& succ, std::vector<bool> fully_expanded) {
  ExploredGraph g;
  for (const auto& out : succ) {
    g.targets.insert(g.targets.end(), out.begin(), out.end());
    g.offsets.push_back(g.targets.size());
  }
  g.fully_expanded = std::move(fully_expanded);
  return g;
}

bool audit_c4(const ExploredGraph& g) {
  // Iterative DFS over the subgraph of reduced states; a back edge closes a
  // cycle that avoids every fully expanded state.
  const auto n = g.size();
  enum : std::uint8_t { kWhite, kGrey, kBlack };
  std::vector<std::uint8_t> color(n, kWhite);
  auto reduced = [&](std::uint32_t v) {
    return v < g.fully_expanded.size() && !g.fully_expanded[v];
  };
  std::vector<std::pair<std::uint32_t, std::size_t>> stack;
  for (std::uint32_t root = 0; root < static_cast<std::uint32_t>(n); ++root) {
    if (color[root] != kWhite || !reduced(root)) continue;
    stack.push_back({root, 0});
    color[root] = kGrey;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      const auto out = g.successors(v);
      if (next == out.size()) {
        color[v] = kBlack;
        stack.pop_back();
        continue;
      }
      const auto w = out[next++];
      if (!reduced(w)) continue;
      if (color[w] == kGrey) return false;
      if (color[w] == kWhite) {
        color[w] = kGrey;
        stack.push_back({w, 0});
      }
    }
  }
  return true;
}

OrderSensitivityReport check_order_sensitivity(const ControllerProgram& cp,
                                               const Topology& topo,
                                               const std::vector<GlobalState>& sample,
                                               std::size_t max_witnesses) {
  OrderSensitivityReport rep;
  for (const auto& s : sample) {
    ++rep.states_checked;
    std::vector<Action> handlers;
    for (const auto& a : enabled_actions(s, topo, cp)) {
      if (a.is_handler()) handlers.push_back(a);
    }
    for (std::size_t i = 0; i < handlers.size(); ++i) {
      for (std::size_t j = i + 1; j < handlers.size(); ++j) {
        ++rep.pairs_checked;
        const auto& a = handlers[i];
        const auto& b = handlers[j];
        std::string detail;
        try {
          const auto ab = apply(apply(s, a, topo, cp), b, topo, cp);
          const auto ba = apply(apply(s, b, topo, cp), a, topo, cp);
          if (canonical_hash(ab) == canonical_hash(ba)) continue;
          detail = "end states differ";
          if (ab.ctrl.cs != ba.ctrl.cs) detail = "controller registers differ";
        } catch (const ModelError& e) {
          detail = std::string("one order fails: ") + e.what();
        }
        ++rep.witness_count;
        if (rep.witnesses.size() < max_witnesses) {
          rep.witnesses.push_back({canonical_hash(s), a, b, detail});
        }
      }
    }
  }
  return rep;
}

}  // namespace softflow
