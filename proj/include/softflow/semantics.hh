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

#ifndef SOFTFLOW_SEMANTICS_HH_
#define SOFTFLOW_SEMANTICS_HH_

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "softflow/controller.hh"
#include "softflow/topology.hh"
#include "softflow/types.hh"

namespace softflow {

/// A transition label.
///
/// The controller-state parameter of ctrl, bsync and fsync is not stored:
/// it is always the source state's controller state, so two labels that
/// differ only in it denote the same event.
struct Action {
  enum class Kind : std::uint8_t {
    kSend,
    kRecv,
    kMatch,
    kNoMatch,
    kCtrl,
    kFwd,
    kAdd,
    kDel,
    kMod,
    kBrepl,
    kBsync,
    kFrmvd,
    kFsync,
  };

  Kind kind = Kind::kSend;
  HostId host;       // send, recv
  SwitchId sw;       // everything else
  Packet pkt;        // send, recv, match, nomatch, ctrl, fwd
  Rule rule;         // match, frmvd, fsync, add, del
  PortId port;       // fwd
  FlowMod msg;       // add, del, mod
  BarrierId barrier; // brepl, bsync

  static Action Send(HostId h, Packet p);
  static Action Recv(HostId h, Packet p);
  static Action Match(SwitchId sw, Packet p, Rule r);
  static Action NoMatch(SwitchId sw, Packet p);
  static Action Ctrl(SwitchId sw, Packet p);
  static Action Fwd(SwitchId sw, Packet p, PortId pt);
  static Action Add(SwitchId sw, Rule r);
  static Action Del(SwitchId sw, Rule r);
  static Action Mod(SwitchId sw, FlowMod m);
  static Action Brepl(SwitchId sw, BarrierId b);
  static Action Bsync(SwitchId sw, BarrierId b);
  static Action Frmvd(SwitchId sw, Rule r);
  static Action Fsync(SwitchId sw, Rule r);

  /// ctrl, bsync and fsync run a controller handler.
  bool is_handler() const {
    return kind == Kind::kCtrl || kind == Kind::kBsync || kind == Kind::kFsync;
  }

  auto operator<=>(const Action&) const = default;
};

const char* ToString(Action::Kind kind);
std::optional<Action::Kind> ParseActionKind(const std::string& s);

std::string Describe(const Action& a, const Topology& topo);
nlohmann::ordered_json ToJson(const Action& a, const Topology& topo);
std::string Describe(const Rule& r, const Topology& topo);

/// Highest-priority rule of `ft` matching pkt; among equal priorities the
/// first in canonical order.
std::optional<Rule> match_rule(const FlatSet<Rule>& ft, const Packet& pkt);

/// Every enabled action, sorted and without duplicates.
std::vector<Action> enabled_actions(const GlobalState& s, const Topology& topo,
                                    const ControllerProgram& cp);

bool is_enabled(const GlobalState& s, const Action& a, const Topology& topo,
                const ControllerProgram& cp);

/// Successor of `s` under `a`. Throws ModelError unless `a` is enabled.
GlobalState apply(const GlobalState& s, const Action& a, const Topology& topo,
                  const ControllerProgram& cp);

/// Empty queues and tables, `cp`'s initial registers, and each host's
/// send buffer filled from `workload`.
GlobalState initial_state(const Topology& topo, const WorkloadConfig& workload,
                          const ControllerProgram& cp);

}  // namespace softflow

#endif /* SOFTFLOW_SEMANTICS_HH_ */
