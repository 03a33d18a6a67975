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

#ifndef SOFTFLOW_CONTROLLER_HH_
#define SOFTFLOW_CONTROLLER_HH_

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "softflow/topology.hh"
#include "softflow/types.hh"

namespace softflow {

/// How a register is indexed.
enum class IndexDomain : std::uint8_t {
  kScalar,    // one cell
  kServer,    // one cell per server ordinal
  kEndpoint,  // one cell per address, cluster address included
};

struct RegisterSpec {
  std::string name;
  IndexDomain domain = IndexDomain::kScalar;
};

/// Names and shapes of a program's registers.
class RegisterLayout {
 public:
  RegisterLayout() = default;
  explicit RegisterLayout(std::vector<RegisterSpec> specs)
      : specs_(std::move(specs)) {}

  const std::vector<RegisterSpec>& specs() const { return specs_; }
  std::optional<std::size_t> Find(const std::string& name) const;
  std::size_t Cells(std::size_t slot, const Topology& topo) const;

  /// A zero-filled state shaped for `topo`.
  ControllerState ZeroState(const Topology& topo) const;

 private:
  std::vector<RegisterSpec> specs_;
};

/// Output of a handler: a PacketOut into a switch's forward queue or a
/// control message into its control queue.
struct Emission {
  SwitchId sw;
  std::optional<ForwardEntry> packet_out;
  std::optional<ControlMessage> control;

  static Emission PacketOut(SwitchId sw, Packet pkt, PortId port) {
    return {sw, ForwardEntry{pkt, port}, std::nullopt};
  }
  static Emission Control(SwitchId sw, ControlMessage msg) {
    return {sw, std::nullopt, std::move(msg)};
  }

  bool operator==(const Emission&) const = default;
};

struct HandlerResult {
  ControllerState cs;
  std::vector<Emission> out;
};

using PacketInHandler =
    std::function<HandlerResult(const Packet&, SwitchId, const ControllerState&)>;
using BarrierHandler =
    std::function<HandlerResult(BarrierId, SwitchId, const ControllerState&)>;
using FlowRemovedHandler =
    std::function<HandlerResult(const Rule&, SwitchId, const ControllerState&)>;

/// A controller program: three pure handlers over a register file.
struct ControllerProgram {
  std::string name;
  RegisterLayout layout;
  ControllerState initial;
  PacketInHandler packet_in;
  BarrierHandler barrier;
  FlowRemovedHandler flow_removed;
  // Claimed, not proven; check_order_sensitivity gathers evidence.
  bool declared_order_insensitive = false;
  std::set<std::string> registers_written_by_flow_removed;
};

HandlerResult Unchanged(const ControllerState& cs);

// --- Built-in load balancer / stateful firewall -------------------------

/// Register slots of the built-in programs.
namespace lb {
inline constexpr std::size_t kServer = 0;        // 1-based server, 0 = none
inline constexpr std::size_t kSLoad = 1;         // per server ordinal
inline constexpr std::size_t kDeplSessions = 2;  // per address, 0/1
inline constexpr std::size_t kDodgy = 3;         // address, -1 = none
inline constexpr std::size_t kAssigned = 4;      // per address, 1-based server
inline constexpr std::uint16_t kRulePriority = 1;
}  // namespace lb

/// What the built-in handlers know about the network.
struct LbContext {
  std::vector<EndpointId> server_addrs;  // by ordinal
  std::vector<PortId> server_ports;      // switch port facing each server
  std::optional<EndpointId> dodgy;
  bool least_connections = false;
  // lc-rebalance keeps a per-client server register.
  bool track_assignment = false;

  static LbContext From(const Topology& topo, bool least_connections,
                        bool track_assignment);

  RegisterLayout Layout() const;
  ControllerState Initial(const Topology& topo) const;
};

/// PacketIn handler. Whitelisted clients without a session get a server,
/// three rules (forward, timed-out symmetric return, dodgy drop) and a
/// PacketOut; deployed clients only get the PacketOut.
HandlerResult cp1_pktin(const LbContext& ctx, const Packet& pkt, SwitchId sw,
                        const ControllerState& cs);

/// Naive FlowRemoved handler: bookkeeping only.
HandlerResult cp2_flowrmvd_naive(const LbContext& ctx, const Rule& rule_s,
                                 SwitchId sw, const ControllerState& cs);

/// FlowRemoved handler that also moves one session from the most to the
/// least loaded server whenever their loads differ by more than one.
HandlerResult cp3_flowrmvd_rebalance(const LbContext& ctx, const Rule& rule_s,
                                     SwitchId sw, const ControllerState& cs);

/// Built-in programs by name: rr-naive, lc-naive, lc-rebalance.
ControllerProgram MakeBuiltinController(const std::string& name,
                                        const Topology& topo);
const std::vector<std::string>& BuiltinControllerNames();

}  // namespace softflow

#endif /* SOFTFLOW_CONTROLLER_HH_ */
