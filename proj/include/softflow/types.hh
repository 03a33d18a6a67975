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

#ifndef SOFTFLOW_TYPES_HH_
#define SOFTFLOW_TYPES_HH_

#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/container/flat_set.hpp>

namespace softflow {

template <class T>
using FlatSet = boost::container::flat_set<T>;

/// Thrown for malformed input documents or references that cannot be
/// resolved (topology, workload, property, controller name).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when the model reaches a state its own invariants forbid, or an
/// operation is called outside its precondition.
class ModelError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

#define SOFTFLOW_CHECK(cond, msg)                      \
  do {                                                 \
    if (!(cond)) throw ::softflow::ModelError((msg));  \
  } while (0)

// Strong identifiers. All domains are finite and fixed when the topology is
// built; the values are dense indices into the topology's tables.

struct HostId {
  std::uint16_t v = 0;
  auto operator<=>(const HostId&) const = default;
};

struct SwitchId {
  std::uint16_t v = 0;
  auto operator<=>(const SwitchId&) const = default;
};

struct PortId {
  std::uint16_t v = 0;
  auto operator<=>(const PortId&) const = default;
};

/// Network address. Host h owns address h.v; the cluster address is the
/// single address past the last host.
struct EndpointId {
  std::uint16_t v = 0;
  auto operator<=>(const EndpointId&) const = default;
};

struct BarrierId {
  std::uint32_t v = 0;
  auto operator<=>(const BarrierId&) const = default;
};

struct DeviceId {
  enum class Kind : std::uint8_t { kHost, kSwitch, kController };

  Kind kind = Kind::kHost;
  std::uint16_t index = 0;

  static DeviceId Host(HostId h) { return {Kind::kHost, h.v}; }
  static DeviceId Switch(SwitchId s) { return {Kind::kSwitch, s.v}; }
  static DeviceId Controller() { return {Kind::kController, 0}; }

  bool is_host() const { return kind == Kind::kHost; }
  bool is_switch() const { return kind == Kind::kSwitch; }
  HostId host() const { return HostId{index}; }
  SwitchId sw() const { return SwitchId{index}; }

  auto operator<=>(const DeviceId&) const = default;
};

/// A network interface: a device together with one of its physical ports.
struct Interface {
  DeviceId device;
  PortId port;
  auto operator<=>(const Interface&) const = default;
};

/// Packet header. src/dst never change; in_port is rewritten on every hop.
struct Packet {
  EndpointId src;
  EndpointId dst;
  PortId in_port;
  auto operator<=>(const Packet&) const = default;
};

/// Forwarding target of a rule: a physical port or the distinguished drop.
class ForwardTarget {
 public:
  static ForwardTarget Drop() { return ForwardTarget(); }
  static ForwardTarget Port(PortId p) { return ForwardTarget(p); }

  bool is_drop() const { return drop_; }
  PortId port() const {
    SOFTFLOW_CHECK(!drop_, "ForwardTarget::port() on drop");
    return port_;
  }

  auto operator<=>(const ForwardTarget&) const = default;

 private:
  ForwardTarget() = default;
  explicit ForwardTarget(PortId p) : drop_(false), port_(p) {}

  bool drop_ = true;
  PortId port_{};
};

/// Match part of a rule. An unset field is a wildcard.
struct RuleMatch {
  std::optional<EndpointId> src;
  std::optional<EndpointId> dst;
  std::optional<PortId> in_port;

  bool empty() const { return !src && !dst && !in_port; }
  bool Matches(const Packet& pkt) const {
    return (!src || *src == pkt.src) && (!dst || *dst == pkt.dst) &&
           (!in_port || *in_port == pkt.in_port);
  }

  auto operator<=>(const RuleMatch&) const = default;
};

/// A flow-table entry.
struct Rule {
  RuleMatch match;
  ForwardTarget fwd = ForwardTarget::Drop();
  std::uint16_t priority = 0;
  bool timeout = false;
  // Explicit catch-all; required when every match field is a wildcard.
  bool catch_all = false;

  /// Two rules occupy the same flow-table slot when their match fields and
  /// priority agree. The timeout bit and the action do not take part.
  bool SameSlot(const Rule& other) const {
    return match == other.match && priority == other.priority;
  }

  bool WellFormed() const { return catch_all || !match.empty(); }

  auto operator<=>(const Rule&) const = default;
};

/// Rewrite applied by a modify FlowMod. Only the listed components change.
struct RulePatch {
  std::optional<ForwardTarget> fwd;
  std::optional<EndpointId> src;
  std::optional<EndpointId> dst;
  std::optional<PortId> in_port;

  Rule ApplyTo(Rule r) const {
    if (fwd) r.fwd = *fwd;
    if (src) r.match.src = *src;
    if (dst) r.match.dst = *dst;
    if (in_port) r.match.in_port = *in_port;
    return r;
  }

  auto operator<=>(const RulePatch&) const = default;
};

/// FlowMod message carried in a switch control queue.
struct FlowMod {
  enum class Kind : std::uint8_t { kAdd, kDel, kMod };

  Kind kind = Kind::kAdd;
  Rule rule;          // add/del
  RuleMatch pattern;  // mod: rules whose set match fields equal these
  RulePatch patch;    // mod

  static FlowMod Add(Rule r) { return {Kind::kAdd, std::move(r), {}, {}}; }
  static FlowMod Del(Rule r) { return {Kind::kDel, std::move(r), {}, {}}; }
  static FlowMod Mod(RuleMatch f, RulePatch a) {
    return {Kind::kMod, {}, std::move(f), std::move(a)};
  }

  /// True iff a rule is selected by this message's modify pattern.
  bool PatternSelects(const Rule& r) const {
    return (!pattern.src || r.match.src == pattern.src) &&
           (!pattern.dst || r.match.dst == pattern.dst) &&
           (!pattern.in_port || r.match.in_port == pattern.in_port);
  }

  auto operator<=>(const FlowMod&) const = default;
};

/// Controller-to-switch message: a FlowMod or a barrier request.
struct ControlMessage {
  std::optional<FlowMod> flow_mod;
  std::optional<BarrierId> barrier;

  static ControlMessage Of(FlowMod m) { return {std::move(m), std::nullopt}; }
  static ControlMessage Barrier(BarrierId b) { return {std::nullopt, b}; }

  bool is_barrier() const { return barrier.has_value(); }

  auto operator<=>(const ControlMessage&) const = default;
};

struct ForwardEntry {
  Packet pkt;
  PortId port;
  auto operator<=>(const ForwardEntry&) const = default;
};

/// One barrier-delimited segment of a control queue. Messages inside a
/// segment are unordered; `barrier` closes the segment when present.
struct CqSegment {
  FlatSet<FlowMod> mods;
  std::optional<BarrierId> barrier;
  bool operator==(const CqSegment&) const = default;
};

/// Switch control queue: a sequence of segments separated by barriers.
/// Normal form: no trailing segment that is both empty and unclosed.
class ControlQueue {
 public:
  /// Rebuilds a queue from segments already in normal form.
  static ControlQueue FromSegments(std::vector<CqSegment> segments);

  bool empty() const { return segments_.empty(); }
  const std::vector<CqSegment>& segments() const { return segments_; }

  /// FlowMods that may execute now.
  const FlatSet<FlowMod>* first_segment() const {
    return segments_.empty() ? nullptr : &segments_.front().mods;
  }

  /// The barrier ready for a reply: closes the first segment, which is empty.
  std::optional<BarrierId> ready_barrier() const {
    if (segments_.empty() || !segments_.front().mods.empty()) {
      return std::nullopt;
    }
    return segments_.front().barrier;
  }

  void Push(const ControlMessage& msg);
  void PopFirst(const FlowMod& m);
  void PopReadyBarrier();

  bool operator==(const ControlQueue&) const = default;

 private:
  void Normalize();

  std::vector<CqSegment> segments_;
};

struct HostState {
  FlatSet<Packet> rcvq;
  FlatSet<Packet> send_buf;
  bool operator==(const HostState&) const = default;
};

struct SwitchState {
  FlatSet<Packet> pq;
  FlatSet<ForwardEntry> fq;
  ControlQueue cq;
  FlatSet<Rule> ft;

  /// Installs r, replacing any rule occupying the same slot.
  void Install(const Rule& r);
  /// Removes every rule in r's slot. Returns the number removed.
  std::size_t Uninstall(const Rule& r);

  bool operator==(const SwitchState&) const = default;
};

/// Program-defined controller registers. Each register is a vector of
/// integers; scalars have length one. Names live in the program's layout.
struct ControllerState {
  std::vector<std::vector<std::int64_t>> regs;
  auto operator<=>(const ControllerState&) const = default;
};

struct PacketIn {
  SwitchId sw;
  Packet pkt;
  auto operator<=>(const PacketIn&) const = default;
};

struct BarrierReply {
  SwitchId sw;
  BarrierId barrier;
  auto operator<=>(const BarrierReply&) const = default;
};

struct FlowRemoved {
  SwitchId sw;
  Rule rule;
  auto operator<=>(const FlowRemoved&) const = default;
};

struct ControllerEnv {
  ControllerState cs;
  FlatSet<PacketIn> rq;
  FlatSet<BarrierReply> brq;
  FlatSet<FlowRemoved> frq;
  bool operator==(const ControllerEnv&) const = default;
};

/// The network state: hosts, switches and controller.
struct GlobalState {
  std::vector<HostState> hosts;
  std::vector<SwitchState> switches;
  ControllerEnv ctrl;

  HostState& host(HostId h) { return hosts.at(h.v); }
  const HostState& host(HostId h) const { return hosts.at(h.v); }
  SwitchState& sw(SwitchId s) { return switches.at(s.v); }
  const SwitchState& sw(SwitchId s) const { return switches.at(s.v); }

  bool operator==(const GlobalState&) const = default;
};

std::ostream& operator<<(std::ostream& os, const Packet& pkt);
std::ostream& operator<<(std::ostream& os, const Rule& r);
std::ostream& operator<<(std::ostream& os, const FlowMod& m);

}  // namespace softflow

#endif /* SOFTFLOW_TYPES_HH_ */
