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

#include "softflow/semantics.hh"

#include <algorithm>
#include <sstream>

namespace softflow {

using Kind = Action::Kind;

Action Action::Send(HostId h, Packet p) {
  Action a;
  a.kind = Kind::kSend;
  a.host = h;
  a.pkt = p;
  return a;
}

Action Action::Recv(HostId h, Packet p) {
  Action a = Send(h, p);
  a.kind = Kind::kRecv;
  return a;
}

Action Action::Match(SwitchId sw, Packet p, Rule r) {
  Action a;
  a.kind = Kind::kMatch;
  a.sw = sw;
  a.pkt = p;
  a.rule = std::move(r);
  return a;
}

Action Action::NoMatch(SwitchId sw, Packet p) {
  Action a;
  a.kind = Kind::kNoMatch;
  a.sw = sw;
  a.pkt = p;
  return a;
}

Action Action::Ctrl(SwitchId sw, Packet p) {
  Action a = NoMatch(sw, p);
  a.kind = Kind::kCtrl;
  return a;
}

Action Action::Fwd(SwitchId sw, Packet p, PortId pt) {
  Action a = NoMatch(sw, p);
  a.kind = Kind::kFwd;
  a.port = pt;
  return a;
}

Action Action::Add(SwitchId sw, Rule r) {
  Action a;
  a.kind = Kind::kAdd;
  a.sw = sw;
  a.msg = FlowMod::Add(r);
  a.rule = std::move(r);
  return a;
}

Action Action::Del(SwitchId sw, Rule r) {
  Action a = Add(sw, std::move(r));
  a.kind = Kind::kDel;
  a.msg.kind = FlowMod::Kind::kDel;
  return a;
}

Action Action::Mod(SwitchId sw, FlowMod m) {
  SOFTFLOW_CHECK(m.kind == FlowMod::Kind::kMod, "Action::Mod needs a modify FlowMod");
  Action a;
  a.kind = Kind::kMod;
  a.sw = sw;
  a.msg = std::move(m);
  return a;
}

Action Action::Brepl(SwitchId sw, BarrierId b) {
  Action a;
  a.kind = Kind::kBrepl;
  a.sw = sw;
  a.barrier = b;
  return a;
}

Action Action::Bsync(SwitchId sw, BarrierId b) {
  Action a = Brepl(sw, b);
  a.kind = Kind::kBsync;
  return a;
}

Action Action::Frmvd(SwitchId sw, Rule r) {
  Action a;
  a.kind = Kind::kFrmvd;
  a.sw = sw;
  a.rule = std::move(r);
  return a;
}

Action Action::Fsync(SwitchId sw, Rule r) {
  Action a = Frmvd(sw, std::move(r));
  a.kind = Kind::kFsync;
  return a;
}

namespace {

constexpr const char* kKindNames[] = {"send", "recv", "match", "nomatch", "ctrl",
                                      "fwd", "add", "del", "mod", "brepl",
                                      "bsync", "frmvd", "fsync"};

}  // namespace

const char* ToString(Kind kind) { return kKindNames[static_cast<int>(kind)]; }

std::optional<Kind> ParseActionKind(const std::string& s) {
  for (int i = 0; i < 13; ++i) {
    if (s == kKindNames[i]) return static_cast<Kind>(i);
  }
  return std::nullopt;
}

std::string Describe(const Rule& r, const Topology& topo) {
  std::ostringstream os;
  os << "[";
  const char* sep = "";
  if (r.match.src) {
    os << "src=" << topo.endpoint_name(*r.match.src);
    sep = " ";
  }
  if (r.match.dst) {
    os << sep << "dst=" << topo.endpoint_name(*r.match.dst);
    sep = " ";
  }
  if (r.match.in_port) {
    os << sep << "in=" << r.match.in_port->v;
    sep = " ";
  }
  if (r.catch_all) os << sep << "*";
  os << " -> ";
  if (r.fwd.is_drop()) {
    os << "drop";
  } else {
    os << "port " << r.fwd.port().v;
  }
  if (r.priority != 0) os << " prio " << r.priority;
  if (r.timeout) os << " timeout";
  os << "]";
  return os.str();
}

namespace {

std::string DescribePacket(const Packet& p, const Topology& topo) {
  std::ostringstream os;
  os << topo.endpoint_name(p.src) << "->" << topo.endpoint_name(p.dst) << "@"
     << p.in_port.v;
  return os.str();
}

std::string DescribeMod(const FlowMod& m, const Topology& topo) {
  std::ostringstream os;
  os << "{";
  const char* sep = "";
  if (m.pattern.src) {
    os << "src=" << topo.endpoint_name(*m.pattern.src);
    sep = " ";
  }
  if (m.pattern.dst) {
    os << sep << "dst=" << topo.endpoint_name(*m.pattern.dst);
    sep = " ";
  }
  if (m.pattern.in_port) os << sep << "in=" << m.pattern.in_port->v;
  os << "} <- {";
  sep = "";
  if (m.patch.fwd) {
    os << "fwd=" << (m.patch.fwd->is_drop() ? std::string("drop")
                                             : std::to_string(m.patch.fwd->port().v));
    sep = " ";
  }
  if (m.patch.src) {
    os << sep << "src=" << topo.endpoint_name(*m.patch.src);
    sep = " ";
  }
  if (m.patch.dst) {
    os << sep << "dst=" << topo.endpoint_name(*m.patch.dst);
    sep = " ";
  }
  if (m.patch.in_port) os << sep << "in=" << m.patch.in_port->v;
  os << "}";
  return os.str();
}

}  // namespace

std::string Describe(const Action& a, const Topology& topo) {
  std::ostringstream os;
  os << ToString(a.kind) << "(";
  switch (a.kind) {
    case Kind::kSend:
    case Kind::kRecv:
      os << topo.host_name(a.host) << ", " << DescribePacket(a.pkt, topo);
      break;
    case Kind::kMatch:
      os << topo.switch_name(a.sw) << ", " << DescribePacket(a.pkt, topo) << ", "
         << Describe(a.rule, topo);
      break;
    case Kind::kNoMatch:
    case Kind::kCtrl:
      os << topo.switch_name(a.sw) << ", " << DescribePacket(a.pkt, topo);
      break;
    case Kind::kFwd:
      os << topo.switch_name(a.sw) << ", " << DescribePacket(a.pkt, topo)
         << ", port " << a.port.v;
      break;
    case Kind::kAdd:
    case Kind::kDel:
    case Kind::kFrmvd:
    case Kind::kFsync:
      os << topo.switch_name(a.sw) << ", " << Describe(a.rule, topo);
      break;
    case Kind::kMod:
      os << topo.switch_name(a.sw) << ", " << DescribeMod(a.msg, topo);
      break;
    case Kind::kBrepl:
    case Kind::kBsync:
      os << topo.switch_name(a.sw) << ", b" << a.barrier.v;
      break;
  }
  os << ")";
  return os.str();
}

namespace {

nlohmann::ordered_json PacketJson(const Packet& p, const Topology& topo) {
  return {{"src", topo.endpoint_name(p.src)},
          {"dst", topo.endpoint_name(p.dst)},
          {"in_port", p.in_port.v}};
}

nlohmann::ordered_json RuleJson(const Rule& r, const Topology& topo) {
  nlohmann::ordered_json j;
  if (r.match.src) j["match_src"] = topo.endpoint_name(*r.match.src);
  if (r.match.dst) j["match_dst"] = topo.endpoint_name(*r.match.dst);
  if (r.match.in_port) j["match_in_port"] = r.match.in_port->v;
  if (r.catch_all) j["catch_all"] = true;
  if (r.fwd.is_drop()) {
    j["fwd"] = "drop";
  } else {
    j["fwd"] = r.fwd.port().v;
  }
  j["priority"] = r.priority;
  j["timeout"] = r.timeout;
  return j;
}

}  // namespace

nlohmann::ordered_json ToJson(const Action& a, const Topology& topo) {
  nlohmann::ordered_json j;
  j["kind"] = ToString(a.kind);
  switch (a.kind) {
    case Kind::kSend:
    case Kind::kRecv:
      j["host"] = topo.host_name(a.host);
      j["packet"] = PacketJson(a.pkt, topo);
      break;
    case Kind::kMatch:
      j["switch"] = topo.switch_name(a.sw);
      j["packet"] = PacketJson(a.pkt, topo);
      j["rule"] = RuleJson(a.rule, topo);
      break;
    case Kind::kNoMatch:
    case Kind::kCtrl:
      j["switch"] = topo.switch_name(a.sw);
      j["packet"] = PacketJson(a.pkt, topo);
      break;
    case Kind::kFwd:
      j["switch"] = topo.switch_name(a.sw);
      j["packet"] = PacketJson(a.pkt, topo);
      j["port"] = a.port.v;
      break;
    case Kind::kAdd:
    case Kind::kDel:
    case Kind::kFrmvd:
    case Kind::kFsync:
      j["switch"] = topo.switch_name(a.sw);
      j["rule"] = RuleJson(a.rule, topo);
      break;
    case Kind::kMod:
      j["switch"] = topo.switch_name(a.sw);
      j["flow_mod"] = DescribeMod(a.msg, topo);
      break;
    case Kind::kBrepl:
    case Kind::kBsync:
      j["switch"] = topo.switch_name(a.sw);
      j["barrier"] = a.barrier.v;
      break;
  }
  return j;
}

std::optional<Rule> match_rule(const FlatSet<Rule>& ft, const Packet& pkt) {
  const Rule* best = nullptr;
  for (const auto& r : ft) {
    if (!r.match.Matches(pkt)) continue;
    if (!best || r.priority > best->priority) best = &r;
  }
  if (!best) return std::nullopt;
  return *best;
}

std::vector<Action> enabled_actions(const GlobalState& s, const Topology& topo,
                                    const ControllerProgram&) {
  std::vector<Action> out;
  for (HostId h{0}; h.v < s.hosts.size(); ++h.v) {
    const auto& hs = s.host(h);
    for (const auto& p : hs.send_buf) out.push_back(Action::Send(h, p));
    if (topo.consumes_received(h)) {
      for (const auto& p : hs.rcvq) out.push_back(Action::Recv(h, p));
    }
  }
  for (SwitchId sw{0}; sw.v < s.switches.size(); ++sw.v) {
    const auto& ss = s.sw(sw);
    for (const auto& p : ss.pq) {
      if (auto r = match_rule(ss.ft, p)) {
        out.push_back(Action::Match(sw, p, *r));
      } else {
        out.push_back(Action::NoMatch(sw, p));
      }
    }
    for (const auto& e : ss.fq) out.push_back(Action::Fwd(sw, e.pkt, e.port));
    if (const auto* seg = ss.cq.first_segment()) {
      for (const auto& m : *seg) {
        switch (m.kind) {
          case FlowMod::Kind::kAdd:
            out.push_back(Action::Add(sw, m.rule));
            break;
          case FlowMod::Kind::kDel:
            out.push_back(Action::Del(sw, m.rule));
            break;
          case FlowMod::Kind::kMod:
            out.push_back(Action::Mod(sw, m));
            break;
        }
      }
    }
    if (auto b = ss.cq.ready_barrier()) out.push_back(Action::Brepl(sw, *b));
    for (const auto& r : ss.ft) {
      if (r.timeout) out.push_back(Action::Frmvd(sw, r));
    }
  }
  for (const auto& e : s.ctrl.rq) out.push_back(Action::Ctrl(e.sw, e.pkt));
  for (const auto& e : s.ctrl.brq) out.push_back(Action::Bsync(e.sw, e.barrier));
  for (const auto& e : s.ctrl.frq) out.push_back(Action::Fsync(e.sw, e.rule));

  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool is_enabled(const GlobalState& s, const Action& a, const Topology& topo,
                const ControllerProgram&) {
  auto valid_host = [&] { return a.host.v < s.hosts.size(); };
  auto valid_sw = [&] { return a.sw.v < s.switches.size(); };
  switch (a.kind) {
    case Kind::kSend:
      return valid_host() && s.host(a.host).send_buf.contains(a.pkt);
    case Kind::kRecv:
      return valid_host() && topo.consumes_received(a.host) &&
             s.host(a.host).rcvq.contains(a.pkt);
    case Kind::kMatch: {
      if (!valid_sw() || !s.sw(a.sw).pq.contains(a.pkt)) return false;
      auto r = match_rule(s.sw(a.sw).ft, a.pkt);
      return r && *r == a.rule;
    }
    case Kind::kNoMatch:
      return valid_sw() && s.sw(a.sw).pq.contains(a.pkt) &&
             !match_rule(s.sw(a.sw).ft, a.pkt);
    case Kind::kCtrl:
      return s.ctrl.rq.contains(PacketIn{a.sw, a.pkt});
    case Kind::kFwd:
      return valid_sw() && s.sw(a.sw).fq.contains(ForwardEntry{a.pkt, a.port});
    case Kind::kAdd:
    case Kind::kDel:
    case Kind::kMod: {
      if (!valid_sw()) return false;
      const auto* seg = s.sw(a.sw).cq.first_segment();
      return seg && seg->contains(a.msg);
    }
    case Kind::kBrepl:
      return valid_sw() && s.sw(a.sw).cq.ready_barrier() == a.barrier;
    case Kind::kBsync:
      return s.ctrl.brq.contains(BarrierReply{a.sw, a.barrier});
    case Kind::kFrmvd:
      return valid_sw() && a.rule.timeout && s.sw(a.sw).ft.contains(a.rule);
    case Kind::kFsync:
      return s.ctrl.frq.contains(FlowRemoved{a.sw, a.rule});
  }
  return false;
}

namespace {

// Sends pkt out of interface `from` to whatever sits across the link.
void Deliver(GlobalState& s, const Interface& from, Packet pkt,
             const Topology& topo) {
  auto peer = topo.PeerIfLinked(from);
  SOFTFLOW_CHECK(peer.has_value(), "packet forwarded to an unlinked port");
  pkt.in_port = peer->port;
  if (peer->device.is_host()) {
    s.host(peer->device.host()).rcvq.insert(pkt);
  } else {
    s.sw(peer->device.sw()).pq.insert(pkt);
  }
}

void RunHandler(GlobalState& s, HandlerResult res) {
  s.ctrl.cs = std::move(res.cs);
  for (auto& e : res.out) {
    SOFTFLOW_CHECK(e.sw.v < s.switches.size(), "emission targets an unknown switch");
    auto& sw = s.sw(e.sw);
    if (e.packet_out) sw.fq.insert(*e.packet_out);
    if (e.control) sw.cq.Push(*e.control);
  }
}

}  // namespace

GlobalState apply(const GlobalState& src, const Action& a, const Topology& topo,
                  const ControllerProgram& cp) {
  if (!is_enabled(src, a, topo, cp)) {
    throw ModelError("action not enabled: " + Describe(a, topo));
  }
  GlobalState s = src;
  switch (a.kind) {
    case Kind::kSend:
      s.host(a.host).send_buf.erase(a.pkt);
      Deliver(s, Interface{DeviceId::Host(a.host), PortId{0}}, a.pkt, topo);
      break;
    case Kind::kRecv:
      s.host(a.host).rcvq.erase(a.pkt);
      break;
    case Kind::kMatch:
      // The packet stays queued: under (0,inf) it is present unboundedly often.
      if (!a.rule.fwd.is_drop()) {
        Deliver(s, Interface{DeviceId::Switch(a.sw), a.rule.fwd.port()}, a.pkt, topo);
      }
      break;
    case Kind::kNoMatch:
      s.ctrl.rq.insert(PacketIn{a.sw, a.pkt});
      break;
    case Kind::kCtrl:
      s.ctrl.rq.erase(PacketIn{a.sw, a.pkt});
      RunHandler(s, cp.packet_in(a.pkt, a.sw, s.ctrl.cs));
      break;
    case Kind::kFwd:
      s.sw(a.sw).fq.erase(ForwardEntry{a.pkt, a.port});
      Deliver(s, Interface{DeviceId::Switch(a.sw), a.port}, a.pkt, topo);
      break;
    case Kind::kAdd:
      s.sw(a.sw).cq.PopFirst(a.msg);
      s.sw(a.sw).Install(a.msg.rule);
      break;
    case Kind::kDel:
      s.sw(a.sw).cq.PopFirst(a.msg);
      s.sw(a.sw).Uninstall(a.msg.rule);
      break;
    case Kind::kMod: {
      auto& sw = s.sw(a.sw);
      sw.cq.PopFirst(a.msg);
      std::vector<Rule> patched;
      for (auto it = sw.ft.begin(); it != sw.ft.end();) {
        if (a.msg.PatternSelects(*it)) {
          patched.push_back(a.msg.patch.ApplyTo(*it));
          it = sw.ft.erase(it);
        } else {
          ++it;
        }
      }
      for (const auto& r : patched) sw.Install(r);
      break;
    }
    case Kind::kBrepl:
      s.sw(a.sw).cq.PopReadyBarrier();
      s.ctrl.brq.insert(BarrierReply{a.sw, a.barrier});
      break;
    case Kind::kBsync:
      s.ctrl.brq.erase(BarrierReply{a.sw, a.barrier});
      RunHandler(s, cp.barrier(a.barrier, a.sw, s.ctrl.cs));
      break;
    case Kind::kFrmvd:
      s.sw(a.sw).ft.erase(a.rule);
      s.ctrl.frq.insert(FlowRemoved{a.sw, a.rule});
      break;
    case Kind::kFsync:
      s.ctrl.frq.erase(FlowRemoved{a.sw, a.rule});
      RunHandler(s, cp.flow_removed(a.rule, a.sw, s.ctrl.cs));
      break;
  }
  return s;
}

GlobalState initial_state(const Topology& topo, const WorkloadConfig& workload,
                          const ControllerProgram& cp) {
  GlobalState s;
  s.hosts.resize(topo.num_hosts());
  s.switches.resize(topo.num_switches());
  s.ctrl.cs = cp.initial;
  for (std::size_t i = 0; i < workload.packets.size(); ++i) {
    const auto& send = workload.packets[i];
    const std::string where = "workload.packets[" + std::to_string(i) + "]";
    auto h = topo.FindHost(send.host);
    if (!h) throw ConfigError(where + ".host references unknown host: " + send.host);
    auto dst = topo.FindEndpoint(send.dst);
    if (!dst) throw ConfigError(where + ".dst references unknown address: " + send.dst);
    EndpointId src = topo.address(*h);
    if (send.src) {
      auto e = topo.FindEndpoint(*send.src);
      if (!e) throw ConfigError(where + ".src references unknown address: " + *send.src);
      src = *e;
    }
    s.host(*h).send_buf.insert(Packet{src, *dst, PortId{0}});
  }
  return s;
}

}  // namespace softflow
