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

#include "softflow/controller.hh"

#include <algorithm>
#include <memory>

namespace softflow {

std::optional<std::size_t> RegisterLayout::Find(const std::string& name) const {
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (specs_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t RegisterLayout::Cells(std::size_t slot, const Topology& topo) const {
  switch (specs_.at(slot).domain) {
    case IndexDomain::kScalar:
      return 1;
    case IndexDomain::kServer:
      return topo.servers().size();
    case IndexDomain::kEndpoint:
      return topo.num_endpoints();
  }
  return 1;
}

ControllerState RegisterLayout::ZeroState(const Topology& topo) const {
  ControllerState cs;
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    cs.regs.emplace_back(Cells(i, topo), 0);
  }
  return cs;
}

HandlerResult Unchanged(const ControllerState& cs) { return {cs, {}}; }

LbContext LbContext::From(const Topology& topo, bool least_connections,
                          bool track_assignment) {
  LbContext ctx;
  for (HostId s : topo.servers()) {
    ctx.server_addrs.push_back(topo.address(s));
    ctx.server_ports.push_back(topo.Attachment(s).port);
  }
  auto dodgy = topo.HostsWithRole(HostRole::kDodgyClient);
  if (!dodgy.empty()) ctx.dodgy = topo.address(dodgy.front());
  ctx.least_connections = least_connections;
  ctx.track_assignment = track_assignment;
  return ctx;
}

RegisterLayout LbContext::Layout() const {
  std::vector<RegisterSpec> specs{{"server", IndexDomain::kScalar},
                                  {"sLoad", IndexDomain::kServer},
                                  {"deplSessions", IndexDomain::kEndpoint},
                                  {"dodgy", IndexDomain::kScalar}};
  if (track_assignment) specs.push_back({"assigned", IndexDomain::kEndpoint});
  return RegisterLayout(std::move(specs));
}

ControllerState LbContext::Initial(const Topology& topo) const {
  ControllerState cs = Layout().ZeroState(topo);
  cs.regs[lb::kDodgy][0] = dodgy ? dodgy->v : -1;
  return cs;
}

namespace {

// Lowest ordinal among the minimal (or maximal) loads.
std::size_t ArgMin(const std::vector<std::int64_t>& load) {
  return static_cast<std::size_t>(
      std::min_element(load.begin(), load.end()) - load.begin());
}

std::size_t ArgMax(const std::vector<std::int64_t>& load) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < load.size(); ++i) {
    if (load[i] > load[best]) best = i;
  }
  return best;
}

}  // namespace

HandlerResult cp1_pktin(const LbContext& ctx, const Packet& pkt, SwitchId sw,
                        const ControllerState& cs) {
  HandlerResult res{cs, {}};
  if (ctx.dodgy && pkt.src == *ctx.dodgy) return res;
  SOFTFLOW_CHECK(!ctx.server_addrs.empty(), "load balancer without servers");

  auto& regs = res.cs.regs;
  auto& server = regs[lb::kServer][0];
  if (regs[lb::kDeplSessions].at(pkt.src.v) == 0) {
    const auto n = static_cast<std::int64_t>(ctx.server_addrs.size());
    if (!ctx.least_connections) {
      server = server % n + 1;
    } else {
      server = static_cast<std::int64_t>(ArgMin(regs[lb::kSLoad])) + 1;
    }
    const auto ord = static_cast<std::size_t>(server - 1);

    Rule rule;
    rule.match.src = pkt.src;
    rule.match.in_port = pkt.in_port;
    rule.fwd = ForwardTarget::Port(ctx.server_ports[ord]);
    rule.priority = lb::kRulePriority;

    Rule rule_s;
    rule_s.match.src = ctx.server_addrs[ord];
    rule_s.match.dst = pkt.src;
    rule_s.fwd = ForwardTarget::Port(pkt.in_port);
    rule_s.priority = lb::kRulePriority;
    rule_s.timeout = true;

    res.out.push_back(Emission::Control(sw, ControlMessage::Of(FlowMod::Add(rule))));
    res.out.push_back(Emission::Control(sw, ControlMessage::Of(FlowMod::Add(rule_s))));
    if (ctx.dodgy) {
      Rule rule_d;
      rule_d.match.src = *ctx.dodgy;
      rule_d.fwd = ForwardTarget::Drop();
      rule_d.priority = lb::kRulePriority;
      res.out.push_back(Emission::Control(sw, ControlMessage::Of(FlowMod::Add(rule_d))));
    }

    regs[lb::kSLoad][ord] += 1;
    regs[lb::kDeplSessions][pkt.src.v] = 1;
    if (ctx.track_assignment) regs[lb::kAssigned][pkt.src.v] = server;
  }

  if (server > 0) {
    const auto ord = static_cast<std::size_t>(server - 1);
    res.out.push_back(Emission::PacketOut(sw, pkt, ctx.server_ports[ord]));
  }
  return res;
}

HandlerResult cp2_flowrmvd_naive(const LbContext& ctx, const Rule& rule_s,
                                 SwitchId, const ControllerState& cs) {
  HandlerResult res{cs, {}};
  SOFTFLOW_CHECK(rule_s.match.src && rule_s.match.dst,
                 "flow-removed rule is not a symmetric session rule");
  auto it = std::find(ctx.server_addrs.begin(), ctx.server_addrs.end(),
                      *rule_s.match.src);
  SOFTFLOW_CHECK(it != ctx.server_addrs.end(),
                 "flow-removed rule does not originate at a server");
  auto& load = res.cs.regs[lb::kSLoad][it - ctx.server_addrs.begin()];
  SOFTFLOW_CHECK(load > 0, "sLoad would drop below zero");
  load -= 1;
  res.cs.regs[lb::kDeplSessions].at(rule_s.match.dst->v) = 0;
  return res;
}

HandlerResult cp3_flowrmvd_rebalance(const LbContext& ctx, const Rule& rule_s,
                                     SwitchId sw, const ControllerState& cs) {
  SOFTFLOW_CHECK(ctx.track_assignment, "rebalancing needs the assigned register");
  SOFTFLOW_CHECK(rule_s.match.src && rule_s.match.dst,
                 "flow-removed rule is not a symmetric session rule");
  HandlerResult res{cs, {}};
  auto& regs = res.cs.regs;
  auto& load = regs[lb::kSLoad];
  auto& assigned = regs[lb::kAssigned];
  auto& deployed = regs[lb::kDeplSessions];

  // The expired session is charged to the server the controller assigned it
  // to. A pending rebalance may not have rewritten the switch rule yet, so
  // the rule's source address can lag behind.
  const auto client = rule_s.match.dst->v;
  SOFTFLOW_CHECK(deployed.at(client) != 0 && assigned.at(client) > 0,
                 "flow removed for a session the controller does not track");
  auto& cur = load.at(static_cast<std::size_t>(assigned[client] - 1));
  SOFTFLOW_CHECK(cur > 0, "sLoad would drop below zero");
  cur -= 1;
  deployed[client] = 0;
  assigned[client] = 0;

  const auto hi = ArgMax(load);
  const auto lo = ArgMin(load);
  if (load[hi] - load[lo] <= 1) return res;

  // Move the lowest-addressed session on the busiest server.
  std::optional<std::size_t> moved;
  for (std::size_t c = 0; c < assigned.size(); ++c) {
    if (deployed[c] != 0 && assigned[c] == static_cast<std::int64_t>(hi) + 1) {
      moved = c;
      break;
    }
  }
  SOFTFLOW_CHECK(moved.has_value(), "no session to move off the busiest server");
  const EndpointId c{static_cast<std::uint16_t>(*moved)};

  RuleMatch fwd_rule;
  fwd_rule.src = c;
  RulePatch to_lo;
  to_lo.fwd = ForwardTarget::Port(ctx.server_ports[lo]);

  RuleMatch sym_rule;
  sym_rule.src = ctx.server_addrs[hi];
  sym_rule.dst = c;
  RulePatch from_lo;
  from_lo.src = ctx.server_addrs[lo];

  res.out.push_back(Emission::Control(sw, ControlMessage::Of(FlowMod::Mod(fwd_rule, to_lo))));
  res.out.push_back(Emission::Control(sw, ControlMessage::Of(FlowMod::Mod(sym_rule, from_lo))));
  load[hi] -= 1;
  load[lo] += 1;
  assigned[c.v] = static_cast<std::int64_t>(lo) + 1;
  return res;
}

const std::vector<std::string>& BuiltinControllerNames() {
  static const std::vector<std::string> names{"rr-naive", "lc-naive", "lc-rebalance"};
  return names;
}

ControllerProgram MakeBuiltinController(const std::string& name,
                                        const Topology& topo) {
  bool lc = false;
  bool rebalance = false;
  if (name == "rr-naive") {
  } else if (name == "lc-naive") {
    lc = true;
  } else if (name == "lc-rebalance") {
    lc = true;
    rebalance = true;
  } else {
    throw ConfigError("controller: unknown controller program '" + name + "'");
  }
  RequireLoadBalancerRoles(topo);

  auto ctx = std::make_shared<const LbContext>(LbContext::From(topo, lc, rebalance));
  ControllerProgram cp;
  cp.name = name;
  cp.layout = ctx->Layout();
  cp.initial = ctx->Initial(topo);
  cp.packet_in = [ctx](const Packet& pkt, SwitchId sw, const ControllerState& cs) {
    return cp1_pktin(*ctx, pkt, sw, cs);
  };
  cp.barrier = [](BarrierId, SwitchId, const ControllerState& cs) {
    return Unchanged(cs);
  };
  if (rebalance) {
    cp.flow_removed = [ctx](const Rule& r, SwitchId sw, const ControllerState& cs) {
      return cp3_flowrmvd_rebalance(*ctx, r, sw, cs);
    };
    cp.registers_written_by_flow_removed = {"sLoad", "deplSessions", "assigned"};
  } else {
    cp.flow_removed = [ctx](const Rule& r, SwitchId sw, const ControllerState& cs) {
      return cp2_flowrmvd_naive(*ctx, r, sw, cs);
    };
    cp.registers_written_by_flow_removed = {"sLoad", "deplSessions"};
  }
  cp.declared_order_insensitive = true;
  return cp;
}

}  // namespace softflow
