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

#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "softflow/por.hh"
#include "test_util.hh"

using namespace softflow;
using namespace softflow::testing;

namespace {

const SwitchId kSw{0};

std::int64_t Sum(const std::vector<std::int64_t>& v) {
  return std::accumulate(v.begin(), v.end(), std::int64_t{0});
}

std::vector<Rule> AddedRules(const HandlerResult& r) {
  std::vector<Rule> out;
  for (const auto& e : r.out) {
    if (e.control && e.control->flow_mod && e.control->flow_mod->kind == FlowMod::Kind::kAdd) {
      out.push_back(e.control->flow_mod->rule);
    }
  }
  return out;
}

std::size_t PacketOuts(const HandlerResult& r) {
  return static_cast<std::size_t>(std::count_if(
      r.out.begin(), r.out.end(), [](const Emission& e) { return e.packet_out.has_value(); }));
}

Packet FromClient(const Topology& topo, HostId c) {
  return Packet{topo.address(c), topo.cluster_address(), topo.Attachment(c).port};
}

// Expected least-connections choice: sort (load, ordinal) and take the first.
std::size_t ExpectedArgMin(const std::vector<std::int64_t>& load) {
  std::vector<std::pair<std::int64_t, std::size_t>> v;
  for (std::size_t i = 0; i < load.size(); ++i) v.emplace_back(load[i], i);
  std::sort(v.begin(), v.end());
  return v.front().second;
}

// lc-rebalance register file with `per_server[k]` sessions on server k, handed out to
// clients in address order.
ControllerState WithSessions(const LbContext& ctx, const Topology& topo,
                             const std::vector<int>& per_server) {
  ControllerState cs = ctx.Initial(topo);
  std::uint16_t next = 0;
  for (std::size_t k = 0; k < per_server.size(); ++k) {
    for (int i = 0; i < per_server[k]; ++i, ++next) {
      REQUIRE(topo.host_role(HostId{next}) == HostRole::kClient);
      cs.regs[lb::kDeplSessions][next] = 1;
      cs.regs[lb::kAssigned][next] = static_cast<std::int64_t>(k) + 1;
      cs.regs[lb::kSLoad][k] += 1;
    }
  }
  return cs;
}

Rule SymmetricRule(const LbContext& ctx, std::size_t server, EndpointId client) {
  return MakeRule(ctx.server_addrs[server], client, std::nullopt,
                  ForwardTarget::Port(PortId{1}), lb::kRulePriority, true);
}

// Two clients whose PacketIns are both pending.
GlobalState TwoPendingPacketIns(const Scenario& sc, const ControllerProgram& cp) {
  GlobalState s = initial_state(sc.topo, sc.workload, cp);
  for (HostId c{0}; c.v < 2; ++c.v) {
    const auto pkt = *s.host(c).send_buf.begin();
    s = apply(s, Action::Send(c, pkt), sc.topo, cp);
    Packet in = pkt;
    in.in_port = sc.topo.Attachment(c).port;
    s = apply(s, Action::NoMatch(kSw, in), sc.topo, cp);
  }
  return s;
}

}  // namespace

TEST_CASE("packet-in handler") {
  const auto sc = MakeScenario(4, 2, 1, "rr-naive");
  const auto rr = LbContext::From(sc.topo, false, false);
  const auto lc = LbContext::From(sc.topo, true, false);
  const auto cs0 = rr.Initial(sc.topo);
  const HostId dodgy = sc.topo.HostsWithRole(HostRole::kDodgyClient).front();

  SUBCASE("first legitimate packet under round robin") {
    const auto pkt = FromClient(sc.topo, HostId{0});
    const auto r = cp1_pktin(rr, pkt, kSw, cs0);
    CHECK(r.cs.regs[lb::kServer][0] == 1);
    CHECK(r.cs.regs[lb::kSLoad] == std::vector<std::int64_t>{1, 0});
    CHECK(r.cs.regs[lb::kDeplSessions][0] == 1);
    CHECK(AddedRules(r).size() == 3);
    CHECK(PacketOuts(r) == 1);
    CHECK(r.out.size() == 4);
    const auto& out = r.out.back();
    REQUIRE(out.packet_out);
    CHECK(out.packet_out->pkt == pkt);
    CHECK(out.packet_out->port == rr.server_ports[0]);
  }

  SUBCASE("dodgy packet changes nothing") {
    const auto r = cp1_pktin(rr, FromClient(sc.topo, dodgy), kSw, cs0);
    CHECK(r.cs == cs0);
    CHECK(r.out.empty());
  }

  SUBCASE("deployed client only gets the PacketOut") {
    const auto pkt = FromClient(sc.topo, HostId{1});
    const auto first = cp1_pktin(rr, pkt, kSw, cs0);
    const auto again = cp1_pktin(rr, pkt, kSw, first.cs);
    CHECK(again.cs == first.cs);
    REQUIRE(again.out.size() == 1);
    CHECK(again.out[0].packet_out->port == rr.server_ports[0]);
  }

  SUBCASE("round robin cycles over the actual server count") {
    const auto sc3 = MakeScenario(5, 3, 0, "rr-naive");
    const auto ctx = LbContext::From(sc3.topo, false, false);
    auto cs = ctx.Initial(sc3.topo);
    std::vector<std::int64_t> picked;
    for (HostId c{0}; c.v < 5; ++c.v) {
      cs = cp1_pktin(ctx, FromClient(sc3.topo, c), kSw, cs).cs;
      picked.push_back(cs.regs[lb::kServer][0]);
    }
    CHECK(picked == std::vector<std::int64_t>{1, 2, 3, 1, 2});
    CHECK(cs.regs[lb::kSLoad] == std::vector<std::int64_t>{2, 2, 1});
  }

  SUBCASE("least connections with sLoad [2,1] picks server 2") {
    auto cs = cs0;
    cs.regs[lb::kSLoad] = {2, 1};
    const auto r = cp1_pktin(lc, FromClient(sc.topo, HostId{0}), kSw, cs);
    CHECK(r.cs.regs[lb::kServer][0] == 2);
    CHECK(r.cs.regs[lb::kSLoad] == std::vector<std::int64_t>{2, 2});
  }

  SUBCASE("least connections agrees with the sorted argmin") {
    const auto sc3 = MakeScenario(1, 3, 0, "lc-naive");
    const auto ctx = LbContext::From(sc3.topo, true, false);
    for (int a = 0; a <= 3; ++a) {
      for (int b = 0; b <= 3; ++b) {
        for (int c = 0; c <= 3; ++c) {
          auto cs = ctx.Initial(sc3.topo);
          cs.regs[lb::kSLoad] = {a, b, c};
          const auto r = cp1_pktin(ctx, FromClient(sc3.topo, HostId{0}), kSw, cs);
          const auto want = ExpectedArgMin({a, b, c});
          CHECK(r.cs.regs[lb::kServer][0] == static_cast<std::int64_t>(want) + 1);
          CHECK(r.out.back().packet_out->port == ctx.server_ports[want]);
        }
      }
    }
  }

  SUBCASE("rules of one installation") {
    const auto pkt = FromClient(sc.topo, HostId{2});
    const auto rules = AddedRules(cp1_pktin(lc, pkt, kSw, cs0));
    REQUIRE(rules.size() == 3);
    CHECK(std::count_if(rules.begin(), rules.end(), [](const Rule& r) { return r.timeout; }) == 1);
    for (const auto& r : rules) {
      CHECK(r.priority == lb::kRulePriority);
      CHECK(r.WellFormed());
      if (r.match.src == sc.topo.address(dodgy)) CHECK(r.fwd.is_drop());
    }
    const auto sym = std::find_if(rules.begin(), rules.end(), [](const Rule& r) { return r.timeout; });
    CHECK(sym->match.src == lc.server_addrs[0]);
    CHECK(sym->match.dst == pkt.src);
    CHECK(sym->fwd == ForwardTarget::Port(pkt.in_port));
  }

  SUBCASE("no dodgy rule without a dodgy host") {
    const auto sc0 = MakeScenario(2, 2, 0, "rr-naive");
    const auto ctx = LbContext::From(sc0.topo, false, false);
    const auto r = cp1_pktin(ctx, FromClient(sc0.topo, HostId{0}), kSw, ctx.Initial(sc0.topo));
    CHECK(AddedRules(r).size() == 2);
  }
}

TEST_CASE("naive flow-removed handler") {
  const auto sc = MakeScenario(4, 2, 1, "lc-naive");
  const auto ctx = LbContext::From(sc.topo, true, false);
  auto cs = ctx.Initial(sc.topo);
  cs.regs[lb::kSLoad] = {2, 1};
  cs.regs[lb::kDeplSessions][1] = 1;
  const Rule rs = SymmetricRule(ctx, 0, EndpointId{1});

  const auto r = cp2_flowrmvd_naive(ctx, rs, kSw, cs);
  CHECK(r.cs.regs[lb::kSLoad] == std::vector<std::int64_t>{1, 1});
  CHECK(r.cs.regs[lb::kDeplSessions][1] == 0);
  CHECK(r.out.empty());

  // Re-adding the session undoes the removal.
  auto back = r.cs;
  back.regs[lb::kSLoad][0] += 1;
  back.regs[lb::kDeplSessions][1] = 1;
  CHECK(back == cs);

  auto empty = ctx.Initial(sc.topo);
  CHECK_THROWS_AS(cp2_flowrmvd_naive(ctx, rs, kSw, empty), ModelError);
  Rule not_symmetric = rs;
  not_symmetric.match.dst.reset();
  CHECK_THROWS_AS(cp2_flowrmvd_naive(ctx, not_symmetric, kSw, cs), ModelError);
}

TEST_CASE("rebalancing flow-removed handler") {
  const auto sc = MakeScenario(6, 2, 0, "lc-rebalance");
  const auto ctx = LbContext::From(sc.topo, true, true);

  SUBCASE("[3,2], expiry on s2: [3,1] is rebalanced to [2,2]") {
    const auto cs = WithSessions(ctx, sc.topo, {3, 2});
    // Clients 0..2 sit on s1, 3..4 on s2.
    const auto r = cp3_flowrmvd_rebalance(ctx, SymmetricRule(ctx, 1, EndpointId{3}), kSw, cs);
    CHECK(r.cs.regs[lb::kSLoad] == std::vector<std::int64_t>{2, 2});
    REQUIRE(r.out.size() == 2);
    const auto& fwd = *r.out[0].control->flow_mod;
    const auto& sym = *r.out[1].control->flow_mod;
    CHECK(fwd.kind == FlowMod::Kind::kMod);
    CHECK(fwd.pattern.src == EndpointId{0});
    CHECK(fwd.patch.fwd == ForwardTarget::Port(ctx.server_ports[1]));
    CHECK(sym.pattern.src == ctx.server_addrs[0]);
    CHECK(sym.pattern.dst == EndpointId{0});
    CHECK(sym.patch.src == ctx.server_addrs[1]);
    CHECK(r.cs.regs[lb::kAssigned][0] == 2);
    CHECK(r.cs.regs[lb::kAssigned][3] == 0);
    CHECK(r.cs.regs[lb::kDeplSessions][3] == 0);
  }

  SUBCASE("[2,1], expiry on s1 leaves [1,1] alone") {
    const auto cs = WithSessions(ctx, sc.topo, {2, 1});
    const auto r = cp3_flowrmvd_rebalance(ctx, SymmetricRule(ctx, 0, EndpointId{0}), kSw, cs);
    CHECK(r.cs.regs[lb::kSLoad] == std::vector<std::int64_t>{1, 1});
    CHECK(r.out.empty());
  }

  SUBCASE("[2,2], expiry on s1 gives [1,2] without a move") {
    const auto cs = WithSessions(ctx, sc.topo, {2, 2});
    const auto r = cp3_flowrmvd_rebalance(ctx, SymmetricRule(ctx, 0, EndpointId{0}), kSw, cs);
    CHECK(r.cs.regs[lb::kSLoad] == std::vector<std::int64_t>{1, 2});
    CHECK(r.out.empty());
  }

  SUBCASE("guard over every load pair up to 3") {
    for (int a = 0; a <= 3; ++a) {
      for (int b = 0; b <= 3; ++b) {
        for (std::size_t on = 0; on < 2; ++on) {
          const int here = on == 0 ? a : b;
          if (here == 0) continue;
          const auto cs = WithSessions(ctx, sc.topo, {a, b});
          // The first client on server `on`.
          const EndpointId victim{static_cast<std::uint16_t>(on == 0 ? 0 : a)};
          const auto r = cp3_flowrmvd_rebalance(ctx, SymmetricRule(ctx, on, victim), kSw, cs);
          std::int64_t la = a - (on == 0), lb_ = b - (on == 1);
          const bool move = std::abs(la - lb_) > 1;
          CAPTURE(a);
          CAPTURE(b);
          CAPTURE(on);
          CHECK(r.out.size() == (move ? 2u : 0u));
          if (move) {
            if (la > lb_) {
              --la, ++lb_;
            } else {
              ++la, --lb_;
            }
          }
          CHECK(r.cs.regs[lb::kSLoad] == std::vector<std::int64_t>{la, lb_});
          CHECK(Sum(r.cs.regs[lb::kSLoad]) == a + b - 1);
        }
      }
    }
  }

  SUBCASE("untracked session and missing register are integrity errors") {
    const auto cs = WithSessions(ctx, sc.topo, {1, 0});
    CHECK_THROWS_AS(cp3_flowrmvd_rebalance(ctx, SymmetricRule(ctx, 0, EndpointId{4}), kSw, cs),
                    ModelError);
    const auto naive = LbContext::From(sc.topo, true, false);
    CHECK_THROWS_AS(
        cp3_flowrmvd_rebalance(naive, SymmetricRule(ctx, 0, EndpointId{0}), kSw, cs),
        ModelError);
  }
}

TEST_CASE("built-in programs") {
  const auto sc = MakeScenario(4, 2, 1, "rr-naive");
  for (const auto& name : BuiltinControllerNames()) {
    const auto cp = MakeBuiltinController(name, sc.topo);
    CHECK(cp.name == name);
    CHECK(cp.declared_order_insensitive);
    CHECK(cp.registers_written_by_flow_removed.contains("sLoad"));
    CHECK(cp.registers_written_by_flow_removed.contains("deplSessions"));
    CHECK(cp.layout.Find("sLoad") == lb::kSLoad);
    CHECK(cp.initial.regs[lb::kDodgy][0] == 3);
    CHECK(cp.layout.Find("assigned").has_value() == (name == "lc-rebalance"));
  }
  CHECK_THROWS_AS(MakeBuiltinController("fastest", sc.topo), ConfigError);
}

TEST_CASE("handler invariants along random walks") {
  for (const auto& name : BuiltinControllerNames()) {
    const auto sc = MakeScenario(3, 2, 1, name);
    const auto dodgy = sc.topo.address(sc.topo.HostsWithRole(HostRole::kDodgyClient).front());
    for (const auto& s : RandomWalkStates(sc, 40, 60, 99)) {
      for (const auto& in : s.ctrl.rq) {
        const auto r1 = sc.cp.packet_in(in.pkt, in.sw, s.ctrl.cs);
        const auto r2 = sc.cp.packet_in(in.pkt, in.sw, s.ctrl.cs);
        CHECK(r1.cs == r2.cs);
        CHECK(r1.out == r2.out);
        const auto rules = AddedRules(r1);
        for (const auto& r : rules) {
          if (r.match.src == dodgy) CHECK(r.fwd.is_drop());
        }
        if (!rules.empty()) {
          CHECK(std::count_if(rules.begin(), rules.end(),
                              [](const Rule& r) { return r.timeout; }) == 1);
        }
      }
      for (const auto& fr : s.ctrl.frq) {
        const auto r1 = sc.cp.flow_removed(fr.rule, fr.sw, s.ctrl.cs);
        const auto r2 = sc.cp.flow_removed(fr.rule, fr.sw, s.ctrl.cs);
        CHECK(r1.cs == r2.cs);
        CHECK(r1.out == r2.out);
        // The expiry takes one session off; a rebalance moves one without
        // changing the total.
        CHECK(Sum(r1.cs.regs[lb::kSLoad]) == Sum(s.ctrl.cs.regs[lb::kSLoad]) - 1);
      }
    }
  }
}

TEST_CASE("register bookkeeping on reachable states") {
  for (const auto& name : BuiltinControllerNames()) {
    CAPTURE(name);
    for (const auto& [c, srv] : {std::pair{2, 2}, std::pair{2, 1}, std::pair{3, 1}}) {
      const auto sc = MakeScenario(c, srv, c == 2 && srv == 2 ? 1 : 0, name);
      std::size_t quiescent = 0;
      for (const auto& s : ReachableStates(sc)) {
        const auto& regs = s.ctrl.cs.regs;
        CHECK(Sum(regs[lb::kSLoad]) == Sum(regs[lb::kDeplSessions]));
        for (auto v : regs[lb::kSLoad]) CHECK(v >= 0);
        if (name == "lc-rebalance") {
          for (std::size_t k = 0; k < regs[lb::kSLoad].size(); ++k) {
            const auto on_k = std::count(regs[lb::kAssigned].begin(), regs[lb::kAssigned].end(),
                                         static_cast<std::int64_t>(k) + 1);
            CHECK(regs[lb::kSLoad][k] == on_k);
          }
          for (std::size_t e = 0; e < regs[lb::kAssigned].size(); ++e) {
            CHECK((regs[lb::kAssigned][e] > 0) == (regs[lb::kDeplSessions][e] != 0));
          }
        }
        // With nothing in flight, sessions are the installed timed rules.
        const auto& sw = s.switches[0];
        if (sw.cq.empty() && s.ctrl.rq.empty() && s.ctrl.frq.empty()) {
          ++quiescent;
          const auto timed = std::count_if(sw.ft.begin(), sw.ft.end(),
                                           [](const Rule& r) { return r.timeout; });
          CHECK(Sum(regs[lb::kSLoad]) == timed);
        }
      }
      CHECK(quiescent > 0);
    }
  }
}

TEST_CASE("order sensitivity") {
  SUBCASE("handlers appending to a shared sequence are order-sensitive") {
    auto sc = MakeScenario(2, 1, 0, "rr-naive");
    ControllerProgram cp;
    cp.name = "append";
    cp.layout = RegisterLayout({{"seq", IndexDomain::kScalar}});
    cp.initial = cp.layout.ZeroState(sc.topo);
    cp.packet_in = [](const Packet& pkt, SwitchId, const ControllerState& cs) {
      HandlerResult r{cs, {}};
      r.cs.regs[0][0] = r.cs.regs[0][0] * 16 + pkt.src.v + 1;
      return r;
    };
    cp.barrier = [](BarrierId, SwitchId, const ControllerState& cs) { return Unchanged(cs); };
    cp.flow_removed = [](const Rule&, SwitchId, const ControllerState& cs) {
      return Unchanged(cs);
    };
    const auto s = TwoPendingPacketIns(sc, cp);
    REQUIRE(s.ctrl.rq.size() == 2);
    const auto rep = check_order_sensitivity(cp, sc.topo, {initial_state(sc.topo, sc.workload, cp), s});
    CHECK_FALSE(rep.empty());
    CHECK(rep.pairs_checked == 1);
    REQUIRE(rep.witnesses.size() == 1);
    CHECK(rep.witnesses[0].state == canonical_hash(s));
    CHECK(rep.witnesses[0].alpha.kind == Action::Kind::kCtrl);
    CHECK(rep.witnesses[0].beta.kind == Action::Kind::kCtrl);
  }

  SUBCASE("a sample without two handler actions checks nothing") {
    const auto sc = MakeScenario(4, 2, 1, "lc-rebalance");
    const auto rep = check_order_sensitivity(sc.cp, sc.topo, {Initial(sc)});
    CHECK(rep.empty());
    CHECK(rep.pairs_checked == 0);
    CHECK(rep.states_checked == 1);
  }

  SUBCASE("built-ins on two pending PacketIns") {
    for (const auto& name : BuiltinControllerNames()) {
      const auto sc = MakeScenario(2, 2, 0, name);
      const auto rep = check_order_sensitivity(sc.cp, sc.topo, {TwoPendingPacketIns(sc, sc.cp)});
      CHECK(rep.pairs_checked == 1);
      // Both clients end up on different servers in either order, but which
      // client gets which server depends on the order.
      CHECK_FALSE(rep.empty());
    }
  }

  SUBCASE("lc-rebalance on reachable and sampled states") {
    // A session's fsync and a stale PacketIn from the same client do not
    // commute: after the fsync the PacketIn redeploys the session, before it
    // the PacketIn only forwards. The declaration is a claim, not a fact.
    std::uint64_t pairs = 0, witnesses = 0, fsync_ctrl = 0;
    auto tally = [&](const Scenario& sc, const std::vector<GlobalState>& sample) {
      const auto rep = check_order_sensitivity(sc.cp, sc.topo, sample, 1u << 20);
      pairs += rep.pairs_checked;
      witnesses += rep.witness_count;
      for (const auto& w : rep.witnesses) {
        const bool f = w.alpha.kind == Action::Kind::kFsync || w.beta.kind == Action::Kind::kFsync;
        const bool c = w.alpha.kind == Action::Kind::kCtrl || w.beta.kind == Action::Kind::kCtrl;
        fsync_ctrl += f && c;
      }
    };
    for (const auto& [c, srv, d] : {std::tuple{2, 1, 0}, std::tuple{3, 1, 0}, std::tuple{2, 2, 1}}) {
      const auto sc = MakeScenario(c, srv, d, "lc-rebalance");
      tally(sc, ReachableStates(sc));
    }
    const auto sc = MakeScenario(3, 2, 1, "lc-rebalance");
    tally(sc, RandomWalkStates(sc, 200, 40, 5));
    MESSAGE("lc-rebalance order sensitivity: " << pairs << " pairs, " << witnesses
                                                << " witnesses, " << fsync_ctrl
                                                << " of them fsync/ctrl");
    CHECK(pairs > 0);
    CHECK(fsync_ctrl > 0);
  }
}
