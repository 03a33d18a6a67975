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

#include "softflow/proplang.hh"

#include <algorithm>
#include <cstdlib>
#include <map>

namespace softflow {

using Kind = StatePredicate::Kind;
using TKind = Term::Kind;
using AF = Term::ActField;

Term Term::Const(std::int64_t v) {
  Term t;
  t.value = v;
  return t;
}

Term Term::Reg(std::size_t slot, std::string name, Term index) {
  Term t;
  t.kind = TKind::kReg;
  t.reg = slot;
  t.reg_name = std::move(name);
  t.args.push_back(std::move(index));
  return t;
}

Term Term::PktField(int var, Field f) {
  Term t;
  t.kind = TKind::kPktField;
  t.var = var;
  t.field = f;
  return t;
}

Term Term::ActionParam(ActField f) {
  Term t;
  t.kind = TKind::kActField;
  t.act = f;
  return t;
}

Term Term::Abs(Term x) {
  Term t;
  t.kind = TKind::kAbs;
  t.args.push_back(std::move(x));
  return t;
}

Term Term::Add(Term a, Term b) {
  Term t;
  t.kind = TKind::kAdd;
  t.args.push_back(std::move(a));
  t.args.push_back(std::move(b));
  return t;
}

Term Term::Sub(Term a, Term b) {
  Term t = Add(std::move(a), std::move(b));
  t.kind = TKind::kSub;
  return t;
}

StatePredicate StatePredicate::True() { return {}; }

StatePredicate StatePredicate::False() {
  StatePredicate p;
  p.kind = Kind::kFalse;
  return p;
}

StatePredicate StatePredicate::Not(StatePredicate x) {
  StatePredicate p;
  p.kind = Kind::kNot;
  p.kids.push_back(std::move(x));
  return p;
}

StatePredicate StatePredicate::And(std::vector<StatePredicate> ps) {
  StatePredicate p;
  p.kind = Kind::kAnd;
  p.kids = std::move(ps);
  return p;
}

StatePredicate StatePredicate::Or(std::vector<StatePredicate> ps) {
  StatePredicate p = And(std::move(ps));
  p.kind = Kind::kOr;
  return p;
}

StatePredicate StatePredicate::Compare(Cmp op, Term a, Term b) {
  StatePredicate p;
  p.kind = Kind::kCmp;
  p.op = op;
  p.lhs = std::move(a);
  p.rhs = std::move(b);
  return p;
}

StatePredicate StatePredicate::Forall(Queue q, std::uint16_t device,
                                      StatePredicate body) {
  StatePredicate p;
  p.kind = Kind::kForall;
  p.queue = q;
  p.device = device;
  p.kids.push_back(std::move(body));
  return p;
}

StatePredicate StatePredicate::Exists(Queue q, std::uint16_t device,
                                      StatePredicate body) {
  StatePredicate p = Forall(q, device, std::move(body));
  p.kind = Kind::kExists;
  return p;
}

StatePredicate StatePredicate::CtrlEquals(ControllerState cs) {
  StatePredicate p;
  p.kind = Kind::kCtrlEquals;
  p.cs = std::move(cs);
  return p;
}

namespace {

struct Env {
  const GlobalState& s;
  const Action* act = nullptr;
  std::vector<Packet> bound;
};

std::int64_t Opt(const std::optional<EndpointId>& e) {
  return e ? e->v : kUnsetValue;
}

std::int64_t ActValue(AF f, const Action& a) {
  switch (f) {
    case AF::kPktSrc:
      return a.pkt.src.v;
    case AF::kPktDst:
      return a.pkt.dst.v;
    case AF::kPktInPort:
      return a.pkt.in_port.v;
    case AF::kRuleFwd:
      return a.rule.fwd.is_drop() ? kDropValue : a.rule.fwd.port().v;
    case AF::kRuleSrc:
      return Opt(a.rule.match.src);
    case AF::kRuleDst:
      return Opt(a.rule.match.dst);
    case AF::kRuleInPort:
      return a.rule.match.in_port ? a.rule.match.in_port->v : kUnsetValue;
    case AF::kRulePriority:
      return a.rule.priority;
    case AF::kRuleTimeout:
      return a.rule.timeout ? 1 : 0;
    case AF::kPort:
      return a.port.v;
    case AF::kSwitch:
      return a.sw.v;
    case AF::kHost:
      return a.host.v;
    case AF::kBarrier:
      return a.barrier.v;
  }
  return 0;
}

std::int64_t Eval(const Term& t, const Env& env) {
  switch (t.kind) {
    case TKind::kConst:
      return t.value;
    case TKind::kReg: {
      const auto& reg = env.s.ctrl.cs.regs.at(t.reg);
      const auto i = Eval(t.args[0], env);
      SOFTFLOW_CHECK(i >= 0 && static_cast<std::size_t>(i) < reg.size(),
                     "register index out of range: " + t.reg_name);
      return reg[static_cast<std::size_t>(i)];
    }
    case TKind::kPktField: {
      const auto& p = env.bound.at(static_cast<std::size_t>(t.var));
      switch (t.field) {
        case Term::Field::kSrc:
          return p.src.v;
        case Term::Field::kDst:
          return p.dst.v;
        case Term::Field::kInPort:
          return p.in_port.v;
      }
      return 0;
    }
    case TKind::kActField:
      SOFTFLOW_CHECK(env.act != nullptr, "action field outside an obligation");
      return ActValue(t.act, *env.act);
    case TKind::kAbs:
      return std::llabs(Eval(t.args[0], env));
    case TKind::kAdd:
      return Eval(t.args[0], env) + Eval(t.args[1], env);
    case TKind::kSub:
      return Eval(t.args[0], env) - Eval(t.args[1], env);
  }
  return 0;
}

bool Holds(const StatePredicate& p, Env& env) {
  switch (p.kind) {
    case Kind::kTrue:
      return true;
    case Kind::kFalse:
      return false;
    case Kind::kNot:
      return !Holds(p.kids[0], env);
    case Kind::kAnd:
      for (const auto& k : p.kids) {
        if (!Holds(k, env)) return false;
      }
      return true;
    case Kind::kOr:
      for (const auto& k : p.kids) {
        if (Holds(k, env)) return true;
      }
      return false;
    case Kind::kCmp: {
      const auto a = Eval(p.lhs, env);
      const auto b = Eval(p.rhs, env);
      switch (p.op) {
        case StatePredicate::Cmp::kEq:
          return a == b;
        case StatePredicate::Cmp::kNe:
          return a != b;
        case StatePredicate::Cmp::kLt:
          return a < b;
        case StatePredicate::Cmp::kLe:
          return a <= b;
        case StatePredicate::Cmp::kGt:
          return a > b;
        case StatePredicate::Cmp::kGe:
          return a >= b;
      }
      return false;
    }
    case Kind::kForall:
    case Kind::kExists: {
      const auto& q = p.queue == StatePredicate::Queue::kPq
                          ? env.s.switches.at(p.device).pq
                          : env.s.hosts.at(p.device).rcvq;
      const bool forall = p.kind == Kind::kForall;
      for (const auto& pkt : q) {
        env.bound.push_back(pkt);
        const bool r = Holds(p.kids[0], env);
        env.bound.pop_back();
        if (r != forall) return !forall;
      }
      return forall;
    }
    case Kind::kCtrlEquals:
      return env.s.ctrl.cs == p.cs;
  }
  return false;
}

}  // namespace

bool eval_state_pred(const StatePredicate& p, const GlobalState& s) {
  Env env{s, nullptr, {}};
  return Holds(p, env);
}

bool eval_obligation(const ActionObligation& o, const Action& a,
                     const GlobalState& post) {
  if (a.kind != o.kind) return true;
  if (o.sw && a.sw != *o.sw) return true;
  if (o.host && a.host != *o.host) return true;
  Env env{post, &a, {}};
  return Holds(o.body, env);
}

namespace {

using Q = StatePredicate::Queue;
using C = StatePredicate::Cmp;

StatePredicate NotFromDodgy(EndpointId dodgy) {
  return StatePredicate::Compare(C::kNe, Term::PktField(0, Term::Field::kSrc),
                                 Term::Const(dodgy.v));
}

StatePredicate LoadClose(std::size_t i, std::size_t j, std::int64_t bound) {
  auto load = [](std::size_t k) {
    return Term::Reg(lb::kSLoad, "sLoad", Term::Const(static_cast<std::int64_t>(k)));
  };
  return StatePredicate::Compare(C::kLt, Term::Abs(Term::Sub(load(i), load(j))),
                                 Term::Const(bound));
}

}  // namespace

Property builtin_phi(const std::vector<HostId>& servers,
                     std::optional<EndpointId> dodgy, std::int64_t bound) {
  if (servers.empty()) throw ConfigError("property: builtin_phi needs at least one server");
  std::vector<StatePredicate> pairs;
  for (std::size_t i = 0; i < servers.size(); ++i) {
    for (std::size_t j = 0; j < servers.size(); ++j) {
      std::vector<StatePredicate> body;
      if (dodgy) body.push_back(NotFromDodgy(*dodgy));
      body.push_back(LoadClose(i, j, bound));
      pairs.push_back(StatePredicate::Forall(Q::kRcvq, servers[i].v,
                                             StatePredicate::And(std::move(body))));
    }
  }
  return {kBuiltinPhiName, StatePredicate::And(std::move(pairs)), {}};
}

Property builtin_phi_unordered(const std::vector<HostId>& servers,
                               std::optional<EndpointId> dodgy,
                               std::int64_t bound) {
  if (servers.empty()) throw ConfigError("property: builtin_phi needs at least one server");
  auto empty = [](HostId h) {
    return StatePredicate::Forall(Q::kRcvq, h.v, StatePredicate::False());
  };
  std::vector<StatePredicate> parts;
  for (std::size_t i = 0; i < servers.size(); ++i) {
    std::vector<StatePredicate> self;
    if (dodgy) self.push_back(NotFromDodgy(*dodgy));
    self.push_back(LoadClose(i, i, bound));
    parts.push_back(
        StatePredicate::Forall(Q::kRcvq, servers[i].v, StatePredicate::And(std::move(self))));
    for (std::size_t j = i + 1; j < servers.size(); ++j) {
      parts.push_back(StatePredicate::Or(
          {StatePredicate::And({empty(servers[i]), empty(servers[j])}),
           LoadClose(i, j, bound)}));
    }
  }
  return {std::string(kBuiltinPhiName) + "-unordered",
          StatePredicate::And(std::move(parts)),
          {}};
}

namespace {

void Footprint(const Term& t, RegisterFootprint& out) {
  if (t.kind == TKind::kReg) out.registers.insert(t.reg_name);
  for (const auto& a : t.args) Footprint(a, out);
}

void Footprint(const StatePredicate& p, RegisterFootprint& out) {
  if (p.kind == Kind::kCtrlEquals) out.whole_state = true;
  if (p.kind == Kind::kCmp) {
    Footprint(p.lhs, out);
    Footprint(p.rhs, out);
  }
  for (const auto& k : p.kids) Footprint(k, out);
}

}  // namespace

RegisterFootprint registers_read(const Property& prop) {
  RegisterFootprint out;
  Footprint(prop.invariant, out);
  for (const auto& o : prop.obligations) Footprint(o.body, out);
  return out;
}

// --- JSON loading --------------------------------------------------------

namespace {

using json = nlohmann::json;

[[noreturn]] void Fail(const std::string& path, const std::string& what) {
  throw ConfigError("property: " + path + ": " + what);
}

// Which action kinds carry which parameters.
bool Carries(Action::Kind k, AF f) {
  using K = Action::Kind;
  const bool pkt = k == K::kSend || k == K::kRecv || k == K::kMatch ||
                   k == K::kNoMatch || k == K::kCtrl || k == K::kFwd;
  const bool rule = k == K::kMatch || k == K::kAdd || k == K::kDel ||
                    k == K::kFrmvd || k == K::kFsync;
  switch (f) {
    case AF::kPktSrc:
    case AF::kPktDst:
    case AF::kPktInPort:
      return pkt;
    case AF::kRuleFwd:
    case AF::kRuleSrc:
    case AF::kRuleDst:
    case AF::kRuleInPort:
    case AF::kRulePriority:
    case AF::kRuleTimeout:
      return rule;
    case AF::kPort:
      return k == K::kFwd;
    case AF::kSwitch:
      return k != K::kSend && k != K::kRecv;
    case AF::kHost:
      return k == K::kSend || k == K::kRecv;
    case AF::kBarrier:
      return k == K::kBrepl || k == K::kBsync;
  }
  return false;
}

const std::map<std::string, AF>& ActFieldNames() {
  static const std::map<std::string, AF> names{
      {"pkt.src", AF::kPktSrc},          {"pkt.dst", AF::kPktDst},
      {"pkt.in_port", AF::kPktInPort},   {"rule.fwd", AF::kRuleFwd},
      {"rule.src", AF::kRuleSrc},        {"rule.dst", AF::kRuleDst},
      {"rule.in_port", AF::kRuleInPort}, {"rule.priority", AF::kRulePriority},
      {"rule.timeout", AF::kRuleTimeout}, {"port", AF::kPort},
      {"sw", AF::kSwitch},               {"host", AF::kHost},
      {"barrier", AF::kBarrier}};
  return names;
}

class Loader {
 public:
  Loader(const Topology& topo, const RegisterLayout& layout)
      : topo_(topo), layout_(layout) {}

  Property LoadAst(const json& doc) {
    if (!doc.is_object()) Fail("$", "expected an object");
    Property p;
    p.name = doc.value("name", std::string("custom"));
    if (doc.contains("invariant")) p.invariant = Pred(doc["invariant"], "$.invariant");
    if (doc.contains("obligations")) {
      const auto& obs = doc["obligations"];
      if (!obs.is_array()) Fail("$.obligations", "expected an array");
      for (std::size_t i = 0; i < obs.size(); ++i) {
        p.obligations.push_back(Obligation(obs[i], "$.obligations[" + std::to_string(i) + "]"));
      }
    }
    for (const auto& [k, v] : doc.items()) {
      if (k != "name" && k != "invariant" && k != "obligations") {
        Fail("$." + k, "unknown key");
      }
    }
    return p;
  }

 private:
  ActionObligation Obligation(const json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("action") || !j["action"].is_string()) {
      Fail(path + ".action", "expected an action kind string");
    }
    ActionObligation o;
    auto kind = ParseActionKind(j["action"].get<std::string>());
    if (!kind) Fail(path + ".action", "unknown action kind '" + j["action"].get<std::string>() + "'");
    o.kind = *kind;
    if (j.contains("switch")) {
      auto sw = topo_.FindSwitch(String(j["switch"], path + ".switch"));
      if (!sw) Fail(path + ".switch", "unknown switch '" + j["switch"].get<std::string>() + "'");
      o.sw = *sw;
    }
    if (j.contains("host")) {
      auto h = topo_.FindHost(String(j["host"], path + ".host"));
      if (!h) Fail(path + ".host", "unknown host '" + j["host"].get<std::string>() + "'");
      o.host = *h;
    }
    action_ = o.kind;
    o.body = j.contains("body") ? Pred(j["body"], path + ".body") : StatePredicate::True();
    action_.reset();
    return o;
  }

  static std::string String(const json& j, const std::string& path) {
    if (!j.is_string()) Fail(path, "expected a string");
    return j.get<std::string>();
  }

  StatePredicate Pred(const json& j, const std::string& path) {
    if (j.is_boolean()) return j.get<bool>() ? StatePredicate::True() : StatePredicate::False();
    if (!j.is_object() || j.size() == 0) Fail(path, "expected a predicate object");
    if (j.contains("not")) return StatePredicate::Not(Pred(j["not"], path + ".not"));
    for (const char* op : {"and", "or"}) {
      if (!j.contains(op)) continue;
      const auto& xs = j[op];
      if (!xs.is_array()) Fail(path + "." + op, "expected an array");
      std::vector<StatePredicate> kids;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        kids.push_back(Pred(xs[i], path + "." + op + "[" + std::to_string(i) + "]"));
      }
      return std::string(op) == "and" ? StatePredicate::And(std::move(kids))
                                      : StatePredicate::Or(std::move(kids));
    }
    if (j.contains("implies")) {
      const auto& xs = j["implies"];
      if (!xs.is_array() || xs.size() != 2) Fail(path + ".implies", "expected [premise, conclusion]");
      return StatePredicate::Or({StatePredicate::Not(Pred(xs[0], path + ".implies[0]")),
                                 Pred(xs[1], path + ".implies[1]")});
    }
    if (j.contains("cmp")) return Comparison(j, path);
    if (j.contains("forall") || j.contains("exists")) return Quantifier(j, path);
    if (j.contains("ctrl_state")) return CtrlState(j["ctrl_state"], path + ".ctrl_state");
    Fail(path, "unknown predicate form");
  }

  StatePredicate Comparison(const json& j, const std::string& path) {
    static const std::map<std::string, C> ops{{"==", C::kEq}, {"!=", C::kNe},
                                              {"<", C::kLt},  {"<=", C::kLe},
                                              {">", C::kGt},  {">=", C::kGe}};
    auto it = ops.find(String(j["cmp"], path + ".cmp"));
    if (it == ops.end()) Fail(path + ".cmp", "unknown comparison operator");
    if (!j.contains("lhs")) Fail(path + ".lhs", "missing");
    if (!j.contains("rhs")) Fail(path + ".rhs", "missing");
    return StatePredicate::Compare(it->second, TermOf(j["lhs"], path + ".lhs"),
                                   TermOf(j["rhs"], path + ".rhs"));
  }

  StatePredicate Quantifier(const json& j, const std::string& path) {
    const bool forall = j.contains("forall");
    const std::string var = String(j[forall ? "forall" : "exists"],
                                   path + (forall ? ".forall" : ".exists"));
    if (!j.contains("in") || !j["in"].is_object() || j["in"].size() != 1) {
      Fail(path + ".in", "expected {\"pq\": switch} or {\"rcvq\": host}");
    }
    Q q;
    std::uint16_t device = 0;
    if (j["in"].contains("pq")) {
      const auto name = String(j["in"]["pq"], path + ".in.pq");
      auto sw = topo_.FindSwitch(name);
      if (!sw) Fail(path + ".in.pq", "unknown switch '" + name + "'");
      q = Q::kPq;
      device = sw->v;
    } else if (j["in"].contains("rcvq")) {
      const auto name = String(j["in"]["rcvq"], path + ".in.rcvq");
      auto h = topo_.FindHost(name);
      if (!h) Fail(path + ".in.rcvq", "unknown host '" + name + "'");
      q = Q::kRcvq;
      device = h->v;
    } else {
      Fail(path + ".in", "only pq and rcvq may be quantified over");
    }
    scope_.push_back(var);
    auto body = j.contains("body") ? Pred(j["body"], path + ".body") : StatePredicate::True();
    scope_.pop_back();
    return forall ? StatePredicate::Forall(q, device, std::move(body))
                  : StatePredicate::Exists(q, device, std::move(body));
  }

  StatePredicate CtrlState(const json& j, const std::string& path) {
    if (!j.is_object()) Fail(path, "expected an object of registers");
    ControllerState cs = layout_.ZeroState(topo_);
    for (const auto& [name, v] : j.items()) {
      auto slot = layout_.Find(name);
      if (!slot) Fail(path + "." + name, "unknown register");
      auto& reg = cs.regs[*slot];
      if (v.is_number_integer()) {
        if (reg.size() != 1) Fail(path + "." + name, "register is not a scalar");
        reg[0] = v.get<std::int64_t>();
      } else if (v.is_array()) {
        if (v.size() != reg.size()) Fail(path + "." + name, "wrong number of cells");
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (!v[i].is_number_integer()) Fail(path + "." + name, "expected integers");
          reg[i] = v[i].get<std::int64_t>();
        }
      } else {
        Fail(path + "." + name, "expected an integer or an array");
      }
    }
    if (j.size() != layout_.specs().size()) Fail(path, "every register must be given");
    return StatePredicate::CtrlEquals(std::move(cs));
  }

  Term TermOf(const json& j, const std::string& path) {
    if (j.is_number_integer()) return Term::Const(j.get<std::int64_t>());
    if (j.is_string()) return Named(j.get<std::string>(), path);
    if (!j.is_object() || j.size() == 0) Fail(path, "expected a term");
    if (j.contains("const")) {
      if (!j["const"].is_number_integer()) Fail(path + ".const", "expected an integer");
      return Term::Const(j["const"].get<std::int64_t>());
    }
    if (j.contains("addr")) {
      const auto name = String(j["addr"], path + ".addr");
      auto e = topo_.FindEndpoint(name);
      if (!e) Fail(path + ".addr", "unknown address '" + name + "'");
      return Term::Const(e->v);
    }
    if (j.contains("server")) {
      const auto name = String(j["server"], path + ".server");
      auto ord = ServerOrd(name);
      if (!ord) Fail(path + ".server", "unknown server '" + name + "'");
      return Term::Const(static_cast<std::int64_t>(*ord));
    }
    if (j.contains("switch")) {
      const auto name = String(j["switch"], path + ".switch");
      auto sw = topo_.FindSwitch(name);
      if (!sw) Fail(path + ".switch", "unknown switch '" + name + "'");
      return Term::Const(sw->v);
    }
    if (j.contains("host")) {
      const auto name = String(j["host"], path + ".host");
      auto h = topo_.FindHost(name);
      if (!h) Fail(path + ".host", "unknown host '" + name + "'");
      return Term::Const(h->v);
    }
    if (j.contains("reg")) return Register(j, path);
    if (j.contains("abs")) return Term::Abs(TermOf(j["abs"], path + ".abs"));
    for (const char* op : {"add", "sub"}) {
      if (!j.contains(op)) continue;
      const auto& xs = j[op];
      if (!xs.is_array() || xs.size() != 2) Fail(path + "." + op, "expected two terms");
      auto a = TermOf(xs[0], path + "." + op + "[0]");
      auto b = TermOf(xs[1], path + "." + op + "[1]");
      return std::string(op) == "add" ? Term::Add(std::move(a), std::move(b))
                                      : Term::Sub(std::move(a), std::move(b));
    }
    Fail(path, "unknown term form");
  }

  std::optional<std::size_t> ServerOrd(const std::string& name) const {
    auto h = topo_.FindHost(name);
    if (!h) return std::nullopt;
    return topo_.ServerOrdinal(topo_.address(*h));
  }

  Term Register(const json& j, const std::string& path) {
    const auto name = String(j["reg"], path + ".reg");
    auto slot = layout_.Find(name);
    if (!slot) Fail(path + ".reg", "unknown register '" + name + "'");
    const auto domain = layout_.specs()[*slot].domain;
    const auto cells = layout_.Cells(*slot, topo_);
    if (!j.contains("index")) {
      if (domain != IndexDomain::kScalar) Fail(path + ".index", "missing for a non-scalar register");
      return Term::Reg(*slot, name, Term::Const(0));
    }
    const auto& idx = j["index"];
    const std::string ipath = path + ".index";
    if (idx.is_string() && !IsPacketField(idx.get<std::string>())) {
      const auto who = idx.get<std::string>();
      std::optional<std::size_t> cell;
      if (domain == IndexDomain::kServer) {
        cell = ServerOrd(who);
        if (!cell) Fail(ipath, "unknown server '" + who + "'");
      } else if (domain == IndexDomain::kEndpoint) {
        auto e = topo_.FindEndpoint(who);
        if (!e) Fail(ipath, "unknown address '" + who + "'");
        cell = e->v;
      } else {
        Fail(ipath, "scalar register takes no named index");
      }
      return Term::Reg(*slot, name, Term::Const(static_cast<std::int64_t>(*cell)));
    }
    Term t = TermOf(idx, ipath);
    if (t.kind == TKind::kConst) {
      if (t.value < 0 || static_cast<std::size_t>(t.value) >= cells) {
        Fail(ipath, "index out of range for register '" + name + "'");
      }
    } else if (domain != IndexDomain::kEndpoint) {
      // Address-valued expressions always land inside an endpoint register.
      Fail(ipath, "computed indices are only allowed on address-indexed registers");
    }
    return Term::Reg(*slot, name, std::move(t));
  }

  bool IsPacketField(const std::string& s) const {
    const auto dot = s.find('.');
    return dot != std::string::npos &&
           std::find(scope_.begin(), scope_.end(), s.substr(0, dot)) != scope_.end();
  }

  Term Named(const std::string& s, const std::string& path) {
    if (s == "drop") return Term::Const(kDropValue);
    if (s == "unset") return Term::Const(kUnsetValue);
    const auto dot = s.find('.');
    if (dot != std::string::npos) {
      const auto var = s.substr(0, dot);
      const auto field = s.substr(dot + 1);
      for (int d = static_cast<int>(scope_.size()) - 1; d >= 0; --d) {
        if (scope_[d] != var) continue;
        if (field == "src") return Term::PktField(d, Term::Field::kSrc);
        if (field == "dst") return Term::PktField(d, Term::Field::kDst);
        if (field == "in_port") return Term::PktField(d, Term::Field::kInPort);
        Fail(path, "unknown packet field '" + field + "'");
      }
    }
    auto it = ActFieldNames().find(s);
    if (it != ActFieldNames().end()) {
      if (!action_) Fail(path, "action parameter '" + s + "' outside an obligation body");
      if (!Carries(*action_, it->second)) {
        Fail(path, std::string("action ") + ToString(*action_) + " has no parameter '" + s + "'");
      }
      return Term::ActionParam(it->second);
    }
    Fail(path, "unknown name '" + s + "'");
  }

  const Topology& topo_;
  const RegisterLayout& layout_;
  std::vector<std::string> scope_;
  std::optional<Action::Kind> action_;
};

}  // namespace

Property ParseProperty(const nlohmann::json& doc, const Topology& topo,
                       const RegisterLayout& layout) {
  std::string builtin;
  std::int64_t bound = 2;
  if (doc.is_string()) {
    builtin = doc.get<std::string>();
  } else if (doc.is_object() && doc.contains("builtin")) {
    if (!doc["builtin"].is_string()) Fail("$.builtin", "expected a string");
    builtin = doc["builtin"].get<std::string>();
    if (doc.contains("bound")) {
      if (!doc["bound"].is_number_integer()) Fail("$.bound", "expected an integer");
      bound = doc["bound"].get<std::int64_t>();
    }
  } else {
    return Loader(topo, layout).LoadAst(doc);
  }
  if (builtin != kBuiltinPhiName) Fail("$.builtin", "unknown built-in property '" + builtin + "'");
  if (layout.Find("sLoad") != lb::kSLoad) {
    Fail("$.builtin", "controller has no sLoad register");
  }
  auto dodgy = topo.HostsWithRole(HostRole::kDodgyClient);
  std::optional<EndpointId> d;
  if (!dodgy.empty()) d = topo.address(dodgy.front());
  return builtin_phi(topo.servers(), d, bound);
}

}  // namespace softflow
