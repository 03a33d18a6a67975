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

#ifndef SOFTFLOW_PROPLANG_HH_
#define SOFTFLOW_PROPLANG_HH_

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "softflow/controller.hh"
#include "softflow/semantics.hh"
#include "softflow/topology.hh"
#include "softflow/types.hh"

namespace softflow {

// Integer encodings used by terms.
inline constexpr std::int64_t kDropValue = -1;  // rule.fwd of a dropping rule
inline constexpr std::int64_t kUnsetValue = -2; // wildcard match field

/// Integer-valued expression.
struct Term {
  enum class Kind : std::uint8_t { kConst, kReg, kPktField, kActField, kAbs, kAdd, kSub };
  enum class Field : std::uint8_t { kSrc, kDst, kInPort };
  enum class ActField : std::uint8_t {
    kPktSrc,
    kPktDst,
    kPktInPort,
    kRuleFwd,
    kRuleSrc,
    kRuleDst,
    kRuleInPort,
    kRulePriority,
    kRuleTimeout,
    kPort,
    kSwitch,
    kHost,
    kBarrier,
  };

  Kind kind = Kind::kConst;
  std::int64_t value = 0;     // kConst
  std::size_t reg = 0;        // kReg: register slot
  std::string reg_name;       // kReg
  int var = 0;                // kPktField: quantifier depth
  Field field = Field::kSrc;  // kPktField
  ActField act = ActField::kPktSrc;
  std::vector<Term> args;  // kReg: [index]; kAbs: [x]; kAdd/kSub: [a, b]

  static Term Const(std::int64_t v);
  static Term Reg(std::size_t slot, std::string name, Term index);
  static Term PktField(int var, Field f);
  static Term ActionParam(ActField f);
  static Term Abs(Term x);
  static Term Add(Term a, Term b);
  static Term Sub(Term a, Term b);
};

/// Boolean combination of controller-register comparisons and packet
/// quantifiers over switch pq and host rcvq sets.
struct StatePredicate {
  enum class Kind : std::uint8_t {
    kTrue,
    kFalse,
    kNot,
    kAnd,
    kOr,
    kCmp,
    kForall,
    kExists,
    kCtrlEquals,
  };
  enum class Cmp : std::uint8_t { kEq, kNe, kLt, kLe, kGt, kGe };
  enum class Queue : std::uint8_t { kPq, kRcvq };

  Kind kind = Kind::kTrue;
  std::vector<StatePredicate> kids;
  Cmp op = Cmp::kEq;
  Term lhs, rhs;
  Queue queue = Queue::kPq;
  std::uint16_t device = 0;  // switch index for pq, host index for rcvq
  ControllerState cs;        // kCtrlEquals

  static StatePredicate True();
  static StatePredicate False();
  static StatePredicate Not(StatePredicate p);
  static StatePredicate And(std::vector<StatePredicate> ps);
  static StatePredicate Or(std::vector<StatePredicate> ps);
  static StatePredicate Compare(Cmp op, Term a, Term b);
  /// Binds a packet at depth = number of enclosing quantifiers.
  static StatePredicate Forall(Queue q, std::uint16_t device, StatePredicate body);
  static StatePredicate Exists(Queue q, std::uint16_t device, StatePredicate body);
  static StatePredicate CtrlEquals(ControllerState cs);
};

/// [α(x)]P: after every transition labelled by an action of `kind` (and on
/// `sw` / `host` when given), `body` holds in the post-state with the
/// action's parameters bound.
struct ActionObligation {
  Action::Kind kind = Action::Kind::kMatch;
  std::optional<SwitchId> sw;
  std::optional<HostId> host;
  StatePredicate body;
};

/// Checked as an invariant plus per-transition obligations.
struct Property {
  std::string name;
  StatePredicate invariant;
  std::vector<ActionObligation> obligations;
};

bool eval_state_pred(const StatePredicate& p, const GlobalState& s);
bool eval_obligation(const ActionObligation& o, const Action& a,
                     const GlobalState& post);

/// True when the invariant holds at s.
inline bool eval_invariant(const Property& prop, const GlobalState& s) {
  return eval_state_pred(prop.invariant, s);
}

/// The load-balancer property: for all server pairs (si, sj) and every packet
/// in si's rcvq, the packet does not come from `dodgy` and
/// |sLoad[si] - sLoad[sj]| < bound. Ordered pairs, self-pairs included.
/// Throws ConfigError for an empty server list.
Property builtin_phi(const std::vector<HostId>& servers,
                     std::optional<EndpointId> dodgy, std::int64_t bound = 2);

/// Same predicate quantified over unordered pairs i < j. Agrees with
/// builtin_phi everywhere.
Property builtin_phi_unordered(const std::vector<HostId>& servers,
                               std::optional<EndpointId> dodgy,
                               std::int64_t bound = 2);

inline constexpr const char* kBuiltinPhiName = "lb-fairness-firewall";

/// Registers a property reads. `whole_state` is set by CtrlEquals atoms.
struct RegisterFootprint {
  std::set<std::string> registers;
  bool whole_state = false;

  bool has_ctrl_atoms() const { return whole_state || !registers.empty(); }
};

RegisterFootprint registers_read(const Property& prop);

/// Loads a property document. `doc` is either a string naming a built-in, an
/// object {"builtin": name, "bound": n}, or an AST object (see
/// docs/report-schema.md). All names are resolved here; failures throw
/// ConfigError naming the offending key.
Property ParseProperty(const nlohmann::json& doc, const Topology& topo,
                       const RegisterLayout& layout);

}  // namespace softflow

#endif /* SOFTFLOW_PROPLANG_HH_ */
