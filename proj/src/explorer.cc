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

#include "softflow/explorer.hh"

#include <algorithm>
#include <chrono>
#include <deque>
#include <limits>
#include <mutex>
#include <new>
#include <thread>

#include <absl/container/flat_hash_map.h>

namespace softflow {

const char* ToString(Verdict v) {
  switch (v) {
    case Verdict::kHolds:
      return "Holds";
    case Verdict::kViolated:
      return "Violated";
    case Verdict::kBoundExceeded:
      return "BoundExceeded";
  }
  return "?";
}

const char* ToString(SearchOrder o) {
  return o == SearchOrder::kBreadthFirst ? "bfs" : "dfs";
}

namespace {

using Kind = Action::Kind;
constexpr std::size_t kMaxExamples = 8;

struct Successor {
  std::uint16_t choice = 0;
  Action action;
  GlobalState state;
  std::string bytes;
  StateDigest digest;
  std::optional<std::size_t> failed_obligation;
};

struct Expansion {
  bool fully_expanded = true;
  std::vector<Successor> succ;
  AuditStats audit;
};

void Note(AuditStats& a, std::string what) {
  if (a.examples.size() < kMaxExamples) a.examples.push_back(std::move(what));
}

void Audit(const GlobalState& s, const std::vector<Action>& enabled,
           const std::vector<Action>& chosen, const PorContext& ctx,
           AuditStats& out) {
  const auto& topo = ctx.topo();
  ++out.states_audited;

  // C1: nonempty iff A(s) nonempty, and a subset of A(s).
  bool c1 = enabled.empty() == chosen.empty();
  for (const auto& a : chosen) {
    if (!std::binary_search(enabled.begin(), enabled.end(), a)) c1 = false;
  }
  if (!c1) {
    ++out.c1_failures;
    Note(out, "C1 fails at " + canonical_hash(s).ToHex());
  }
  if (chosen.size() != enabled.size()) {
    for (const auto& a : chosen) {
      if (!is_safe(a, ctx)) {
        ++out.safety_failures;
        Note(out, "reduced ample set holds unsafe " + Describe(a, topo));
      }
    }
  }

  bool counted = false;
  for (const auto& a : enabled) {
    if (!is_safe(a, ctx)) continue;
    if (a.kind == Kind::kFsync && !counted) {
      ++out.safe_fsync_states;
      counted = true;
    }
    for (const auto& b : enabled) {
      if (a == b) continue;
      ++out.commutation_checks;
      if (!commutation_oracle(s, a, b, ctx)) {
        ++out.commutation_failures;
        Note(out, "no commutation at " + canonical_hash(s).ToHex() + ": " +
                      Describe(a, topo) + " vs " + Describe(b, topo));
      }
    }
  }

  // FlowMods enabled on a switch are exactly its first segment's contents.
  for (SwitchId sw{0}; sw.v < s.switches.size(); ++sw.v) {
    const auto& segs = s.sw(sw).cq.segments();
    std::vector<FlowMod> live;
    for (const auto& a : enabled) {
      if (a.sw != sw) continue;
      if (a.kind == Kind::kAdd || a.kind == Kind::kDel || a.kind == Kind::kMod) {
        live.push_back(a.msg);
      }
    }
    std::sort(live.begin(), live.end());
    std::vector<FlowMod> first;
    if (!segs.empty()) first.assign(segs.front().mods.begin(), segs.front().mods.end());
    if (live != first) {
      ++out.barrier_failures;
      Note(out, "FlowMod enabled outside the first segment on " + topo.switch_name(sw));
    }
  }
  for (const auto& a : enabled) {
    if (a.kind == Kind::kFrmvd && !a.rule.timeout) {
      ++out.timeout_failures;
      Note(out, "frmvd enabled for a hard rule: " + Describe(a, topo));
    }
  }
}

Expansion Expand(const GlobalState& s, const PorContext& ctx,
                 const ExplorationOptions& opts) {
  const auto& topo = ctx.topo();
  const auto& cp = ctx.cp();
  const auto& phi = ctx.phi();
  Expansion ex;
  const auto enabled = enabled_actions(s, topo, cp);
  SOFTFLOW_CHECK(enabled.size() <= 0xffff, "too many enabled actions");
  std::vector<Action> chosen = opts.por ? ample(s, enabled, ctx) : enabled;
  ex.fully_expanded = chosen.size() == enabled.size();
  if (opts.audit) Audit(s, enabled, chosen, ctx, ex.audit);

  ex.succ.reserve(chosen.size());
  for (auto& a : chosen) {
    Successor n;
    const auto pos = std::lower_bound(enabled.begin(), enabled.end(), a);
    SOFTFLOW_CHECK(pos != enabled.end() && *pos == a, "ample action is not enabled");
    n.choice = static_cast<std::uint16_t>(pos - enabled.begin());
    n.state = apply(s, a, topo, cp);
    n.bytes = Serialize(n.state);
    n.digest = DigestOf(n.bytes);
    for (std::size_t i = 0; i < phi.obligations.size(); ++i) {
      if (!eval_obligation(phi.obligations[i], a, n.state)) {
        n.failed_obligation = i;
        break;
      }
    }
    if (opts.audit && a.kind == Kind::kFsync) {
      ++ex.audit.fsync_fired;
      if (n.state.ctrl.frq.size() + 1 != s.ctrl.frq.size()) {
        ++ex.audit.frq_failures;
        Note(ex.audit, "fsync did not shrink frq: " + Describe(a, topo));
      }
    }
    n.action = std::move(a);
    ex.succ.push_back(std::move(n));
  }
  return ex;
}

void Merge(AuditStats& into, AuditStats&& from) {
  into.states_audited += from.states_audited;
  into.c1_failures += from.c1_failures;
  into.safety_failures += from.safety_failures;
  into.safe_fsync_states += from.safe_fsync_states;
  into.commutation_checks += from.commutation_checks;
  into.commutation_failures += from.commutation_failures;
  into.fsync_fired += from.fsync_fired;
  into.frq_failures += from.frq_failures;
  into.barrier_failures += from.barrier_failures;
  into.timeout_failures += from.timeout_failures;
  for (auto& e : from.examples) {
    if (into.examples.size() < kMaxExamples) into.examples.push_back(std::move(e));
  }
}

class Search {
 public:
  Search(const Topology& topo, const WorkloadConfig& workload,
         const ControllerProgram& cp, const Property& phi,
         const ExplorationOptions& opts)
      : topo_(topo),
        workload_(workload),
        cp_(cp),
        phi_(phi),
        opts_(opts),
        ctx_(topo, cp, phi, opts.por_options) {}

  ExplorationReport Run() {
    start_ = std::chrono::steady_clock::now();
    rep_.fsync_classification = ctx_.fsync_reason();
    try {
      RunInner();
    } catch (const std::bad_alloc&) {
      frontier_.clear();
      rep_.verdict = Verdict::kBoundExceeded;
      rep_.bound_reason = "out of memory";
    }
    rep_.states_explored = tree_.size();
    rep_.elapsed_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start_)
                          .count();
    if (opts_.record_graph) {
      rep_.graph = BuildGraph();
      rep_.tree = std::move(tree_);
    }
    return std::move(rep_);
  }

 private:
  using Entry = std::pair<std::uint32_t, std::string>;

  void RunInner() {
    const GlobalState s0 = initial_state(topo_, workload_, cp_);
    std::string bytes = Serialize(s0);
    if (!Discover(DigestOf(bytes), {0, 0}, bytes, s0)) return;
    if (!eval_invariant(phi_, s0)) {
      Violated(0, std::nullopt, nullptr);
      return;
    }
    frontier_.push_back({0, std::move(bytes)});

    const bool dfs = opts_.order == SearchOrder::kDepthFirst;
    const unsigned workers = dfs ? 1 : std::max(1u, opts_.worker_count);
    const std::size_t batch_cap = workers == 1 ? 1 : 64 * static_cast<std::size_t>(workers);

    std::vector<Entry> batch;
    std::vector<Expansion> out;
    while (!frontier_.empty()) {
      if (TimeUp()) return;
      batch.clear();
      while (!frontier_.empty() && batch.size() < batch_cap) {
        if (dfs) {
          batch.push_back(std::move(frontier_.back()));
          frontier_.pop_back();
        } else {
          batch.push_back(std::move(frontier_.front()));
          frontier_.pop_front();
        }
      }
      out.assign(batch.size(), Expansion{});
      if (workers == 1) {
        out[0] = Expand(Deserialize(batch[0].second), ctx_, opts_);
      } else {
        std::vector<std::thread> pool;
        std::exception_ptr err;
        std::mutex err_mu;
        for (unsigned w = 0; w < workers; ++w) {
          pool.emplace_back([&, w] {
            try {
              for (std::size_t i = w; i < batch.size(); i += workers) {
                out[i] = Expand(Deserialize(batch[i].second), ctx_, opts_);
              }
            } catch (...) {
              std::lock_guard<std::mutex> lock(err_mu);
              if (!err) err = std::current_exception();
            }
          });
        }
        for (auto& t : pool) t.join();
        if (err) std::rethrow_exception(err);
      }
      for (std::size_t i = 0; i < batch.size(); ++i) {
        if (!Absorb(batch[i].first, std::move(out[i]))) return;
      }
    }
  }

  bool TimeUp() {
    if (!opts_.time_limit_s) return false;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (secs < *opts_.time_limit_s) return false;
    rep_.verdict = Verdict::kBoundExceeded;
    rep_.bound_reason = "time limit reached";
    return true;
  }

  // Registers a new node. Returns false once the state bound is exceeded.
  bool Discover(const StateDigest& d, SearchNode node, const std::string& bytes,
                const GlobalState& s) {
    if (opts_.max_states && tree_.size() >= *opts_.max_states) {
      rep_.verdict = Verdict::kBoundExceeded;
      rep_.bound_reason = "state bound reached";
      return false;
    }
    SOFTFLOW_CHECK(tree_.size() < std::numeric_limits<std::uint32_t>::max(),
                   "state count exceeds the node index range");
    const auto id = static_cast<std::uint32_t>(tree_.size());
    index_.emplace(d, id);
    tree_.push_back(node);
    if (opts_.check_collisions) bytes_.emplace(d, bytes);
    if (opts_.record_graph) expanded_.push_back(true);
    if (opts_.collect_digests) rep_.digests.push_back(d);
    if (opts_.collect_states) rep_.states.push_back(s);
    return true;
  }

  bool Absorb(std::uint32_t from, Expansion&& ex) {
    Merge(rep_.audit, std::move(ex.audit));
    if (!ex.fully_expanded) ++rep_.reduced_states;
    if (opts_.record_graph) expanded_[from] = ex.fully_expanded;
    for (auto& n : ex.succ) {
      ++rep_.transitions;
      auto it = index_.find(n.digest);
      const bool fresh = it == index_.end();
      std::uint32_t to;
      if (!fresh) {
        to = it->second;
        if (opts_.check_collisions && bytes_.at(n.digest) != n.bytes) {
          throw ModelError("digest collision at " + n.digest.ToHex());
        }
      } else {
        to = static_cast<std::uint32_t>(tree_.size());
        if (!Discover(n.digest, {from, n.choice}, n.bytes, n.state)) return false;
      }
      if (opts_.record_graph) edges_.push_back({from, to});

      if (n.failed_obligation) {
        Violated(from, n.failed_obligation, &n);
        return false;
      }
      if (fresh) {
        if (!eval_invariant(phi_, n.state)) {
          Violated(to, std::nullopt, nullptr);
          return false;
        }
        frontier_.push_back({to, std::move(n.bytes)});
      }
    }
    return true;
  }

  // `last` is the failing transition out of `node` for an obligation.
  void Violated(std::uint32_t node, std::optional<std::size_t> obligation,
                const Successor* last) {
    Trace trace = reconstruct_trace(topo_, workload_, cp_, tree_, node);
    if (last) trace.steps.push_back({last->action, last->digest});
    Violation v;
    if (obligation) {
      v.invariant = false;
      v.obligation = *obligation;
      v.description = "obligation " + std::to_string(*obligation) + " ([" +
                      ToString(phi_.obligations[*obligation].kind) +
                      "]) fails after " + Describe(trace.steps.back().action, topo_);
    } else {
      v.description = "invariant of " + phi_.name + " is false";
    }
    if (!replay_reproduces(topo_, workload_, cp_, phi_, trace, v)) {
      throw ModelError("counterexample does not replay");
    }
    rep_.verdict = Verdict::kViolated;
    rep_.counterexample = std::move(trace);
    rep_.violation = std::move(v);
    frontier_.clear();
  }

  ExploredGraph BuildGraph() {
    ExploredGraph g;
    const auto n = tree_.size();
    g.offsets.assign(n + 1, 0);
    for (const auto& [from, to] : edges_) ++g.offsets[from + 1];
    for (std::size_t v = 0; v < n; ++v) g.offsets[v + 1] += g.offsets[v];
    g.targets.resize(edges_.size());
    std::vector<std::uint64_t> fill(g.offsets.begin(), g.offsets.end() - 1);
    for (const auto& [from, to] : edges_) g.targets[fill[from]++] = to;
    edges_.clear();
    edges_.shrink_to_fit();
    g.fully_expanded = std::move(expanded_);
    return g;
  }

  const Topology& topo_;
  const WorkloadConfig& workload_;
  const ControllerProgram& cp_;
  const Property& phi_;
  const ExplorationOptions& opts_;
  PorContext ctx_;

  std::chrono::steady_clock::time_point start_;
  ExplorationReport rep_;
  std::vector<SearchNode> tree_;
  absl::flat_hash_map<StateDigest, std::uint32_t, StateDigest::Hash> index_;
  absl::flat_hash_map<StateDigest, std::string, StateDigest::Hash> bytes_;
  std::deque<Entry> frontier_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges_;
  std::vector<bool> expanded_;
};

}  // namespace

ExplorationReport explore(const Topology& topo, const WorkloadConfig& workload,
                          const ControllerProgram& cp, const Property& phi,
                          const ExplorationOptions& opts) {
  if (opts.max_states && *opts.max_states < 1) {
    throw ConfigError("max-states must be at least 1");
  }
  return Search(topo, workload, cp, phi, opts).Run();
}

Trace reconstruct_trace(const Topology& topo, const WorkloadConfig& workload,
                        const ControllerProgram& cp,
                        const std::vector<SearchNode>& tree, std::uint32_t node) {
  SOFTFLOW_CHECK(node < tree.size(), "reconstruct_trace: unknown node");
  std::vector<std::uint16_t> choices;
  for (std::uint32_t v = node; v != 0; v = tree[v].parent) choices.push_back(tree[v].choice);
  std::reverse(choices.begin(), choices.end());

  GlobalState s = initial_state(topo, workload, cp);
  Trace t;
  t.initial = canonical_hash(s);
  for (auto c : choices) {
    const auto enabled = enabled_actions(s, topo, cp);
    SOFTFLOW_CHECK(c < enabled.size(), "reconstruct_trace: choice out of range");
    s = apply(s, enabled[c], topo, cp);
    t.steps.push_back({enabled[c], canonical_hash(s)});
  }
  return t;
}

std::optional<GlobalState> replay(const Topology& topo, const WorkloadConfig& workload,
                                  const ControllerProgram& cp, const Trace& trace) {
  GlobalState s = initial_state(topo, workload, cp);
  if (canonical_hash(s) != trace.initial) return std::nullopt;
  for (const auto& step : trace.steps) {
    if (!is_enabled(s, step.action, topo, cp)) return std::nullopt;
    s = apply(s, step.action, topo, cp);
    if (canonical_hash(s) != step.digest) return std::nullopt;
  }
  return s;
}

bool replay_reproduces(const Topology& topo, const WorkloadConfig& workload,
                       const ControllerProgram& cp, const Property& phi,
                       const Trace& trace, const Violation& violation) {
  auto end = replay(topo, workload, cp, trace);
  if (!end) return false;
  if (violation.invariant) return !eval_invariant(phi, *end);
  if (trace.steps.empty() || violation.obligation >= phi.obligations.size()) return false;
  return !eval_obligation(phi.obligations[violation.obligation],
                          trace.steps.back().action, *end);
}

namespace {

bool SameFlow(const Packet& a, const Packet& b) {
  return a.src == b.src && a.dst == b.dst;
}

}  // namespace

std::optional<std::string> causal_audit_failure(const Trace& trace) {
  const auto& st = trace.steps;
  for (std::size_t i = 0; i < st.size(); ++i) {
    const Action& a = st[i].action;
    auto before = [&](auto pred) {
      for (std::size_t j = 0; j < i; ++j) {
        if (pred(st[j].action)) return true;
      }
      return false;
    };
    auto mod_on_sw = [&](const Action& b) { return b.kind == Kind::kMod && b.sw == a.sw; };
    bool ok = true;
    switch (a.kind) {
      case Kind::kSend:
        break;
      case Kind::kNoMatch:
        ok = before([&](const Action& b) {
          return b.kind == Kind::kSend && SameFlow(b.pkt, a.pkt);
        });
        break;
      case Kind::kCtrl:
        ok = before([&](const Action& b) {
          return b.kind == Kind::kNoMatch && b.sw == a.sw && b.pkt == a.pkt;
        });
        break;
      case Kind::kAdd:
      case Kind::kDel:
      case Kind::kFwd:
        ok = before([&](const Action& b) { return b.kind == Kind::kCtrl && b.sw == a.sw; });
        break;
      case Kind::kMatch:
      case Kind::kFrmvd:
        ok = before([&](const Action& b) {
          return (b.kind == Kind::kAdd && b.sw == a.sw && b.rule == a.rule) || mod_on_sw(b);
        });
        break;
      case Kind::kFsync:
        ok = before([&](const Action& b) {
          return b.kind == Kind::kFrmvd && b.sw == a.sw && b.rule == a.rule;
        });
        break;
      case Kind::kMod:
        ok = before([&](const Action& b) { return b.kind == Kind::kFsync && b.sw == a.sw; });
        break;
      case Kind::kRecv:
        ok = before([&](const Action& b) {
          return (b.kind == Kind::kFwd || b.kind == Kind::kMatch) && SameFlow(b.pkt, a.pkt);
        });
        break;
      case Kind::kBrepl:
        ok = before([&](const Action& b) { return b.is_handler() && b.sw == a.sw; });
        break;
      case Kind::kBsync:
        ok = before([&](const Action& b) {
          return b.kind == Kind::kBrepl && b.sw == a.sw && b.barrier == a.barrier;
        });
        break;
    }
    if (!ok) {
      return "step " + std::to_string(i) + " (" + ToString(a.kind) +
             ") has no causal parent earlier in the trace";
    }
  }
  return std::nullopt;
}

bool causal_audit(const Trace& trace) { return !causal_audit_failure(trace).has_value(); }

}  // namespace softflow
