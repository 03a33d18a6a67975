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

#ifndef SOFTFLOW_TESTS_NAIVE_ENUMERATOR_HH_
#define SOFTFLOW_TESTS_NAIVE_ENUMERATOR_HH_

#include <set>

#include "softflow/semantics.hh"
#include "softflow/state.hh"

namespace softflow::testing {

// Reachability by plain recursion over the transition relation, keyed on
// full states. Shares nothing with the explorer beyond the semantics.
class NaiveEnumerator {
 public:
  NaiveEnumerator(const Topology& topo, const ControllerProgram& cp) : topo_(topo), cp_(cp) {}

  std::set<StateDigest> Run(const GlobalState& s0) {
    seen_.clear();
    Visit(s0);
    std::set<StateDigest> out;
    for (const auto& s : seen_) out.insert(canonical_hash(s));
    return out;
  }

  std::size_t size() const { return seen_.size(); }

 private:
  struct Less {
    bool operator()(const GlobalState& a, const GlobalState& b) const {
      return Serialize(a) < Serialize(b);
    }
  };

  void Visit(const GlobalState& s) {
    if (!seen_.insert(s).second) return;
    for (const auto& a : enabled_actions(s, topo_, cp_)) Visit(apply(s, a, topo_, cp_));
  }

  const Topology& topo_;
  const ControllerProgram& cp_;
  std::set<GlobalState, Less> seen_;
};

}  // namespace softflow::testing

#endif /* SOFTFLOW_TESTS_NAIVE_ENUMERATOR_HH_ */
