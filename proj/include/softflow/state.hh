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

#ifndef SOFTFLOW_STATE_HH_
#define SOFTFLOW_STATE_HH_

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

#include "softflow/types.hh"

namespace softflow {

/// 128-bit digest of a state's canonical serialization.
struct StateDigest {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  auto operator<=>(const StateDigest&) const = default;

  std::string ToHex() const;

  struct Hash {
    std::size_t operator()(const StateDigest& d) const {
      return static_cast<std::size_t>(d.lo ^ (d.hi * 0x9e3779b97f4a7c15ULL));
    }
  };
};

/// Canonical byte encoding. Sets are written in their sorted order, the
/// control queue segment by segment, integers in a variable-length form
/// whose byte order agrees with the value order of every element type.
std::string Serialize(const GlobalState& s);
std::string Serialize(const Rule& r);

/// Inverse of Serialize. Throws ModelError on malformed input.
GlobalState Deserialize(std::string_view bytes);

/// FNV-1a (128-bit) over the canonical serialization.
StateDigest DigestOf(std::string_view bytes);
inline StateDigest canonical_hash(const GlobalState& s) {
  return DigestOf(Serialize(s));
}

}  // namespace softflow

#endif /* SOFTFLOW_STATE_HH_ */
