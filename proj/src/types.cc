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

#include "softflow/types.hh"

#include <algorithm>

namespace softflow {

ControlQueue ControlQueue::FromSegments(std::vector<CqSegment> segments) {
  for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
    SOFTFLOW_CHECK(segments[i].barrier.has_value(), "unclosed inner control-queue segment");
  }
  ControlQueue q;
  q.segments_ = std::move(segments);
  SOFTFLOW_CHECK(q.segments_.empty() || q.segments_.back().barrier ||
                     !q.segments_.back().mods.empty(),
                 "control queue not in normal form");
  return q;
}

void ControlQueue::Push(const ControlMessage& msg) {
  if (segments_.empty() || segments_.back().barrier) {
    segments_.emplace_back();
  }
  if (msg.is_barrier()) {
    segments_.back().barrier = *msg.barrier;
  } else {
    SOFTFLOW_CHECK(msg.flow_mod.has_value(), "empty control message");
    segments_.back().mods.insert(*msg.flow_mod);
  }
}

void ControlQueue::PopFirst(const FlowMod& m) {
  SOFTFLOW_CHECK(!segments_.empty() && segments_.front().mods.erase(m) == 1,
                 "FlowMod is not in the first control-queue segment");
  Normalize();
}

void ControlQueue::PopReadyBarrier() {
  SOFTFLOW_CHECK(ready_barrier().has_value(), "no barrier ready for reply");
  segments_.erase(segments_.begin());
}

void ControlQueue::Normalize() {
  if (!segments_.empty() && segments_.front().mods.empty() &&
      !segments_.front().barrier) {
    // Only the last segment can be unclosed.
    segments_.erase(segments_.begin());
  }
}

void SwitchState::Install(const Rule& r) {
  Uninstall(r);
  ft.insert(r);
}

std::size_t SwitchState::Uninstall(const Rule& r) {
  auto before = ft.size();
  for (auto it = ft.begin(); it != ft.end();) {
    it = it->SameSlot(r) ? ft.erase(it) : std::next(it);
  }
  return before - ft.size();
}

std::ostream& operator<<(std::ostream& os, const Packet& pkt) {
  return os << "pkt(" << pkt.src.v << "->" << pkt.dst.v << " in:" << pkt.in_port.v
            << ")";
}

std::ostream& operator<<(std::ostream& os, const Rule& r) {
  os << "rule(";
  if (r.match.src) os << "src=" << r.match.src->v << " ";
  if (r.match.dst) os << "dst=" << r.match.dst->v << " ";
  if (r.match.in_port) os << "in=" << r.match.in_port->v << " ";
  if (r.catch_all) os << "* ";
  os << "-> ";
  if (r.fwd.is_drop()) {
    os << "drop";
  } else {
    os << r.fwd.port().v;
  }
  os << " prio=" << r.priority << (r.timeout ? " timeout" : "") << ")";
  return os;
}

std::ostream& operator<<(std::ostream& os, const FlowMod& m) {
  switch (m.kind) {
    case FlowMod::Kind::kAdd:
      return os << "add " << m.rule;
    case FlowMod::Kind::kDel:
      return os << "del " << m.rule;
    case FlowMod::Kind::kMod:
      os << "mod(";
      if (m.pattern.src) os << "src=" << m.pattern.src->v << " ";
      if (m.pattern.dst) os << "dst=" << m.pattern.dst->v << " ";
      if (m.pattern.in_port) os << "in=" << m.pattern.in_port->v << " ";
      os << "|";
      if (m.patch.fwd) {
        os << " fwd<-";
        if (m.patch.fwd->is_drop()) {
          os << "drop";
        } else {
          os << m.patch.fwd->port().v;
        }
      }
      if (m.patch.src) os << " src<-" << m.patch.src->v;
      if (m.patch.dst) os << " dst<-" << m.patch.dst->v;
      if (m.patch.in_port) os << " in<-" << m.patch.in_port->v;
      return os << ")";
  }
  return os;
}

}  // namespace softflow
