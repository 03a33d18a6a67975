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

#include "softflow/state.hh"

#include <cstdio>

namespace softflow {

namespace {

// Compact encoding. Unsigned values below 0xff take one byte, others are
// escaped with 0xff and four big-endian bytes. Signed values in [-16, 237]
// take one byte; others are escaped with 0x00 (below) or 0xff (above) and
// eight offset-binary bytes. Both forms keep byte order equal to value order.
class Writer {
 public:
  explicit Writer(std::string* buf) : buf_(buf) {
    if (buf_->size() < 256) buf_->resize(256);
  }

  std::string_view bytes() const { return {buf_->data(), pos_}; }

  void U8(std::uint8_t v) {
    if (pos_ == buf_->size()) buf_->resize(2 * buf_->size());
    (*buf_)[pos_++] = static_cast<char>(v);
  }
  void U(std::uint32_t v) {
    if (v < 0xff) {
      U8(static_cast<std::uint8_t>(v));
      return;
    }
    U8(0xff);
    for (int shift = 24; shift >= 0; shift -= 8) U8(static_cast<std::uint8_t>(v >> shift));
  }
  void I64(std::int64_t v) {
    if (v >= -16 && v <= 237) {
      U8(static_cast<std::uint8_t>(v + 17));
      return;
    }
    U8(v < 0 ? 0x00 : 0xff);
    const auto u = static_cast<std::uint64_t>(v) ^ (1ULL << 63);
    for (int shift = 56; shift >= 0; shift -= 8) U8(static_cast<std::uint8_t>(u >> shift));
  }

  template <class T, class F>
  void Opt(const std::optional<T>& o, F f) {
    if (o) {
      U8(1);
      f(*o);
    } else {
      U8(0);
    }
  }

  void Put(const Packet& p) {
    U(p.src.v);
    U(p.dst.v);
    U(p.in_port.v);
  }

  void Put(const ForwardTarget& t) {
    // Port targets sort before drop, as in ForwardTarget's ordering.
    U8(t.is_drop() ? 1 : 0);
    U(t.is_drop() ? 0 : t.port().v);
  }

  void Put(const RuleMatch& m) {
    Opt(m.src, [&](EndpointId e) { U(e.v); });
    Opt(m.dst, [&](EndpointId e) { U(e.v); });
    Opt(m.in_port, [&](PortId p) { U(p.v); });
  }

  void Put(const Rule& r) {
    Put(r.match);
    Put(r.fwd);
    U(r.priority);
    U8(r.timeout);
    U8(r.catch_all);
  }

  void Put(const FlowMod& m) {
    U8(static_cast<std::uint8_t>(m.kind));
    Put(m.rule);
    Put(m.pattern);
    Opt(m.patch.fwd, [&](const ForwardTarget& t) { Put(t); });
    Opt(m.patch.src, [&](EndpointId e) { U(e.v); });
    Opt(m.patch.dst, [&](EndpointId e) { U(e.v); });
    Opt(m.patch.in_port, [&](PortId p) { U(p.v); });
  }

  template <class T, class F>
  void Set(const FlatSet<T>& s, F f) {
    U(static_cast<std::uint32_t>(s.size()));
    for (const auto& e : s) f(e);
  }

  void Put(const GlobalState& s) {
    U(static_cast<std::uint32_t>(s.hosts.size()));
    for (const auto& h : s.hosts) {
      Set(h.rcvq, [&](const Packet& p) { Put(p); });
      Set(h.send_buf, [&](const Packet& p) { Put(p); });
    }
    U(static_cast<std::uint32_t>(s.switches.size()));
    for (const auto& sw : s.switches) {
      Set(sw.pq, [&](const Packet& p) { Put(p); });
      Set(sw.fq, [&](const ForwardEntry& e) {
        Put(e.pkt);
        U(e.port.v);
      });
      U(static_cast<std::uint32_t>(sw.cq.segments().size()));
      for (const auto& seg : sw.cq.segments()) {
        Set(seg.mods, [&](const FlowMod& m) { Put(m); });
        Opt(seg.barrier, [&](BarrierId b) { U(b.v); });
      }
      Set(sw.ft, [&](const Rule& r) { Put(r); });
    }
    const auto& c = s.ctrl;
    U(static_cast<std::uint32_t>(c.cs.regs.size()));
    for (const auto& reg : c.cs.regs) {
      U(static_cast<std::uint32_t>(reg.size()));
      for (auto v : reg) I64(v);
    }
    Set(c.rq, [&](const PacketIn& e) {
      U(e.sw.v);
      Put(e.pkt);
    });
    Set(c.brq, [&](const BarrierReply& e) {
      U(e.sw.v);
      U(e.barrier.v);
    });
    Set(c.frq, [&](const FlowRemoved& e) {
      U(e.sw.v);
      Put(e.rule);
    });
  }

 private:
  std::string* buf_;
  std::size_t pos_ = 0;
};

// Scratch space reused across calls on the same thread.
std::string& Scratch() {
  thread_local std::string buf;
  return buf;
}

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  bool done() const { return pos_ == in_.size(); }

  std::uint8_t U8() {
    SOFTFLOW_CHECK(pos_ < in_.size(), "truncated state encoding");
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t U() {
    const auto b = U8();
    if (b < 0xff) return b;
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | U8();
    return v;
  }
  std::uint16_t U16() {
    const auto v = U();
    SOFTFLOW_CHECK(v <= 0xffff, "identifier out of range in state encoding");
    return static_cast<std::uint16_t>(v);
  }
  std::int64_t I64() {
    const auto b = U8();
    if (b != 0x00 && b != 0xff) return static_cast<std::int64_t>(b) - 17;
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u = (u << 8) | U8();
    return static_cast<std::int64_t>(u ^ (1ULL << 63));
  }
  bool Bool() { return U8() != 0; }

  template <class F>
  auto Opt(F f) -> std::optional<decltype(f())> {
    if (!Bool()) return std::nullopt;
    return f();
  }

  Packet GetPacket() {
    Packet p;
    p.src.v = U16();
    p.dst.v = U16();
    p.in_port.v = U16();
    return p;
  }

  ForwardTarget GetTarget() {
    const bool drop = Bool();
    const PortId port{U16()};
    return drop ? ForwardTarget::Drop() : ForwardTarget::Port(port);
  }

  RuleMatch GetMatch() {
    RuleMatch m;
    m.src = Opt([&] { return EndpointId{U16()}; });
    m.dst = Opt([&] { return EndpointId{U16()}; });
    m.in_port = Opt([&] { return PortId{U16()}; });
    return m;
  }

  Rule GetRule() {
    Rule r;
    r.match = GetMatch();
    r.fwd = GetTarget();
    r.priority = U16();
    r.timeout = Bool();
    r.catch_all = Bool();
    return r;
  }

  FlowMod GetFlowMod() {
    FlowMod m;
    m.kind = static_cast<FlowMod::Kind>(U8());
    m.rule = GetRule();
    m.pattern = GetMatch();
    m.patch.fwd = Opt([&] { return GetTarget(); });
    m.patch.src = Opt([&] { return EndpointId{U16()}; });
    m.patch.dst = Opt([&] { return EndpointId{U16()}; });
    m.patch.in_port = Opt([&] { return PortId{U16()}; });
    return m;
  }

  // Elements arrive in sorted order, so each insert goes at the end.
  template <class T, class F>
  FlatSet<T> Set(F f) {
    FlatSet<T> s;
    const auto n = U();
    s.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) s.insert(s.end(), f());
    SOFTFLOW_CHECK(s.size() == n, "duplicate set element in state encoding");
    return s;
  }

  GlobalState GetState() {
    GlobalState s;
    s.hosts.resize(U());
    for (auto& h : s.hosts) {
      h.rcvq = Set<Packet>([&] { return GetPacket(); });
      h.send_buf = Set<Packet>([&] { return GetPacket(); });
    }
    s.switches.resize(U());
    for (auto& sw : s.switches) {
      sw.pq = Set<Packet>([&] { return GetPacket(); });
      sw.fq = Set<ForwardEntry>([&] {
        ForwardEntry e;
        e.pkt = GetPacket();
        e.port.v = U16();
        return e;
      });
      std::vector<CqSegment> segs(U());
      for (auto& seg : segs) {
        seg.mods = Set<FlowMod>([&] { return GetFlowMod(); });
        seg.barrier = Opt([&] { return BarrierId{U()}; });
      }
      sw.cq = ControlQueue::FromSegments(std::move(segs));
      sw.ft = Set<Rule>([&] { return GetRule(); });
    }
    auto& c = s.ctrl;
    c.cs.regs.resize(U());
    for (auto& reg : c.cs.regs) {
      reg.resize(U());
      for (auto& v : reg) v = I64();
    }
    c.rq = Set<PacketIn>([&] {
      PacketIn e;
      e.sw.v = U16();
      e.pkt = GetPacket();
      return e;
    });
    c.brq = Set<BarrierReply>([&] {
      BarrierReply e;
      e.sw.v = U16();
      e.barrier.v = U();
      return e;
    });
    c.frq = Set<FlowRemoved>([&] {
      FlowRemoved e;
      e.sw.v = U16();
      e.rule = GetRule();
      return e;
    });
    return s;
  }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string Serialize(const GlobalState& s) {
  Writer w(&Scratch());
  w.Put(s);
  return std::string(w.bytes());
}

std::string Serialize(const Rule& r) {
  Writer w(&Scratch());
  w.Put(r);
  return std::string(w.bytes());
}

GlobalState Deserialize(std::string_view bytes) {
  Reader r(bytes);
  auto s = r.GetState();
  SOFTFLOW_CHECK(r.done(), "trailing bytes in state encoding");
  return s;
}

StateDigest DigestOf(std::string_view bytes) {
  using u128 = unsigned __int128;
  const u128 kPrime = (static_cast<u128>(0x0000000001000000ULL) << 64) |
                      0x000000000000013BULL;
  u128 h = (static_cast<u128>(0x6c62272e07bb0142ULL) << 64) |
           0x62b821756295c58dULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kPrime;
  }
  return {static_cast<std::uint64_t>(h >> 64), static_cast<std::uint64_t>(h)};
}

std::string StateDigest::ToHex() const {
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx",
                static_cast<unsigned long long>(hi),
                static_cast<unsigned long long>(lo));
  return buf;
}

}  // namespace softflow
