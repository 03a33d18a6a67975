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

#include "softflow/topology.hh"

#include <limits>
#include <set>
#include <sstream>

namespace softflow {

const char* ToString(HostRole role) {
  switch (role) {
    case HostRole::kClient:
      return "client";
    case HostRole::kDodgyClient:
      return "dodgy";
    case HostRole::kServer:
      return "server";
  }
  return "?";
}

TopologyConfig::Switch TopologyConfig::Switch::WithPorts(std::string name,
                                                         int n) {
  Switch sw{std::move(name), {}};
  for (int p = 1; p <= n; ++p) sw.ports.push_back(p);
  return sw;
}

Interface Topology::Peer(const Interface& i) const {
  auto it = links_.find(i);
  SOFTFLOW_CHECK(it != links_.end(), "interface is not linked");
  return it->second;
}

std::optional<Interface> Topology::PeerIfLinked(const Interface& i) const {
  auto it = links_.find(i);
  if (it == links_.end()) return std::nullopt;
  return it->second;
}

std::string Topology::endpoint_name(EndpointId e) const {
  if (e == cluster_address()) return config_.cluster_address;
  if (e.v < hosts_.size()) return hosts_[e.v].name;
  return "?" + std::to_string(e.v);
}

std::optional<HostId> Topology::FindHost(const std::string& name) const {
  for (std::size_t i = 0; i < hosts_.size(); ++i) {
    if (hosts_[i].name == name) return HostId{static_cast<std::uint16_t>(i)};
  }
  return std::nullopt;
}

std::optional<SwitchId> Topology::FindSwitch(const std::string& name) const {
  for (std::size_t i = 0; i < switches_.size(); ++i) {
    if (switches_[i].name == name) {
      return SwitchId{static_cast<std::uint16_t>(i)};
    }
  }
  return std::nullopt;
}

std::optional<EndpointId> Topology::FindEndpoint(
    const std::string& name) const {
  if (name == config_.cluster_address) return cluster_address();
  if (auto h = FindHost(name)) return address(*h);
  return std::nullopt;
}

std::optional<std::size_t> Topology::ServerOrdinal(EndpointId e) const {
  for (std::size_t i = 0; i < servers_.size(); ++i) {
    if (address(servers_[i]) == e) return i;
  }
  return std::nullopt;
}

std::vector<HostId> Topology::HostsWithRole(HostRole role) const {
  std::vector<HostId> out;
  for (std::size_t i = 0; i < hosts_.size(); ++i) {
    if (hosts_[i].role == role) {
      out.push_back(HostId{static_cast<std::uint16_t>(i)});
    }
  }
  return out;
}

Interface Topology::Attachment(HostId h) const {
  return Peer(Interface{DeviceId::Host(h), PortId{0}});
}

namespace {

std::string Describe(const Interface& i, const TopologyConfig& c) {
  std::ostringstream os;
  os << "(" << (i.device.is_host() ? c.hosts[i.device.index].name
                                   : c.switches[i.device.index].name)
     << "," << i.port.v << ")";
  return os.str();
}

}  // namespace

Topology build_topology(const TopologyConfig& config) {
  Topology topo;
  topo.config_ = config;
  topo.hosts_ = config.hosts;
  topo.switches_ = config.switches;

  constexpr auto kMaxIndex = std::numeric_limits<std::uint16_t>::max();
  if (config.hosts.size() >= kMaxIndex || config.switches.size() >= kMaxIndex) {
    throw ConfigError("too many devices");
  }

  std::map<std::string, DeviceId> names;
  for (std::size_t i = 0; i < config.hosts.size(); ++i) {
    const auto& name = config.hosts[i].name;
    if (name.empty()) throw ConfigError("hosts[" + std::to_string(i) + "].name is empty");
    if (!names.emplace(name, DeviceId::Host(HostId{static_cast<std::uint16_t>(i)})).second) {
      throw ConfigError("duplicate device id: " + name);
    }
  }
  for (std::size_t i = 0; i < config.switches.size(); ++i) {
    const auto& sw = config.switches[i];
    if (sw.name.empty()) throw ConfigError("switches[" + std::to_string(i) + "].name is empty");
    for (int p : sw.ports) {
      if (p < 0 || p >= kMaxIndex) {
        throw ConfigError("switches[" + std::to_string(i) + "].ports out of range");
      }
    }
    if (!names.emplace(sw.name, DeviceId::Switch(SwitchId{static_cast<std::uint16_t>(i)})).second) {
      throw ConfigError("duplicate device id: " + sw.name);
    }
  }
  if (names.count(config.cluster_address)) {
    throw ConfigError("cluster_address collides with device id: " +
                      config.cluster_address);
  }

  std::set<Interface> declared;
  for (const auto& [name, dev] : names) {
    if (dev.is_host()) {
      declared.insert(Interface{dev, PortId{0}});
    } else {
      for (int p : config.switches[dev.index].ports) {
        if (!declared.insert(Interface{dev, PortId{static_cast<std::uint16_t>(p)}}).second) {
          throw ConfigError("switch " + name + " declares port " +
                            std::to_string(p) + " twice");
        }
      }
    }
  }

  auto resolve = [&](const TopologyConfig::End& end, std::size_t idx) {
    auto it = names.find(end.device);
    if (it == names.end()) {
      throw ConfigError("links[" + std::to_string(idx) +
                        "] references unknown device: " + end.device);
    }
    Interface i{it->second, PortId{static_cast<std::uint16_t>(
                                std::max(0, std::min<int>(end.port, kMaxIndex)))}};
    if (end.port < 0 || !declared.count(i)) {
      throw ConfigError("links[" + std::to_string(idx) +
                        "] references undeclared port " + end.device + ":" +
                        std::to_string(end.port));
    }
    return i;
  };

  auto add_entry = [&](const Interface& a, const Interface& b) {
    auto [it, inserted] = topo.links_.emplace(a, b);
    if (!inserted && it->second != b) {
      throw ConfigError("non-bijective link set: " + Describe(a, config) +
                        " maps to both " + Describe(it->second, config) +
                        " and " + Describe(b, config));
    }
  };

  for (std::size_t idx = 0; idx < config.links.size(); ++idx) {
    const auto& link = config.links[idx];
    Interface a = resolve(link.from, idx);
    Interface b = resolve(link.to, idx);
    if (a == b) {
      throw ConfigError("links[" + std::to_string(idx) + "] is a self-loop");
    }
    add_entry(a, b);
    if (link.bidirectional) add_entry(b, a);
  }

  for (const auto& [a, b] : topo.links_) {
    auto back = topo.links_.find(b);
    if (back == topo.links_.end() || back->second != a) {
      throw ConfigError("non-bijective link set: " + Describe(a, config) +
                        " -> " + Describe(b, config) + " has no matching reverse");
    }
  }
  for (const auto& i : declared) {
    if (!topo.links_.count(i)) {
      throw ConfigError("dangling port: " + Describe(i, config) +
                        " appears in no link");
    }
  }

  for (std::size_t i = 0; i < topo.hosts_.size(); ++i) {
    if (topo.hosts_[i].role == HostRole::kServer) {
      topo.servers_.push_back(HostId{static_cast<std::uint16_t>(i)});
    }
  }
  return topo;
}

void RequireLoadBalancerRoles(const Topology& topo) {
  if (topo.servers().empty()) {
    throw ConfigError("hosts: the load-balancer workload needs at least one server");
  }
  if (topo.HostsWithRole(HostRole::kClient).empty() &&
      topo.HostsWithRole(HostRole::kDodgyClient).empty()) {
    throw ConfigError("hosts: the load-balancer workload needs at least one client");
  }
  if (topo.HostsWithRole(HostRole::kDodgyClient).size() > 1) {
    throw ConfigError("hosts: at most one dodgy client is supported");
  }
  if (topo.num_switches() != 1) {
    throw ConfigError("switches: the load-balancer controller drives exactly one switch");
  }
  for (HostId h{0}; h.v < topo.num_hosts(); ++h.v) {
    if (!topo.Attachment(h).device.is_switch()) {
      throw ConfigError("links: host " + topo.host_name(h) +
                        " must attach to the switch");
    }
  }
}

WorkloadConfig DefaultWorkload(const Topology& topo) {
  WorkloadConfig w;
  for (HostId h{0}; h.v < topo.num_hosts(); ++h.v) {
    if (topo.host_role(h) == HostRole::kServer) continue;
    w.packets.push_back({topo.host_name(h), topo.config().cluster_address,
                         std::nullopt});
  }
  return w;
}

namespace {

using nlohmann::json;

template <class T>
T Get(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ConfigError(where + "." + key + " is missing");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

HostRole ParseRole(const std::string& s, const std::string& where) {
  if (s == "client") return HostRole::kClient;
  if (s == "dodgy") return HostRole::kDodgyClient;
  if (s == "server") return HostRole::kServer;
  throw ConfigError(where + ".role must be client, dodgy or server");
}

TopologyConfig::End ParseEnd(const json& j, const std::string& where) {
  return {Get<std::string>(j, "device", where), Get<int>(j, "port", where)};
}

}  // namespace

TopologyConfig ParseTopologyConfig(const json& doc) {
  if (!doc.is_object()) throw ConfigError("topology document must be an object");
  TopologyConfig c;
  if (doc.contains("cluster_address")) {
    c.cluster_address = Get<std::string>(doc, "cluster_address", "topology");
  }
  if (!doc.contains("switches") || !doc["switches"].is_array()) {
    throw ConfigError("topology.switches is missing");
  }
  if (!doc.contains("hosts") || !doc["hosts"].is_array()) {
    throw ConfigError("topology.hosts is missing");
  }
  if (!doc.contains("links") || !doc["links"].is_array()) {
    throw ConfigError("topology.links is missing");
  }
  for (std::size_t i = 0; i < doc["switches"].size(); ++i) {
    std::string where = "switches[" + std::to_string(i) + "]";
    const auto& s = doc["switches"][i];
    auto name = Get<std::string>(s, "name", where);
    if (s.contains("ports") && s["ports"].is_array()) {
      c.switches.push_back({name, Get<std::vector<int>>(s, "ports", where)});
    } else {
      c.switches.push_back(TopologyConfig::Switch::WithPorts(name, Get<int>(s, "ports", where)));
    }
  }
  for (std::size_t i = 0; i < doc["hosts"].size(); ++i) {
    std::string where = "hosts[" + std::to_string(i) + "]";
    const auto& h = doc["hosts"][i];
    TopologyConfig::Host host;
    host.name = Get<std::string>(h, "name", where);
    if (h.contains("role")) host.role = ParseRole(Get<std::string>(h, "role", where), where);
    if (h.contains("consumes_received")) {
      host.consumes_received = Get<bool>(h, "consumes_received", where);
    }
    c.hosts.push_back(std::move(host));
  }
  for (std::size_t i = 0; i < doc["links"].size(); ++i) {
    std::string where = "links[" + std::to_string(i) + "]";
    const auto& l = doc["links"][i];
    if (!l.is_object() || !l.contains("from") || !l.contains("to")) {
      throw ConfigError(where + " needs from and to");
    }
    TopologyConfig::Link link{ParseEnd(l["from"], where + ".from"),
                              ParseEnd(l["to"], where + ".to"), true};
    if (l.contains("bidirectional")) {
      link.bidirectional = Get<bool>(l, "bidirectional", where);
    }
    c.links.push_back(std::move(link));
  }
  return c;
}

std::optional<WorkloadConfig> ParseWorkloadConfig(const json& doc) {
  if (!doc.is_object() || !doc.contains("workload")) return std::nullopt;
  const auto& w = doc["workload"];
  if (!w.is_object() || !w.contains("packets") || !w["packets"].is_array()) {
    throw ConfigError("workload.packets is missing");
  }
  WorkloadConfig out;
  for (std::size_t i = 0; i < w["packets"].size(); ++i) {
    std::string where = "workload.packets[" + std::to_string(i) + "]";
    const auto& p = w["packets"][i];
    WorkloadConfig::Send send{Get<std::string>(p, "host", where),
                              Get<std::string>(p, "dst", where), std::nullopt};
    if (p.contains("src")) send.src = Get<std::string>(p, "src", where);
    out.packets.push_back(std::move(send));
  }
  return out;
}

nlohmann::ordered_json ToJson(const TopologyConfig& c,
                              const std::optional<WorkloadConfig>& workload) {
  nlohmann::ordered_json doc;
  doc["cluster_address"] = c.cluster_address;
  doc["switches"] = nlohmann::ordered_json::array();
  for (const auto& s : c.switches) {
    bool contiguous = true;
    for (std::size_t i = 0; i < s.ports.size(); ++i) {
      contiguous = contiguous && s.ports[i] == static_cast<int>(i) + 1;
    }
    if (contiguous) {
      doc["switches"].push_back({{"name", s.name}, {"ports", s.ports.size()}});
    } else {
      doc["switches"].push_back({{"name", s.name}, {"ports", s.ports}});
    }
  }
  doc["hosts"] = nlohmann::ordered_json::array();
  for (const auto& h : c.hosts) {
    nlohmann::ordered_json j{{"name", h.name}, {"role", ToString(h.role)}};
    if (h.consumes_received) j["consumes_received"] = true;
    doc["hosts"].push_back(std::move(j));
  }
  doc["links"] = nlohmann::ordered_json::array();
  for (const auto& l : c.links) {
    nlohmann::ordered_json j{
        {"from", {{"device", l.from.device}, {"port", l.from.port}}},
        {"to", {{"device", l.to.device}, {"port", l.to.port}}}};
    if (!l.bidirectional) j["bidirectional"] = false;
    doc["links"].push_back(std::move(j));
  }
  if (workload) {
    auto& pkts = doc["workload"]["packets"] = nlohmann::ordered_json::array();
    for (const auto& p : workload->packets) {
      nlohmann::ordered_json j{{"host", p.host}, {"dst", p.dst}};
      if (p.src) j["src"] = *p.src;
      pkts.push_back(std::move(j));
    }
  }
  return doc;
}

}  // namespace softflow
