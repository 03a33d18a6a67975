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

#ifndef SOFTFLOW_TOPOLOGY_HH_
#define SOFTFLOW_TOPOLOGY_HH_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "softflow/types.hh"

namespace softflow {

enum class HostRole : std::uint8_t { kClient, kDodgyClient, kServer };

const char* ToString(HostRole role);

/// Unvalidated topology description, as read from a configuration document.
struct TopologyConfig {
  struct Host {
    std::string name;
    HostRole role = HostRole::kClient;
    // When set, recv(h, pkt) is enabled and consumes pkt from rcvq.
    bool consumes_received = false;
  };

  struct Switch {
    std::string name;
    std::vector<int> ports;

    /// Ports 1..n, the usual numbering.
    static Switch WithPorts(std::string name, int n);
  };

  struct End {
    std::string device;
    int port = 0;
  };

  /// A directed entry of the interface map. Unless `bidirectional` is false
  /// the reverse entry is implied.
  struct Link {
    End from;
    End to;
    bool bidirectional = true;
  };

  std::vector<Switch> switches;
  std::vector<Host> hosts;
  std::vector<Link> links;
  std::string cluster_address = "cluster";
};

/// Packets each host holds in its send buffer at the initial state.
struct WorkloadConfig {
  struct Send {
    std::string host;
    std::string dst;
    std::optional<std::string> src;  // defaults to the sending host
  };

  std::vector<Send> packets;
};

/// A validated network: devices, the interface map and host roles.
///
/// Hosts own a single port 0; switches declare their ports. Host h has
/// address h and the cluster address is `num_hosts()`.
class Topology {
 public:
  std::size_t num_hosts() const { return hosts_.size(); }
  std::size_t num_switches() const { return switches_.size(); }

  const std::string& host_name(HostId h) const { return hosts_.at(h.v).name; }
  HostRole host_role(HostId h) const { return hosts_.at(h.v).role; }
  bool consumes_received(HostId h) const {
    return hosts_.at(h.v).consumes_received;
  }
  const std::string& switch_name(SwitchId s) const {
    return switches_.at(s.v).name;
  }
  const std::vector<int>& switch_ports(SwitchId s) const {
    return switches_.at(s.v).ports;
  }

  /// The interface map. Total on declared interfaces, an involution.
  Interface Peer(const Interface& i) const;
  std::optional<Interface> PeerIfLinked(const Interface& i) const;
  const std::map<Interface, Interface>& links() const { return links_; }

  EndpointId address(HostId h) const { return EndpointId{h.v}; }
  EndpointId cluster_address() const {
    return EndpointId{static_cast<std::uint16_t>(hosts_.size())};
  }
  std::size_t num_endpoints() const { return hosts_.size() + 1; }
  std::string endpoint_name(EndpointId e) const;

  std::optional<HostId> FindHost(const std::string& name) const;
  std::optional<SwitchId> FindSwitch(const std::string& name) const;
  std::optional<EndpointId> FindEndpoint(const std::string& name) const;

  /// Hosts with the server role, in host order. A server's ordinal is its
  /// position in this list.
  const std::vector<HostId>& servers() const { return servers_; }
  std::optional<std::size_t> ServerOrdinal(EndpointId e) const;
  std::vector<HostId> HostsWithRole(HostRole role) const;

  /// The interface a host is plugged into.
  Interface Attachment(HostId h) const;

  const TopologyConfig& config() const { return config_; }

 private:
  friend Topology build_topology(const TopologyConfig& config);

  TopologyConfig config_;
  std::vector<TopologyConfig::Host> hosts_;
  std::vector<TopologyConfig::Switch> switches_;
  std::map<Interface, Interface> links_;
  std::vector<HostId> servers_;
};

/// Validates `config` and builds the interface map. Throws ConfigError on a
/// non-bijective link set, a dangling or unlinked port, or a duplicate name.
Topology build_topology(const TopologyConfig& config);

/// Rejects topologies the built-in load-balancer scenario cannot run on.
void RequireLoadBalancerRoles(const Topology& topo);

/// Default workload: every client (dodgy or not) sends one packet to the
/// cluster address.
WorkloadConfig DefaultWorkload(const Topology& topo);

// JSON documents. A topology document carries an optional "workload" member;
// when absent the default workload applies.

TopologyConfig ParseTopologyConfig(const nlohmann::json& doc);
std::optional<WorkloadConfig> ParseWorkloadConfig(const nlohmann::json& doc);
nlohmann::ordered_json ToJson(const TopologyConfig& config,
                              const std::optional<WorkloadConfig>& workload);

}  // namespace softflow

#endif /* SOFTFLOW_TOPOLOGY_HH_ */
