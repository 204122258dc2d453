#pragma once

#include <optional>
#include <string>

#include "sim/network.hpp"

namespace natlab::discovery {

using sim::EndpointAddress;
using sim::Network;
using sim::NodeId;
using sim::Port;
using sim::SimTime;

// The public IP:port a server observed for a client.
struct MappedAddress {
  EndpointAddress reflexive;
  SimTime observed_at = 0;
  EndpointAddress server;
};

struct CandidateSet {
  EndpointAddress local;
  std::optional<MappedAddress> reflexive;
};

// Installs an address-observation server on the node. It answers binding
// requests with the source endpoint it saw and honors alternate-reply
// requests from its primary and alternate ports.
void install_stun_server(Network& net, const std::string& node);

// Installs two cooperating servers; mode-2 alternate replies from either are
// sent by the companion, giving classification a never-contacted host.
void install_stun_pair(Network& net, const std::string& node_a, const std::string& node_b);

EndpointAddress stun_endpoint(const Network& net, const std::string& server_node);

struct StunOutcome {
  MappedAddress mapped;
  SimTime rtt = 0;
};

// Sends a binding request from (client, local_port) and waits for the reply.
// Returns nothing on timeout. Creates or refreshes NAT mappings on the path,
// like any outbound datagram.
std::optional<StunOutcome> stun_bind(Network& net, NodeId client, Port local_port,
                                     EndpointAddress server, SimTime timeout = sim::seconds(3));

}  // namespace natlab::discovery
