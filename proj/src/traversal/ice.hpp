#pragma once

#include <optional>
#include <string>
#include <vector>

#include "discovery/classify.hpp"
#include "discovery/rendezvous.hpp"
#include "traversal/strategies.hpp"

namespace natlab::traversal {

// Coordination infrastructure reachable by both peers.
struct Services {
  std::string stun_a;
  std::string stun_b;
  discovery::RendezvousServer rendezvous;
  std::optional<std::string> relay;
};

struct PeerDiscovery {
  NodeId node = -1;
  sim::HostId host = 0;
  std::vector<sim::NatId> chain;  // innermost first
  std::optional<nat::NatClassName> nat_class;
  SimTime server_rtt = 0;

  bool conclusive() const { return nat_class.has_value(); }
  bool open() const { return nat_class && *nat_class == nat::NatClassName::OpenInternet; }
  // The composite mapping behavior a remote observes: endpoint-dependent if
  // any NAT on the chain is.
  bool edm() const { return nat_class && *nat_class == nat::NatClassName::Symmetric; }
};

// Classifies the peer and measures its round trip to the coordination server.
PeerDiscovery discover_peer(sim::Network& net, const std::string& node, const Services& services);

// One gathering round for a peer pair: fresh sockets, reflexive discovery,
// registration, candidate exchange. Targets carry the exchanged reflexive
// candidates; punch_start is the rendezvous-agreed time.
struct GatheredEndpoints {
  bool ok = false;
  PeerEndpoint a, b;
  SimTime punch_start = 0;
};
GatheredEndpoints gather_candidates(sim::Network& net, NodeId a, NodeId b,
                                    const Services& services);

struct IcePolicy {
  std::vector<Strategy> allowed = strategy_ladder();
  std::uint32_t pps = 57000;
  std::optional<std::uint32_t> birthday_k;  // overrides the computed budget
  double birthday_target = 0.999;
  std::uint32_t chunk = 0;  // 0 = min(k, max_mappings/2)
  SimTime punch_timeout = sim::seconds(10);
  SimTime probe_interval = sim::millis(200);

  bool allows(Strategy s) const;
};

struct AttemptRecord {
  Strategy strategy;
  bool success = false;
  FailReason reason = FailReason::None;
};

struct IceOutcome {
  TraversalSession session;
  std::optional<Strategy> chosen;
  std::vector<AttemptRecord> attempts;
  PunchStats cumulative;
};

// Walks the strategy ladder in preference order, attempting each allowed and
// applicable rung, and returns the first success with cumulative statistics.
IceOutcome ice_connect(sim::Network& net, const PeerDiscovery& a, const PeerDiscovery& b,
                       const Services& services, const IcePolicy& policy = {});

}  // namespace natlab::traversal
