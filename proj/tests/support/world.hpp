#pragma once

// Two-peer punch topologies with coordination servers, for the traversal and
// acceptance suites.

#include <string>
#include <vector>

#include "discovery/rendezvous.hpp"
#include "discovery/stun.hpp"
#include "traversal/ice.hpp"
#include "traversal/punch.hpp"

namespace testworld {

using natlab::nat::NatConfig;
using natlab::sim::Network;
using natlab::traversal::Services;

struct WorldSpec {
  std::vector<NatConfig> chain_a;  // innermost first; empty = public peer
  std::vector<NatConfig> chain_b;
  bool shared_outer = false;  // both chains end in one shared box (config from chain_a.back())
  bool with_relay = false;
  std::uint64_t seed = 1;
};

struct PunchWorld {
  Network net;
  Services services;

  natlab::sim::NodeId pa() const { return net.node_id("pa"); }
  natlab::sim::NodeId pb() const { return net.node_id("pb"); }
};

inline PunchWorld make_punch_world(const WorldSpec& spec) {
  natlab::sim::TopologySpec topo;
  topo.seed = spec.seed;

  auto add_chain = [&](const std::vector<NatConfig>& chain, const std::string& prefix,
                       std::optional<std::string> outermost_parent) {
    std::optional<std::string> parent = outermost_parent;
    std::vector<std::string> names;
    for (std::size_t i = chain.size(); i-- > 0;) {
      const std::string name = prefix + std::to_string(i);
      topo.nats.push_back({name, chain[i], parent});
      parent = name;
      names.push_back(name);
    }
    return parent;  // innermost, what the peer attaches to
  };

  std::optional<std::string> shared;
  auto chain_a = spec.chain_a;
  auto chain_b = spec.chain_b;
  if (spec.shared_outer) {
    topo.nats.push_back({"shared", chain_a.back(), std::nullopt});
    shared = "shared";
    chain_a.pop_back();
    if (!chain_b.empty()) chain_b.pop_back();
  }

  auto behind_a = add_chain(chain_a, "nat_a", shared);
  auto behind_b = add_chain(chain_b, "nat_b", shared);
  topo.nodes.push_back({"pa", behind_a, std::nullopt});
  topo.nodes.push_back({"pb", behind_b, std::nullopt});
  topo.nodes.push_back({"stun1", std::nullopt, std::nullopt});
  topo.nodes.push_back({"stun2", std::nullopt, std::nullopt});
  topo.nodes.push_back({"rdv", std::nullopt, std::nullopt});
  if (spec.with_relay) topo.nodes.push_back({"relay", std::nullopt, std::nullopt});

  auto net = natlab::sim::build_network(topo);
  natlab::discovery::install_stun_pair(net, "stun1", "stun2");
  auto rendezvous = natlab::discovery::RendezvousServer::install(net, "rdv");
  if (spec.with_relay) natlab::traversal::install_relay(net, "relay");

  PunchWorld world{std::move(net),
                   Services{"stun1", "stun2", rendezvous,
                            spec.with_relay ? std::optional<std::string>("relay") : std::nullopt}};
  return world;
}

// Config shorthands.
inline NatConfig eim_cone(natlab::nat::FilteringBehavior f =
                              natlab::nat::FilteringBehavior::AddressAndPortDependent) {
  NatConfig cfg;
  cfg.mapping = natlab::nat::MappingBehavior::EndpointIndependent;
  cfg.filtering = f;
  cfg.port_alloc = natlab::nat::PortAllocPolicy::Random;
  return cfg;
}

inline NatConfig symmetric() {
  NatConfig cfg;
  cfg.mapping = natlab::nat::MappingBehavior::AddressAndPortDependent;
  cfg.filtering = natlab::nat::FilteringBehavior::AddressAndPortDependent;
  cfg.port_alloc = natlab::nat::PortAllocPolicy::Random;
  return cfg;
}

}  // namespace testworld
