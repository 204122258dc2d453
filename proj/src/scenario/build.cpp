#include "scenario/build.hpp"

namespace natlab::scenario {

traversal::Services BuiltScenario::services() const {
  if (!stun_a || !stun_b) {
    throw sim::BuildError("scenario needs two stun nodes for discovery");
  }
  if (!rendezvous) {
    throw sim::BuildError("scenario needs a rendezvous node");
  }
  return traversal::Services{*stun_a, *stun_b, *rendezvous, relay};
}

std::pair<std::string, std::string> BuiltScenario::punch_pair(const ScenarioSpec& spec) const {
  if (spec.punch_peers) return *spec.punch_peers;
  if (peers.size() < 2) {
    throw sim::BuildError("scenario needs two peer nodes (or a peers directive)");
  }
  return {peers[0], peers[1]};
}

BuiltScenario build_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
  BuiltScenario built{sim::build_network(spec.topology(seed)), {}, {}, {}, {}, {}};

  std::vector<std::string> stuns = spec.server_names(NodeKind::Stun);
  if (stuns.size() >= 2) {
    built.stun_a = stuns[0];
    built.stun_b = stuns[1];
    discovery::install_stun_pair(built.net, stuns[0], stuns[1]);
    for (std::size_t i = 2; i < stuns.size(); ++i) {
      discovery::install_stun_server(built.net, stuns[i]);
    }
  } else if (stuns.size() == 1) {
    built.stun_a = stuns[0];
    discovery::install_stun_server(built.net, stuns[0]);
  }

  auto rdvs = spec.server_names(NodeKind::Rendezvous);
  if (!rdvs.empty()) {
    built.rendezvous = discovery::RendezvousServer::install(built.net, rdvs[0]);
  }
  auto relays = spec.server_names(NodeKind::Relay);
  if (!relays.empty()) {
    built.relay = relays[0];
    traversal::install_relay(built.net, relays[0]);
  }

  built.peers = spec.peer_names();
  return built;
}

}  // namespace natlab::scenario
