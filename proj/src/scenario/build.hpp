#pragma once

#include "scenario/scenario.hpp"

namespace natlab::scenario {

// A scenario realized as a live network with its coordination agents
// installed.
struct BuiltScenario {
  sim::Network net;
  std::optional<std::string> stun_a;
  std::optional<std::string> stun_b;
  std::optional<std::string> relay;
  std::optional<discovery::RendezvousServer> rendezvous;
  std::vector<std::string> peers;

  // Throws when the scenario lacks the two observation servers and the
  // rendezvous that discovery needs.
  traversal::Services services() const;

  // The pair driven by the punch command: the peers directive, or the first
  // two declared peers.
  std::pair<std::string, std::string> punch_pair(const ScenarioSpec& spec) const;
};

BuiltScenario build_scenario(const ScenarioSpec& spec, std::uint64_t seed);

}  // namespace natlab::scenario
