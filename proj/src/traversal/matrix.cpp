#include "traversal/matrix.hpp"

namespace natlab::traversal {

using sim::Network;
using sim::TopologySpec;

MatrixResult run_interop_matrix(const std::vector<CarrierSpec>& carriers, const IcePolicy& policy,
                                std::uint64_t seed) {
  if (carriers.size() < 2) {
    throw std::invalid_argument("interop matrix needs at least 2 carrier configs");
  }

  MatrixResult result;
  for (const auto& c : carriers) result.carriers.push_back(c.name);
  const std::size_t n = carriers.size();
  result.cells.assign(n, std::vector<MatrixCell>(n));
  const bool with_relay = policy.allows(Strategy::Relay);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      TopologySpec spec;
      spec.seed = sim::derive_seed(seed, "cell:" + std::to_string(i) + "," + std::to_string(j));
      spec.nats.push_back({"carrier_a", carriers[i].config, std::nullopt});
      spec.nats.push_back({"carrier_b", carriers[j].config, std::nullopt});
      spec.nodes.push_back({"phone_a", "carrier_a", std::nullopt});
      spec.nodes.push_back({"phone_b", "carrier_b", std::nullopt});
      spec.nodes.push_back({"stun1", std::nullopt, std::nullopt});
      spec.nodes.push_back({"stun2", std::nullopt, std::nullopt});
      spec.nodes.push_back({"rdv", std::nullopt, std::nullopt});
      if (with_relay) spec.nodes.push_back({"relay", std::nullopt, std::nullopt});

      Network net = sim::build_network(spec);
      discovery::install_stun_pair(net, "stun1", "stun2");
      Services services{"stun1", "stun2", discovery::RendezvousServer::install(net, "rdv"),
                        with_relay ? std::optional<std::string>("relay") : std::nullopt};
      if (with_relay) install_relay(net, "relay");

      auto da = discover_peer(net, "phone_a", services);
      auto db = discover_peer(net, "phone_b", services);
      auto outcome = ice_connect(net, da, db, services, policy);

      MatrixCell& cell = result.cells[i][j];
      cell.established = outcome.session.established();
      cell.strategy = outcome.chosen.value_or(Strategy::SimplePunch);
      cell.reason = outcome.session.reason();
      ++result.total;
      if (cell.established) ++result.successes;
    }
  }

  for (std::size_t c = 0; c < n; ++c) {
    bool any = false;
    for (std::size_t k = 0; k < n; ++k) {
      any = any || result.cells[c][k].established || result.cells[k][c].established;
    }
    if (any) ++result.interoperable;
  }
  return result;
}

}  // namespace natlab::traversal
