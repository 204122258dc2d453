#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>

#include "discovery/stun.hpp"

namespace natlab::discovery {

// Rendezvous server: stores registered candidate sets and, per peer pair,
// schedules one agreed punch start strictly in the future.
class RendezvousServer {
 public:
  static RendezvousServer install(Network& net, const std::string& node);

  bool has_registration(std::uint64_t peer_id) const;
  std::optional<SimTime> registration_time(std::uint64_t peer_id) const;
  std::optional<sim::WireCandidates> registered_candidates(std::uint64_t peer_id) const;
  EndpointAddress endpoint() const { return endpoint_; }

 private:
  struct Record {
    sim::WireCandidates candidates;
    SimTime registered_at = 0;
  };
  struct State {
    std::map<std::uint64_t, Record> records;
    std::map<std::pair<std::uint64_t, std::uint64_t>, SimTime> pair_start;
  };

  std::shared_ptr<State> state_;
  EndpointAddress endpoint_;
};

// Stable peer id derived from the node name.
std::uint64_t peer_id_of(const std::string& node_name);

// Sends a registration and waits until the server holds it.
bool register_peer(Network& net, const RendezvousServer& server, NodeId client, Port local_port,
                   std::uint64_t peer_id, const sim::WireCandidates& candidates,
                   SimTime timeout = sim::seconds(3));

struct ExchangeOutcome {
  sim::ExchangeStatus status = sim::ExchangeStatus::Ok;
  sim::WireCandidates peer_candidates;
  SimTime punch_start = 0;
};

// Asks the server for the counterpart's candidates and the agreed start.
// Returns nothing on timeout.
std::optional<ExchangeOutcome> exchange(Network& net, const RendezvousServer& server,
                                        NodeId client, Port local_port, std::uint64_t own_id,
                                        std::uint64_t peer_id, SimTime timeout = sim::seconds(3));

}  // namespace natlab::discovery
