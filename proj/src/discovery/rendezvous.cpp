#include "discovery/rendezvous.hpp"

#include <algorithm>

namespace natlab::discovery {

using sim::Datagram;
using sim::DeliveryInfo;
using sim::ExchangeStatus;
using sim::MsgKind;
using sim::Network;

RendezvousServer RendezvousServer::install(Network& net, const std::string& node) {
  RendezvousServer server;
  server.state_ = std::make_shared<State>();
  const NodeId id = net.node_id(node);
  const sim::HostId host = net.node_host(id);
  server.endpoint_ = EndpointAddress{host, sim::kRendezvousPort};

  auto state = server.state_;
  net.bind_port(id, sim::kRendezvousPort, [state, id, host](Network& n, const Datagram& d,
                                                            const DeliveryInfo& info) {
    if (d.kind == MsgKind::Register) {
      auto msg = sim::decode_register(d.payload);
      if (!msg) return;
      state->records[msg->peer_id] = Record{msg->candidates, info.time};
      return;
    }
    if (d.kind != MsgKind::Exchange) return;
    auto req = sim::decode_exchange_request(d.payload);
    if (!req) return;

    Datagram resp;
    resp.src = EndpointAddress{host, sim::kRendezvousPort};
    resp.dst = d.src;
    resp.kind = MsgKind::Exchange;

    auto peer_it = state->records.find(req->peer_id);
    if (peer_it == state->records.end() || !state->records.count(req->own_id)) {
      resp.payload = sim::encode_exchange_response(ExchangeStatus::UnknownPeer, req->peer_id,
                                                   sim::WireCandidates{}, 0);
      n.send(id, std::move(resp));
      return;
    }

    const Record& own = state->records[req->own_id];
    const Record& peer = peer_it->second;
    auto pair_key = std::minmax(req->own_id, req->peer_id);
    SimTime& start = state->pair_start[{pair_key.first, pair_key.second}];
    if (start == 0 || start <= info.time) {
      const SimTime worst_rtt =
          std::max(own.candidates.server_rtt_us, peer.candidates.server_rtt_us);
      start = std::max(own.registered_at, peer.registered_at) + 2 * worst_rtt;
      if (start <= info.time) start = info.time + 2 * worst_rtt + sim::millis(1);
    }

    resp.payload =
        sim::encode_exchange_response(ExchangeStatus::Ok, req->peer_id, peer.candidates, start);
    n.send(id, std::move(resp));
  });

  return server;
}

bool RendezvousServer::has_registration(std::uint64_t peer_id) const {
  return state_->records.count(peer_id) > 0;
}

std::optional<SimTime> RendezvousServer::registration_time(std::uint64_t peer_id) const {
  auto it = state_->records.find(peer_id);
  if (it == state_->records.end()) return std::nullopt;
  return it->second.registered_at;
}

std::optional<sim::WireCandidates> RendezvousServer::registered_candidates(
    std::uint64_t peer_id) const {
  auto it = state_->records.find(peer_id);
  if (it == state_->records.end()) return std::nullopt;
  return it->second.candidates;
}

std::uint64_t peer_id_of(const std::string& node_name) {
  return sim::stable_peer_id(node_name);
}

bool register_peer(Network& net, const RendezvousServer& server, NodeId client, Port local_port,
                   std::uint64_t peer_id, const sim::WireCandidates& candidates, SimTime timeout) {
  Datagram reg;
  reg.src = EndpointAddress{net.node_host(client), local_port};
  reg.dst = server.endpoint();
  reg.kind = MsgKind::Register;
  reg.payload = sim::encode_register(peer_id, candidates);
  // "Landed" means a registration stamped at or after this call, so
  // re-registrations refresh rather than being swallowed by the old record.
  const SimTime sent_at = net.now();
  auto landed = [server, peer_id, sent_at] {
    auto at = server.registration_time(peer_id);
    return at.has_value() && *at >= sent_at;
  };
  for (SimTime t = sent_at; t < sent_at + timeout; t += sim::millis(500)) {
    net.schedule_at(t, [landed, client, reg](Network& n) {
      if (!landed()) n.send(client, reg);
    });
  }
  return net.run_until_condition(landed, sent_at + timeout);
}

std::optional<ExchangeOutcome> exchange(Network& net, const RendezvousServer& server,
                                        NodeId client, Port local_port, std::uint64_t own_id,
                                        std::uint64_t peer_id, SimTime timeout) {
  auto pending = std::make_shared<std::optional<ExchangeOutcome>>();
  const EndpointAddress from_server = server.endpoint();
  net.bind_port(client, local_port,
                [pending, from_server, peer_id](Network&, const Datagram& d,
                                                const DeliveryInfo&) {
                  if (d.kind != MsgKind::Exchange || d.src != from_server) return;
                  auto resp = sim::decode_exchange_response(d.payload);
                  if (!resp || resp->peer_id != peer_id) return;
                  *pending = ExchangeOutcome{resp->status, resp->candidates, resp->punch_start_us};
                });

  Datagram req;
  req.src = EndpointAddress{net.node_host(client), local_port};
  req.dst = server.endpoint();
  req.kind = MsgKind::Exchange;
  req.payload = sim::encode_exchange_request(own_id, peer_id);
  const SimTime sent_at = net.now();
  for (SimTime t = sent_at; t < sent_at + timeout; t += sim::millis(500)) {
    net.schedule_at(t, [pending, client, req](Network& n) {
      if (!pending->has_value()) n.send(client, req);
    });
  }

  net.run_until_condition([&] { return pending->has_value(); }, sent_at + timeout);
  net.unbind_port(client, local_port);
  return *pending;
}

}  // namespace natlab::discovery
