#include "discovery/stun.hpp"

#include <memory>

namespace natlab::discovery {

using sim::AltReplyMode;
using sim::Datagram;
using sim::DeliveryInfo;
using sim::MsgKind;

namespace {

// One server node; optionally knows a companion that sends mode-2 replies.
void install_server_impl(Network& net, const std::string& node,
                         std::optional<std::string> companion) {
  const NodeId id = net.node_id(node);
  const sim::HostId host = net.node_host(id);
  const std::optional<NodeId> companion_id =
      companion ? std::optional<NodeId>(net.node_id(*companion)) : std::nullopt;
  const std::optional<sim::HostId> companion_host =
      companion_id ? std::optional<sim::HostId>(net.node_host(*companion_id)) : std::nullopt;

  auto respond = [id](Network& n, EndpointAddress from, EndpointAddress to) {
    Datagram resp;
    resp.src = from;
    resp.dst = to;
    resp.kind = MsgKind::StunResponse;
    resp.payload = sim::encode_stun_response(to);
    n.send(id, std::move(resp));
  };

  net.bind_port(id, sim::kStunPort,
                [=](Network& n, const Datagram& d, const DeliveryInfo&) {
                  if (d.kind == MsgKind::StunRequest) {
                    respond(n, EndpointAddress{host, sim::kStunPort}, d.src);
                    return;
                  }
                  if (d.kind != MsgKind::AltReplyRequest) return;
                  auto mode = sim::decode_alt_reply_request(d.payload);
                  if (!mode) return;
                  switch (*mode) {
                    case AltReplyMode::Same:
                      respond(n, EndpointAddress{host, sim::kStunPort}, d.src);
                      break;
                    case AltReplyMode::AltPort:
                      respond(n, EndpointAddress{host, sim::kStunAltPort}, d.src);
                      break;
                    case AltReplyMode::AltHost:
                      // Out-of-band coordination with the companion server; the
                      // reply originates there.
                      if (companion_id) {
                        Datagram resp;
                        resp.src = EndpointAddress{*companion_host, sim::kStunPort};
                        resp.dst = d.src;
                        resp.kind = MsgKind::StunResponse;
                        resp.payload = sim::encode_stun_response(d.src);
                        n.send(*companion_id, std::move(resp));
                      }
                      break;
                  }
                });
}

}  // namespace

void install_stun_server(Network& net, const std::string& node) {
  install_server_impl(net, node, std::nullopt);
}

void install_stun_pair(Network& net, const std::string& node_a, const std::string& node_b) {
  install_server_impl(net, node_a, node_b);
  install_server_impl(net, node_b, node_a);
}

EndpointAddress stun_endpoint(const Network& net, const std::string& server_node) {
  return EndpointAddress{net.node_host(net.node_id(server_node)), sim::kStunPort};
}

std::optional<StunOutcome> stun_bind(Network& net, NodeId client, Port local_port,
                                     EndpointAddress server, SimTime timeout) {
  struct Pending {
    bool done = false;
    EndpointAddress reflexive;
    SimTime at = 0;
  };
  auto pending = std::make_shared<Pending>();

  const EndpointAddress local{net.node_host(client), local_port};
  net.bind_port(client, local_port,
                [pending, server](Network&, const Datagram& d, const DeliveryInfo& info) {
                  if (d.kind != MsgKind::StunResponse || d.src != server) return;
                  auto observed = sim::decode_stun_response(d.payload);
                  if (!observed) return;
                  pending->done = true;
                  pending->reflexive = *observed;
                  pending->at = info.time;
                });

  const SimTime sent_at = net.now();
  Datagram req;
  req.src = local;
  req.dst = server;
  req.kind = MsgKind::StunRequest;
  // Plain UDP request/response: retransmit until answered or out of time.
  for (SimTime t = sent_at; t < sent_at + timeout; t += sim::millis(500)) {
    net.schedule_at(t, [pending, client, req](Network& n) {
      if (!pending->done) n.send(client, req);
    });
  }

  net.run_until_condition([&] { return pending->done; }, sent_at + timeout);
  net.unbind_port(client, local_port);
  if (!pending->done) return std::nullopt;

  StunOutcome out;
  out.mapped = MappedAddress{pending->reflexive, pending->at, server};
  out.rtt = pending->at - sent_at;
  return out;
}

}  // namespace natlab::discovery
