#include "discovery/classify.hpp"

#include <memory>

namespace natlab::discovery {

using sim::AltReplyMode;
using sim::Datagram;
using sim::DeliveryInfo;
using sim::MsgKind;
using nat::NatClassName;

namespace {

// Sends an alternate-reply request to `server` and reports whether a response
// from `expected_src` got through the client's NAT.
bool alt_reply_delivered(Network& net, NodeId client, Port local_port, EndpointAddress server,
                         AltReplyMode mode, EndpointAddress expected_src, SimTime timeout) {
  auto seen = std::make_shared<bool>(false);
  net.bind_port(client, local_port,
                [seen, expected_src](Network&, const Datagram& d, const DeliveryInfo&) {
                  if (d.kind == MsgKind::StunResponse && d.src == expected_src) *seen = true;
                });

  Datagram req;
  req.src = EndpointAddress{net.node_host(client), local_port};
  req.dst = server;
  req.kind = MsgKind::AltReplyRequest;
  req.payload = sim::encode_alt_reply_request(mode);
  const SimTime sent_at = net.now();
  net.send(client, std::move(req));

  net.run_until_condition([&] { return *seen; }, sent_at + timeout);
  net.unbind_port(client, local_port);
  return *seen;
}

}  // namespace

std::optional<NatClassName> classify_nat(Network& net, NodeId client, const std::string& server_a,
                                         const std::string& server_b,
                                         const ClassifyOptions& opts) {
  const EndpointAddress srv_a = stun_endpoint(net, server_a);
  const EndpointAddress srv_b = stun_endpoint(net, server_b);

  // Mapping test: the same local port bound against two server hosts. A
  // changing external endpoint means the mapping is destination-keyed.
  const Port mapping_port = net.ephemeral_port(client);
  auto seen_a = stun_bind(net, client, mapping_port, srv_a, opts.probe_timeout);
  if (!seen_a) return std::nullopt;
  if (seen_a->mapped.reflexive == EndpointAddress{net.node_host(client), mapping_port}) {
    return NatClassName::OpenInternet;
  }
  auto seen_b = stun_bind(net, client, mapping_port, srv_b, opts.probe_timeout);
  if (!seen_b) return std::nullopt;
  if (seen_a->mapped.reflexive != seen_b->mapped.reflexive) return NatClassName::Symmetric;

  // Filtering tests run on a fresh port so the mapping has spoken only to
  // server A; whether replies from elsewhere pass orders the cone classes.
  const Port filter_port = net.ephemeral_port(client);
  if (alt_reply_delivered(net, client, filter_port, srv_a, AltReplyMode::AltHost,
                          EndpointAddress{srv_b.host, sim::kStunPort}, opts.probe_timeout)) {
    return NatClassName::FullCone;
  }
  if (alt_reply_delivered(net, client, filter_port, srv_a, AltReplyMode::AltPort,
                          EndpointAddress{srv_a.host, sim::kStunAltPort}, opts.probe_timeout)) {
    return NatClassName::RestrictedCone;
  }
  // Baseline sanity: if even a same-endpoint reply cannot make it back, the
  // negative results above are unordered.
  if (alt_reply_delivered(net, client, filter_port, srv_a, AltReplyMode::Same, srv_a,
                          opts.probe_timeout)) {
    return NatClassName::PortRestrictedCone;
  }
  return std::nullopt;
}

}  // namespace natlab::discovery
