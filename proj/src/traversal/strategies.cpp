#include "traversal/strategies.hpp"

#include <algorithm>
#include <memory>
#include <set>

namespace natlab::traversal {

using sim::Datagram;
using sim::DeliveryInfo;
using sim::MsgKind;

std::uint64_t chain_created_mappings(const Network& net, NodeId node) {
  std::uint64_t total = 0;
  for (sim::NatId id : net.nat_chain(node)) total += net.nat_device(id).total_created();
  return total;
}

std::uint64_t chain_table_full_rejections(const Network& net, NodeId node) {
  std::uint64_t total = 0;
  for (sim::NatId id : net.nat_chain(node)) total += net.nat_device(id).table_full_rejections();
  return total;
}

namespace {

std::uint64_t fresh_nonce(Network& net, NodeId node) { return net.node_rng(node).next_u64(); }

// Smallest finite idle TTL along the node's chain, if any.
std::optional<SimTime> chain_min_ttl(const Network& net, NodeId node) {
  std::optional<SimTime> ttl;
  for (sim::NatId id : net.nat_chain(node)) {
    SimTime t = net.nat_device(id).config().mapping_ttl;
    if (t == sim::kTimeNever) continue;
    if (!ttl || t < *ttl) ttl = t;
  }
  return ttl;
}

SimTime chain_max_ttl(const Network& net, NodeId node) {
  SimTime ttl = 0;
  for (sim::NatId id : net.nat_chain(node)) {
    SimTime t = net.nat_device(id).config().mapping_ttl;
    if (t == sim::kTimeNever) return sim::kTimeNever;
    ttl = std::max(ttl, t);
  }
  return ttl;
}

struct MappingSampler {
  const Network* net;
  NodeId a, b;
  std::uint64_t before_a, before_b;

  MappingSampler(const Network& n, NodeId na, NodeId nb)
      : net(&n), a(na), b(nb),
        before_a(chain_created_mappings(n, na)),
        before_b(chain_created_mappings(n, nb)) {}

  void fill(PunchStats& stats) const {
    stats.mappings_a = chain_created_mappings(*net, a) - before_a;
    stats.mappings_b = chain_created_mappings(*net, b) - before_b;
  }
};

void finish_from_outcome(TraversalSession& session, const PunchOutcome& outcome, SimTime start,
                         SimTime deadline, const MappingSampler& sampler,
                         FailReason on_timeout = FailReason::Timeout) {
  session.stats().probes_a = outcome.probes_a;
  session.stats().probes_b = outcome.probes_b;
  sampler.fill(session.stats());
  if (outcome.established) {
    session.stats().elapsed = outcome.established_at > start ? outcome.established_at - start : 0;
    session.establish(outcome.hairpin_path ? PathKind::Hairpin : PathKind::Direct, outcome.end_a,
                      outcome.end_b);
  } else {
    session.stats().elapsed = deadline > start ? deadline - start : 0;
    session.fail(on_timeout);
  }
}

std::vector<ProbeStep> periodic_plan(Port port, EndpointAddress target, SimTime start,
                                     SimTime timeout, SimTime interval) {
  std::vector<ProbeStep> plan;
  for (SimTime t = start; t < start + timeout; t += interval) {
    plan.push_back(ProbeStep{t, port, target});
  }
  return plan;
}

}  // namespace

TraversalSession punch_sides(Network& net, const SideSpec& a, const SideSpec& b, Strategy label,
                             SimTime start, SimTime deadline, FailReason on_timeout) {
  TraversalSession session;
  session.set_strategy(label);
  session.to_gathering();
  session.set_nonce(fresh_nonce(net, a.node));
  session.to_punching();
  MappingSampler sampler(net, a.node, b.node);
  auto outcome = run_punch(net, a, b, session.nonce(), deadline);
  finish_from_outcome(session, outcome, start, deadline, sampler, on_timeout);
  return session;
}

TraversalSession simple_punch(Network& net, PeerEndpoint a, PeerEndpoint b, SimTime start,
                              const PunchTiming& timing) {
  if (!a.target.valid() || !b.target.valid()) {
    TraversalSession session;
    session.set_strategy(Strategy::SimplePunch);
    session.to_gathering();
    session.fail(FailReason::NoCandidates);
    return session;
  }
  SideSpec sa{a.node, {a.local_port},
              periodic_plan(a.local_port, a.target, start, timing.timeout, timing.probe_interval)};
  SideSpec sb{b.node, {b.local_port},
              periodic_plan(b.local_port, b.target, start, timing.timeout, timing.probe_interval)};
  return punch_sides(net, sa, sb, Strategy::SimplePunch, start, start + timing.timeout);
}

TraversalSession brute_force_punch(Network& net, NodeId easy_node, Port easy_port,
                                   EndpointAddress easy_reflexive, NodeId hard_node,
                                   Port hard_port, sim::HostId hard_external_host, Port range_lo,
                                   Port range_hi, std::uint32_t pps, SimTime start,
                                   const BruteForceOptions& opts) {
  TraversalSession session;
  session.set_strategy(Strategy::BruteForce);
  session.to_gathering();
  if (!easy_reflexive.valid() || hard_external_host == sim::kUnassignedHost || pps == 0 ||
      range_lo == 0 || range_lo > range_hi) {
    session.fail(FailReason::NoCandidates);
    return session;
  }
  session.set_nonce(fresh_nonce(net, easy_node));
  session.to_punching();

  MappingSampler sampler(net, easy_node, hard_node);

  // Scan plan, paced to the probe budget.
  std::vector<Port> order;
  order.reserve(range_hi - range_lo + 1);
  for (std::uint32_t p = range_lo; p <= range_hi; ++p) order.push_back(static_cast<Port>(p));
  if (opts.randomized_order) {
    auto& rng = net.node_rng(easy_node);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.uniform(i)]);
    }
  }
  SideSpec easy;
  easy.node = easy_node;
  easy.ports = {easy_port};
  easy.plan.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    easy.plan.push_back(ProbeStep{start + (i * sim::kMicrosPerSecond) / pps, easy_port,
                                  EndpointAddress{hard_external_host, order[i]}});
  }
  const SimTime scan_end = easy.plan.back().when;
  const SimTime deadline = scan_end + opts.settle_margin;

  SideSpec hard;
  hard.node = hard_node;
  hard.ports = {hard_port};
  if (opts.hard_sends_initial) {
    hard.plan.push_back(ProbeStep{start, hard_port, easy_reflexive});
    // Keep the scanned mapping alive for the whole sweep.
    if (auto ttl = chain_min_ttl(net, hard_node)) {
      for (SimTime t = start + *ttl / 2; t <= deadline; t += *ttl / 2) {
        hard.plan.push_back(ProbeStep{t, hard_port, easy_reflexive});
      }
    }
  }

  auto outcome = run_punch(net, easy, hard, session.nonce(), deadline);
  finish_from_outcome(session, outcome, start, deadline, sampler);
  return session;
}

TraversalSession birthday_punch(Network& net, const BirthdaySideSpec& a,
                                const BirthdaySideSpec& b, std::uint32_t k, std::uint32_t pps,
                                std::uint32_t chunk, SimTime start, const BirthdayOptions& opts) {
  TraversalSession session;
  session.set_strategy(Strategy::Birthday);
  session.to_gathering();
  if (k == 0 || pps == 0 || a.peer_external_host == sim::kUnassignedHost ||
      b.peer_external_host == sim::kUnassignedHost) {
    session.fail(FailReason::NoCandidates);
    return session;
  }
  session.set_nonce(fresh_nonce(net, a.node));
  session.to_punching();

  MappingSampler sampler(net, a.node, b.node);
  const std::uint64_t full_before_a = chain_table_full_rejections(net, a.node);
  const std::uint64_t full_before_b = chain_table_full_rejections(net, b.node);

  const BirthdaySideSpec* specs[2] = {&a, &b};
  SideSpec sides[2];
  SimTime latest_probe = start;

  for (int s = 0; s < 2; ++s) {
    const BirthdaySideSpec& spec = *specs[s];
    SideSpec& side = sides[s];
    side.node = spec.node;
    auto& rng = net.node_rng(spec.node);

    std::set<Port> bound_ports;
    if (!spec.fresh_ports) {
      side.ports.push_back(spec.fixed_port);
      bound_ports.insert(spec.fixed_port);
    }

    const SimTime ttl = chain_max_ttl(net, spec.node);
    const std::uint32_t per_chunk = chunk == 0 ? k : chunk;
    const std::uint64_t pool_span =
        static_cast<std::uint64_t>(spec.peer_range_hi) - spec.peer_range_lo + 1;
    const SimTime resend_gap = (pool_span * sim::kMicrosPerSecond) / pps;
    const std::uint32_t sends = std::max<std::uint32_t>(1, opts.transmissions);
    SimTime chunk_base = start;
    SimTime chunk_last = start;
    for (std::uint32_t i = 0; i < k; ++i) {
      const std::uint32_t in_chunk = i % per_chunk;
      if (i > 0 && in_chunk == 0) {
        // Wait out the previous chunk's mappings (including their resends)
        // before opening more.
        chunk_base = ttl == sim::kTimeNever ? chunk_last + opts.chunk_gap_extra
                                            : chunk_last + ttl + opts.chunk_gap_extra;
      }
      Port from = spec.fixed_port;
      if (spec.fresh_ports) {
        // Drawn with replacement: distinct mappings come from the (source,
        // destination) key, so budgets beyond the local port range still
        // work; a repeated (port, target) pair just re-samples one lottery
        // ticket.
        from = static_cast<Port>(rng.uniform_in(10000, 39999));
        if (bound_ports.insert(from).second) side.ports.push_back(from);
      }
      Port to = spec.peer_known_port
                    ? *spec.peer_known_port
                    : static_cast<Port>(rng.uniform_in(spec.peer_range_lo, spec.peer_range_hi));
      const SimTime first = chunk_base + (in_chunk * sim::kMicrosPerSecond) / pps;
      for (std::uint32_t r = 0; r < sends; ++r) {
        const SimTime when = first + r * resend_gap;
        side.plan.push_back(ProbeStep{when, from, EndpointAddress{spec.peer_external_host, to}});
        latest_probe = std::max(latest_probe, when);
        chunk_last = std::max(chunk_last, when);
      }
    }
  }

  const SimTime deadline = latest_probe + opts.settle_margin;
  auto outcome = run_punch(net, sides[0], sides[1], session.nonce(), deadline);

  FailReason fail = FailReason::Timeout;
  if (!outcome.established && chunk == 0) {
    if (chain_table_full_rejections(net, a.node) > full_before_a ||
        chain_table_full_rejections(net, b.node) > full_before_b) {
      fail = FailReason::TableFull;
    }
  }
  finish_from_outcome(session, outcome, start, deadline, sampler, fail);
  return session;
}

MappingOutcome request_mapping(Network& net, NodeId peer, const std::string& gateway_nat,
                               Port internal_port, Port requested_port, std::uint32_t lifetime_s,
                               SimTime timeout) {
  MappingOutcome out;
  const auto chain = net.nat_chain(peer);
  const sim::NatId gateway = net.nat_id(gateway_nat);
  if (chain.empty() || chain.front() != gateway) {
    out.status = MappingOutcome::Status::PreconditionViolated;
    return out;
  }

  auto pending = std::make_shared<std::optional<sim::PmpResponseMsg>>();
  net.bind_port(peer, internal_port,
                [pending](Network&, const Datagram& d, const DeliveryInfo&) {
                  if (d.kind != MsgKind::PmpResponse) return;
                  auto resp = sim::decode_pmp_response(d.payload);
                  if (resp) *pending = *resp;
                });

  Datagram req;
  req.src = EndpointAddress{net.node_host(peer), internal_port};
  req.dst = EndpointAddress{net.nat_internal_host(gateway), sim::kPmpPort};
  req.kind = MsgKind::PmpRequest;
  req.payload = sim::encode_pmp_request(internal_port, requested_port, lifetime_s);
  const SimTime sent_at = net.now();
  for (SimTime t = sent_at; t < sent_at + timeout; t += sim::millis(500)) {
    net.schedule_at(t, [pending, peer, req](Network& n) {
      if (!pending->has_value()) n.send(peer, req);
    });
  }

  net.run_until_condition([&] { return pending->has_value(); }, sent_at + timeout);
  net.unbind_port(peer, internal_port);

  if (!pending->has_value()) {
    out.status = MappingOutcome::Status::Timeout;
    return out;
  }
  switch ((*pending)->status) {
    case sim::PmpStatus::Ok:
      out.status = MappingOutcome::Status::Granted;
      out.granted_port = (*pending)->granted_port;
      out.lifetime_s = (*pending)->lifetime_s;
      break;
    case sim::PmpStatus::Unsupported:
      out.status = MappingOutcome::Status::Unsupported;
      break;
    case sim::PmpStatus::NoResources:
      out.status = MappingOutcome::Status::NoResources;
      break;
  }
  return out;
}

TraversalSession hairpin_connect(Network& net, PeerEndpoint a, PeerEndpoint b, SimTime start,
                                 const PunchTiming& timing) {
  TraversalSession session;
  session.set_strategy(Strategy::Hairpin);
  session.to_gathering();

  const auto chain_a = net.nat_chain(a.node);
  const auto chain_b = net.nat_chain(b.node);
  std::vector<sim::NatId> shared;
  for (sim::NatId id : chain_a) {
    if (std::find(chain_b.begin(), chain_b.end(), id) != chain_b.end()) shared.push_back(id);
  }
  if (shared.empty()) {
    session.fail(FailReason::PreconditionViolated);
    return session;
  }
  if (!a.target.valid() || !b.target.valid()) {
    session.fail(FailReason::NoCandidates);
    return session;
  }
  // The loop turns at the outermost shared NAT: the one whose external host
  // the reflexive candidates carry.
  const sim::NatId turn = chain_a.back();
  if (!net.nat_device(turn).config().hairpinning) {
    session.fail(FailReason::HairpinUnsupported);
    return session;
  }

  session.set_nonce(fresh_nonce(net, a.node));
  session.to_punching();
  MappingSampler sampler(net, a.node, b.node);
  SideSpec sa{a.node, {a.local_port},
              periodic_plan(a.local_port, a.target, start, timing.timeout, timing.probe_interval)};
  SideSpec sb{b.node, {b.local_port},
              periodic_plan(b.local_port, b.target, start, timing.timeout, timing.probe_interval)};
  const SimTime deadline = start + timing.timeout;
  auto outcome = run_punch(net, sa, sb, session.nonce(), deadline);
  finish_from_outcome(session, outcome, start, deadline, sampler);
  return session;
}

TraversalSession relay_connect(Network& net, NodeId a, NodeId b, const std::string& relay_node,
                               const RelayOptions& opts) {
  TraversalSession session;
  session.set_strategy(Strategy::Relay);
  session.to_gathering();
  if (!net.has_node(relay_node)) {
    session.fail(FailReason::RelayDown);
    return session;
  }
  const EndpointAddress relay{net.node_host(net.node_id(relay_node)), sim::kRelayPort};
  const std::uint64_t id_a = sim::stable_peer_id(net.node_name(a));
  const std::uint64_t id_b = sim::stable_peer_id(net.node_name(b));
  session.set_nonce(fresh_nonce(net, a));
  session.set_relay_ids(id_a, id_b);
  session.to_punching();

  MappingSampler sampler(net, a, b);
  const SimTime start = net.now();
  RelaySideSpec ra{a, net.ephemeral_port(a), id_a, id_b, {}};
  RelaySideSpec rb{b, net.ephemeral_port(b), id_b, id_a, {}};
  for (SimTime t = start; t < start + opts.timeout; t += opts.probe_interval) {
    ra.probe_times.push_back(t);
    rb.probe_times.push_back(t);
  }
  const SimTime deadline = start + opts.timeout;
  auto outcome = run_relay_punch(net, ra, rb, relay, session.nonce(), deadline);

  session.stats().probes_a = outcome.probes_a;
  session.stats().probes_b = outcome.probes_b;
  sampler.fill(session.stats());
  if (outcome.established) {
    session.stats().elapsed = outcome.established_at - start;
    session.establish(PathKind::Relayed, outcome.end_a, outcome.end_b);
  } else {
    session.stats().elapsed = opts.timeout;
    session.fail(FailReason::RelayDown);
  }
  return session;
}

void keepalive(Network& net, const TraversalSession& session, SimTime interval, SimTime until) {
  if (!session.established()) return;
  const SessionEnd ends[2] = {session.end_a(), session.end_b()};
  const sim::HostId hosts[2] = {net.node_host(ends[0].node), net.node_host(ends[1].node)};
  const std::uint64_t ids[2] = {session.relay_id_a(), session.relay_id_b()};
  const bool relayed = session.path() == PathKind::Relayed;
  const std::uint64_t nonce = session.nonce();

  for (int s = 0; s < 2; ++s) {
    const SessionEnd end = ends[s];
    const sim::HostId host = hosts[s];
    const std::uint64_t own = ids[s];
    const std::uint64_t peer = ids[1 - s];
    for (SimTime t = net.now() + interval; t <= until; t += interval) {
      net.schedule_at(t, [end, host, nonce, relayed, own, peer](Network& n) {
        Datagram d;
        d.src = EndpointAddress{host, end.port};
        d.dst = end.remote;
        if (relayed) {
          d.kind = MsgKind::RelayForward;
          d.payload = sim::encode_relay_forward(own, peer, MsgKind::Probe,
                                                sim::encode_nonce(nonce));
        } else {
          d.kind = MsgKind::Probe;
          d.payload = sim::encode_nonce(nonce);
        }
        n.send(end.node, std::move(d));
      });
    }
  }
}

bool session_send_app(Network& net, TraversalSession& session, bool from_a,
                      const sim::Bytes& payload, SimTime timeout) {
  if (!session.established()) return false;
  const SessionEnd& from = from_a ? session.end_a() : session.end_b();
  const SessionEnd& to = from_a ? session.end_b() : session.end_a();
  const bool relayed = session.path() == PathKind::Relayed;
  const std::uint64_t own = from_a ? session.relay_id_a() : session.relay_id_b();
  const std::uint64_t peer = from_a ? session.relay_id_b() : session.relay_id_a();

  auto delivered = std::make_shared<bool>(false);
  net.bind_port(to.node, to.port,
                [delivered, payload, relayed, peer](Network&, const Datagram& d,
                                                    const DeliveryInfo&) {
                  if (relayed) {
                    if (d.kind != MsgKind::RelayForward) return;
                    auto env = sim::decode_relay_forward(d.payload);
                    if (env && env->inner_kind == MsgKind::App && env->inner_payload == payload &&
                        env->sender_id != peer) {
                      *delivered = true;
                    }
                    return;
                  }
                  if (d.kind == MsgKind::App && d.payload == payload) *delivered = true;
                });

  Datagram d;
  d.src = EndpointAddress{net.node_host(from.node), from.port};
  d.dst = from.remote;
  if (relayed) {
    d.kind = MsgKind::RelayForward;
    d.payload = sim::encode_relay_forward(own, peer, MsgKind::App, payload);
  } else {
    d.kind = MsgKind::App;
    d.payload = payload;
  }
  const MsgKind sent_kind = d.kind;
  const std::size_t trace_before = net.trace().size();
  const SimTime sent_at = net.now();
  net.send(from.node, std::move(d));

  net.run_until_condition([&] { return *delivered; }, sent_at + timeout);
  net.unbind_port(to.node, to.port);

  if (!*delivered) {
    for (std::size_t i = trace_before; i < net.trace().size(); ++i) {
      const auto& e = net.trace()[i];
      if (e.type == sim::TraceType::Drop && e.kind == sent_kind &&
          e.cause == sim::DropCause::Filtered) {
        session.degrade(FailReason::MappingExpired);
        break;
      }
    }
  }
  return *delivered;
}

}  // namespace natlab::traversal
