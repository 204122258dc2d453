#include "traversal/ice.hpp"

#include <algorithm>
#include <cmath>

namespace natlab::traversal {

using discovery::stun_bind;
using discovery::stun_endpoint;
using sim::Network;

bool IcePolicy::allows(Strategy s) const {
  return std::find(allowed.begin(), allowed.end(), s) != allowed.end();
}

PeerDiscovery discover_peer(Network& net, const std::string& node, const Services& services) {
  PeerDiscovery d;
  d.node = net.node_id(node);
  d.host = net.node_host(d.node);
  d.chain = net.nat_chain(d.node);
  d.nat_class = discovery::classify_nat(net, d.node, services.stun_a, services.stun_b);

  const Port probe_port = net.ephemeral_port(d.node);
  if (auto bound = stun_bind(net, d.node, probe_port, stun_endpoint(net, services.stun_a))) {
    d.server_rtt = bound->rtt;
  }
  return d;
}

GatheredEndpoints gather_candidates(Network& net, NodeId a, NodeId b,
                                    const Services& services) {
  GatheredEndpoints g;
  const Port pa = net.ephemeral_port(a);
  const Port pb = net.ephemeral_port(b);

  auto bind_a = stun_bind(net, a, pa, stun_endpoint(net, services.stun_a));
  auto bind_b = stun_bind(net, b, pb, stun_endpoint(net, services.stun_a));
  if (!bind_a || !bind_b) return g;

  const std::uint64_t id_a = sim::stable_peer_id(net.node_name(a));
  const std::uint64_t id_b = sim::stable_peer_id(net.node_name(b));

  sim::WireCandidates ca;
  ca.local = sim::EndpointAddress{net.node_host(a), pa};
  ca.reflexive = bind_a->mapped.reflexive;
  ca.server_rtt_us = static_cast<std::uint32_t>(bind_a->rtt);
  sim::WireCandidates cb;
  cb.local = sim::EndpointAddress{net.node_host(b), pb};
  cb.reflexive = bind_b->mapped.reflexive;
  cb.server_rtt_us = static_cast<std::uint32_t>(bind_b->rtt);

  if (!discovery::register_peer(net, services.rendezvous, a, pa, id_a, ca) ||
      !discovery::register_peer(net, services.rendezvous, b, pb, id_b, cb)) {
    return g;
  }
  auto ex_a = discovery::exchange(net, services.rendezvous, a, pa, id_a, id_b);
  auto ex_b = discovery::exchange(net, services.rendezvous, b, pb, id_b, id_a);
  if (!ex_a || !ex_b || ex_a->status != sim::ExchangeStatus::Ok ||
      ex_b->status != sim::ExchangeStatus::Ok) {
    return g;
  }

  g.ok = ex_a->peer_candidates.reflexive.has_value() &&
         ex_b->peer_candidates.reflexive.has_value();
  if (!g.ok) return g;
  g.a = PeerEndpoint{a, pa, *ex_a->peer_candidates.reflexive};
  g.b = PeerEndpoint{b, pb, *ex_b->peer_candidates.reflexive};
  g.punch_start = std::max(ex_a->punch_start, ex_b->punch_start);
  return g;
}

namespace {

// Allocator pool of the peer's outermost NAT: the port space remote probes
// have to guess in.
std::pair<Port, Port> outer_pool(const Network& net, const PeerDiscovery& p) {
  if (p.chain.empty()) return {1, 65535};
  const auto& cfg = net.nat_device(p.chain.back()).config();
  return {cfg.port_lo, cfg.port_hi};
}

std::uint32_t birthday_budget(const IcePolicy& policy, bool both_edm, std::uint32_t pool_size) {
  if (policy.birthday_k) return *policy.birthday_k;
  const double target = std::min(policy.birthday_target, 0.999999);
  const double lam = -std::log1p(-target);
  const double p = static_cast<double>(pool_size);
  // Double collision needs k ~ P*sqrt(lam); a single-sided collision only
  // k ~ sqrt(P*lam).
  const double k = both_edm ? p * std::sqrt(lam) : std::sqrt(p * lam);
  return static_cast<std::uint32_t>(std::ceil(k));
}

TraversalSession attempt_direct(Network& net, const PeerDiscovery& a, const PeerDiscovery& b,
                                const IcePolicy& policy) {
  const Port pa = net.ephemeral_port(a.node);
  const Port pb = net.ephemeral_port(b.node);
  PeerEndpoint ea{a.node, pa, sim::EndpointAddress{b.host, pb}};
  PeerEndpoint eb{b.node, pb, sim::EndpointAddress{a.host, pa}};
  const SimTime start = net.now() + sim::millis(10);
  SideSpec sa{ea.node, {pa}, {}};
  SideSpec sb{eb.node, {pb}, {}};
  const SimTime timeout = sim::seconds(2);
  for (SimTime t = start; t < start + timeout; t += policy.probe_interval) {
    sa.plan.push_back(ProbeStep{t, pa, ea.target});
    sb.plan.push_back(ProbeStep{t, pb, eb.target});
  }
  return punch_sides(net, sa, sb, Strategy::Direct, start, start + timeout);
}

TraversalSession attempt_port_mapping(Network& net, const PeerDiscovery& a,
                                      const PeerDiscovery& b, const IcePolicy& policy) {
  // Try each side with a single-hop gateway; carrier chains cannot be mapped.
  std::optional<TraversalSession> last_failure;
  const PeerDiscovery* order[2] = {&a, &b};
  for (const PeerDiscovery* mapped : order) {
    const PeerDiscovery* prober = mapped == &a ? &b : &a;
    if (mapped->chain.size() != 1) continue;

    const Port internal = net.ephemeral_port(mapped->node);
    const std::string gateway = net.nat_device(mapped->chain.front()).name();
    auto grant = request_mapping(net, mapped->node, gateway, internal, internal, 3600);
    if (grant.status != MappingOutcome::Status::Granted) continue;

    const sim::HostId gw_host = net.nat_device(mapped->chain.front()).external_host();
    const Port prober_port = net.ephemeral_port(prober->node);
    const SimTime start = net.now() + sim::millis(10);
    const SimTime timeout = sim::seconds(5);

    SideSpec mapped_side{mapped->node, {internal}, {}};  // passive: answers probes
    SideSpec prober_side{prober->node, {prober_port}, {}};
    for (SimTime t = start; t < start + timeout; t += policy.probe_interval) {
      prober_side.plan.push_back(
          ProbeStep{t, prober_port, sim::EndpointAddress{gw_host, grant.granted_port}});
    }
    // Keep argument order (a, b) stable for stats.
    TraversalSession session =
        mapped == &a ? punch_sides(net, mapped_side, prober_side, Strategy::PortMapping, start,
                                   start + timeout)
                     : punch_sides(net, prober_side, mapped_side, Strategy::PortMapping, start,
                                   start + timeout);
    if (session.established()) return session;
    last_failure = std::move(session);
  }
  if (last_failure) return std::move(*last_failure);

  TraversalSession session;
  session.set_strategy(Strategy::PortMapping);
  session.to_gathering();
  session.fail(FailReason::NoCandidates);
  return session;
}

TraversalSession attempt_birthday(Network& net, const PeerDiscovery& a, const PeerDiscovery& b,
                                  const Services& services, const IcePolicy& policy) {
  auto g = gather_candidates(net, a.node, b.node, services);
  if (!g.ok) {
    TraversalSession session;
    session.set_strategy(Strategy::Birthday);
    session.to_gathering();
    session.fail(FailReason::NoCandidates);
    return session;
  }

  const auto pool_a = outer_pool(net, a);
  const auto pool_b = outer_pool(net, b);
  const bool both_edm = a.edm() && b.edm();
  const std::uint32_t pool_size =
      std::max<std::uint32_t>(pool_a.second - pool_a.first + 1, pool_b.second - pool_b.first + 1);
  const std::uint32_t k = birthday_budget(policy, both_edm, pool_size);

  std::uint32_t chunk = policy.chunk;
  if (chunk == 0) {
    std::size_t cap = 65535;
    for (const auto* p : {&a, &b}) {
      for (sim::NatId id : p->chain) {
        cap = std::min(cap, net.nat_device(id).config().max_mappings);
      }
    }
    chunk = static_cast<std::uint32_t>(std::min<std::size_t>(k, std::max<std::size_t>(1, cap / 2)));
  }

  BirthdaySideSpec sa;
  sa.node = a.node;
  sa.fresh_ports = a.edm();
  sa.fixed_port = g.a.local_port;
  sa.peer_external_host = g.a.target.host;
  sa.peer_range_lo = pool_b.first;
  sa.peer_range_hi = pool_b.second;
  if (!b.edm()) sa.peer_known_port = g.a.target.port;

  BirthdaySideSpec sb;
  sb.node = b.node;
  sb.fresh_ports = b.edm();
  sb.fixed_port = g.b.local_port;
  sb.peer_external_host = g.b.target.host;
  sb.peer_range_lo = pool_a.first;
  sb.peer_range_hi = pool_a.second;
  if (!a.edm()) sb.peer_known_port = g.b.target.port;

  return birthday_punch(net, sa, sb, k, policy.pps, chunk, g.punch_start);
}

TraversalSession attempt_brute_force(Network& net, const PeerDiscovery& a, const PeerDiscovery& b,
                                     const Services& services, const IcePolicy& policy) {
  auto g = gather_candidates(net, a.node, b.node, services);
  if (!g.ok) {
    TraversalSession session;
    session.set_strategy(Strategy::BruteForce);
    session.to_gathering();
    session.fail(FailReason::NoCandidates);
    return session;
  }
  const bool a_is_hard = a.edm();
  const PeerDiscovery& hard = a_is_hard ? a : b;
  const PeerEndpoint& easy_ep = a_is_hard ? g.b : g.a;
  const PeerEndpoint& hard_ep = a_is_hard ? g.a : g.b;
  const auto pool = outer_pool(net, hard);
  // The easy side's reflexive endpoint is what the hard side's single probe
  // must anchor to; the scan sweeps the hard pool.
  const sim::EndpointAddress easy_reflexive = hard_ep.target;
  const sim::HostId hard_host = easy_ep.target.host;
  return brute_force_punch(net, easy_ep.node, easy_ep.local_port, easy_reflexive, hard_ep.node,
                           hard_ep.local_port, hard_host, pool.first, pool.second, policy.pps,
                           g.punch_start);
}

}  // namespace

IceOutcome ice_connect(Network& net, const PeerDiscovery& a, const PeerDiscovery& b,
                       const Services& services, const IcePolicy& policy) {
  IceOutcome out;
  bool relay_attempted = false;
  // Cumulative mapping consumption spans the whole run, gathering included.
  const std::uint64_t mappings_before_a = chain_created_mappings(net, a.node);
  const std::uint64_t mappings_before_b = chain_created_mappings(net, b.node);

  const bool shares_nat = [&] {
    for (sim::NatId id : a.chain) {
      if (std::find(b.chain.begin(), b.chain.end(), id) != b.chain.end()) return true;
    }
    return false;
  }();

  for (Strategy s : strategy_ladder()) {
    if (!policy.allows(s)) continue;

    bool applicable = false;
    switch (s) {
      case Strategy::Direct: applicable = a.open() && b.open(); break;
      case Strategy::PortMapping:
        applicable = a.chain.size() == 1 || b.chain.size() == 1;
        break;
      case Strategy::SimplePunch: applicable = true; break;
      case Strategy::BruteForce: applicable = a.edm() != b.edm(); break;
      case Strategy::Birthday: applicable = a.edm() || b.edm(); break;
      case Strategy::Hairpin: applicable = shares_nat; break;
      case Strategy::Relay: applicable = services.relay.has_value(); break;
    }
    if (!applicable) continue;

    TraversalSession session;
    switch (s) {
      case Strategy::Direct:
        session = attempt_direct(net, a, b, policy);
        break;
      case Strategy::PortMapping:
        session = attempt_port_mapping(net, a, b, policy);
        break;
      case Strategy::SimplePunch: {
        auto g = gather_candidates(net, a.node, b.node, services);
        if (!g.ok) {
          session.set_strategy(Strategy::SimplePunch);
          session.to_gathering();
          session.fail(FailReason::NoCandidates);
          break;
        }
        session = simple_punch(net, g.a, g.b, g.punch_start,
                               PunchTiming{policy.probe_interval, policy.punch_timeout});
        break;
      }
      case Strategy::BruteForce:
        session = attempt_brute_force(net, a, b, services, policy);
        break;
      case Strategy::Birthday:
        session = attempt_birthday(net, a, b, services, policy);
        break;
      case Strategy::Hairpin: {
        auto g = gather_candidates(net, a.node, b.node, services);
        if (!g.ok) {
          session.set_strategy(Strategy::Hairpin);
          session.to_gathering();
          session.fail(FailReason::NoCandidates);
          break;
        }
        session = hairpin_connect(net, g.a, g.b, g.punch_start,
                                  PunchTiming{policy.probe_interval, policy.punch_timeout});
        break;
      }
      case Strategy::Relay:
        relay_attempted = true;
        session = relay_connect(net, a.node, b.node, *services.relay);
        break;
    }

    out.cumulative += session.stats();
    out.attempts.push_back(AttemptRecord{s, session.established(), session.reason()});
    if (session.established()) {
      out.chosen = s;
      out.cumulative.mappings_a = chain_created_mappings(net, a.node) - mappings_before_a;
      out.cumulative.mappings_b = chain_created_mappings(net, b.node) - mappings_before_b;
      out.session = std::move(session);
      out.session.stats() = out.cumulative;
      return out;
    }
  }

  out.session.set_strategy(Strategy::Relay);
  out.session.to_gathering();
  out.session.fail(relay_attempted ? FailReason::RelayDown : FailReason::AllStrategiesExhausted);
  out.cumulative.mappings_a = chain_created_mappings(net, a.node) - mappings_before_a;
  out.cumulative.mappings_b = chain_created_mappings(net, b.node) - mappings_before_b;
  out.session.stats() = out.cumulative;
  return out;
}

}  // namespace natlab::traversal
