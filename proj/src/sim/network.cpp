#include "sim/network.hpp"

#include <algorithm>
#include <cassert>

namespace natlab::sim {

Network Network::build(const TopologySpec& spec) {
  Network net;
  net.root_seed_ = spec.seed;

  // Name uniqueness across nodes and NATs (links reference either).
  for (const auto& n : spec.nodes) {
    if (net.node_index_.count(n.name) || net.nat_index_.count(n.name)) {
      throw BuildError("duplicate node name: " + n.name);
    }
    net.node_index_[n.name] = static_cast<int>(net.nodes_.size());
    net.nodes_.push_back({});
    net.nodes_.back().name = n.name;
  }
  for (const auto& n : spec.nats) {
    if (net.node_index_.count(n.name) || net.nat_index_.count(n.name)) {
      throw BuildError("duplicate node name: " + n.name);
    }
    net.nat_index_[n.name] = static_cast<int>(net.nats_.size());
    net.nats_.push_back({});
  }

  // Host assignment: explicit ids are honored, the rest are drawn from an
  // increasing counter, in declaration order.
  std::set<HostId> used;
  for (const auto& n : spec.nodes) {
    if (n.host) used.insert(*n.host);
  }
  for (const auto& n : spec.nats) {
    if (n.config.external_host != kUnassignedHost) used.insert(n.config.external_host);
  }
  HostId next_host = 1;
  auto fresh_host = [&] {
    while (used.count(next_host)) ++next_host;
    used.insert(next_host);
    return next_host;
  };

  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    net.nodes_[i].host = spec.nodes[i].host ? *spec.nodes[i].host : fresh_host();
    net.nodes_[i].rng = std::make_unique<RandomStream>(
        derive_seed(spec.seed, "node:" + spec.nodes[i].name));
  }
  for (std::size_t j = 0; j < spec.nats.size(); ++j) {
    nat::NatConfig cfg = spec.nats[j].config;
    if (cfg.external_host == kUnassignedHost) cfg.external_host = fresh_host();
    if (cfg.port_lo == 0 || cfg.port_lo > cfg.port_hi) {
      throw BuildError("invalid port range on NAT: " + spec.nats[j].name);
    }
    if (cfg.max_mappings < 1) {
      throw BuildError("max_mappings must be >= 1 on NAT: " + spec.nats[j].name);
    }
    net.nats_[j].device = std::make_unique<nat::NatDevice>(
        spec.nats[j].name, cfg, derive_seed(spec.seed, "nat:" + spec.nats[j].name));
    net.nats_[j].internal_host = fresh_host();
  }

  // Parent wiring.
  auto resolve_nat = [&](const std::string& name, const std::string& who) {
    auto it = net.nat_index_.find(name);
    if (it == net.nat_index_.end()) {
      throw BuildError(who + " references unknown NAT: " + name);
    }
    return it->second;
  };
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    if (spec.nodes[i].behind) {
      net.nodes_[i].parent = resolve_nat(*spec.nodes[i].behind, "node " + spec.nodes[i].name);
    }
  }
  for (std::size_t j = 0; j < spec.nats.size(); ++j) {
    if (spec.nats[j].behind) {
      net.nats_[j].parent = resolve_nat(*spec.nats[j].behind, "nat " + spec.nats[j].name);
    }
  }

  // Nesting must form a forest.
  for (std::size_t j = 0; j < spec.nats.size(); ++j) {
    int cursor = static_cast<int>(j);
    std::size_t steps = 0;
    while (cursor != kInternetDomain) {
      cursor = net.nats_[cursor].parent;
      if (++steps > spec.nats.size()) {
        throw BuildError("cycle in NAT nesting involving: " + spec.nats[j].name);
      }
    }
  }

  // Routing tables per domain.
  auto place = [&](int domain, HostId host, Target t, const std::string& name) {
    auto [it, inserted] = net.domain_hosts_[domain].emplace(host, t);
    if (!inserted) throw BuildError("host id collision in one domain at: " + name);
  };
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    place(net.nodes_[i].parent, net.nodes_[i].host,
          Target{Target::Kind::Node, static_cast<int>(i)}, spec.nodes[i].name);
  }
  for (std::size_t j = 0; j < spec.nats.size(); ++j) {
    place(net.nats_[j].parent, net.nats_[j].device->external_host(),
          Target{Target::Kind::NatDescend, static_cast<int>(j)}, spec.nats[j].name);
    place(static_cast<int>(j), net.nats_[j].internal_host,
          Target{Target::Kind::NatService, static_cast<int>(j)}, spec.nats[j].name);
  }

  // Declared links.
  auto entity_key_of = [&](const std::string& name) -> int {
    if (auto it = net.node_index_.find(name); it != net.node_index_.end()) {
      return node_key(it->second);
    }
    if (auto it = net.nat_index_.find(name); it != net.nat_index_.end()) {
      return nat_key(it->second);
    }
    throw BuildError("link references unknown node: " + name);
  };
  for (const auto& l : spec.links) {
    int ka = entity_key_of(l.a);
    int kb = entity_key_of(l.b);
    auto key = std::minmax(ka, kb);
    auto [it, inserted] = net.links_.emplace(std::pair<int, int>{key.first, key.second}, LinkState{});
    if (!inserted) throw BuildError("duplicate link between " + l.a + " and " + l.b);
    it->second.profile = l.profile;
    it->second.declared = true;
    ++net.declared_links_;
  }
  net.default_link_ = spec.default_link;

  for (auto& [key, link] : net.links_) {
    link.label = net.entity_name(key.first) + "|" + net.entity_name(key.second);
    link.loss_rng = std::make_unique<RandomStream>(derive_seed(spec.seed, "link:" + link.label));
  }

  return net;
}

NodeId Network::node_id(const std::string& name) const {
  auto it = node_index_.find(name);
  if (it == node_index_.end()) throw BuildError("unknown node: " + name);
  return it->second;
}

NatId Network::nat_id(const std::string& name) const {
  auto it = nat_index_.find(name);
  if (it == nat_index_.end()) throw BuildError("unknown NAT: " + name);
  return it->second;
}

bool Network::has_node(const std::string& name) const { return node_index_.count(name) > 0; }

std::vector<NatId> Network::nat_chain(NodeId id) const {
  std::vector<NatId> chain;
  int cursor = nodes_[id].parent;
  while (cursor != kInternetDomain) {
    chain.push_back(cursor);
    cursor = nats_[cursor].parent;
  }
  return chain;
}

void Network::bind_port(NodeId id, Port port, DatagramHandler handler) {
  nodes_[id].handlers[port] = std::move(handler);
}

void Network::unbind_port(NodeId id, Port port) { nodes_[id].handlers.erase(port); }

Port Network::ephemeral_port(NodeId id) {
  auto& node = nodes_[id];
  for (int guard = 0; guard < 65536; ++guard) {
    Port p = node.next_ephemeral;
    node.next_ephemeral = node.next_ephemeral >= 64999 ? 40000 : node.next_ephemeral + 1;
    if (!node.handlers.count(p)) return p;
  }
  throw std::runtime_error("no free ephemeral port on node " + node.name);
}

const std::string& Network::entity_name(int key) const {
  if (key % 2 == 0) return nodes_[key / 2].name;
  return nats_[key / 2].device->name();
}

void Network::record(TraceType type, const Datagram& d, DropCause cause) {
  TraceEvent e;
  e.time_us = now_;
  e.type = type;
  e.src = d.src;
  e.dst = d.dst;
  e.kind = d.kind;
  e.seq = trace_.size();
  e.cause = cause;
  trace_.push_back(e);
}

Network::LinkState& Network::link_between(int key_a, int key_b) {
  auto key = std::minmax(key_a, key_b);
  auto [it, inserted] = links_.try_emplace({key.first, key.second});
  if (inserted) {
    it->second.profile = default_link_;
    it->second.label = entity_name(key.first) + "|" + entity_name(key.second);
    it->second.loss_rng =
        std::make_unique<RandomStream>(derive_seed(root_seed_, "link:" + it->second.label));
  }
  return it->second;
}

void Network::schedule_hop(int from_key, int to_key, Hop hop) {
  LinkState& link = link_between(from_key, to_key);
  const int dir = from_key <= to_key ? 0 : 1;
  link.stats[dir].entered++;

  if (link.profile.loss_rate > 0 && link.loss_rng->chance(link.profile.loss_rate)) {
    link.stats[dir].lost++;
    record(TraceType::Drop, hop.dgram, DropCause::Loss);
    return;
  }

  SimTime departure = now_;
  if (link.profile.rate_cap_pps) {
    Pacer& pacer = link.pacer[dir];
    SimTime next_slot = pacer.base + (pacer.count * kMicrosPerSecond) / *link.profile.rate_cap_pps;
    if (now_ >= next_slot) {
      pacer.base = now_;
      pacer.count = 0;
      next_slot = now_;
    }
    pacer.count++;
    departure = next_slot;
  }

  link.stats[dir].forwarded++;
  QueuedEvent ev;
  ev.time = departure + link.profile.latency_us;
  ev.seq = next_seq_++;
  ev.hop = std::move(hop);
  queue_.insert(std::move(ev));
}

void Network::dispatch_in_domain(int domain, int from_key, Datagram d, bool hairpinned) {
  auto dit = domain_hosts_.find(domain);
  const Target* target = nullptr;
  if (dit != domain_hosts_.end()) {
    auto hit = dit->second.find(d.dst.host);
    if (hit != dit->second.end()) target = &hit->second;
  }

  if (!target) {
    if (domain == kInternetDomain) {
      record(TraceType::Drop, d, DropCause::Unroutable);
      return;
    }
    // Nothing owns the host here; the packet leaves the stub domain upward.
    Hop hop;
    hop.nat = domain;
    hop.inbound = false;
    hop.dgram = std::move(d);
    hop.hairpinned = hairpinned;
    schedule_hop(from_key, nat_key(domain), std::move(hop));
    return;
  }

  Hop hop;
  hop.dgram = std::move(d);
  hop.hairpinned = hairpinned;
  int to_key;
  switch (target->kind) {
    case Target::Kind::Node:
      hop.node = target->index;
      to_key = node_key(target->index);
      break;
    case Target::Kind::NatDescend:
      hop.nat = target->index;
      hop.inbound = true;
      to_key = nat_key(target->index);
      break;
    case Target::Kind::NatService:
      hop.nat = target->index;
      hop.service = true;
      to_key = nat_key(target->index);
      break;
    default:
      return;
  }
  schedule_hop(from_key, to_key, std::move(hop));
}

void Network::send(NodeId origin, Datagram d) {
  const NodeState& node = nodes_[origin];
  if (d.src.host != node.host) {
    throw std::invalid_argument("datagram source host does not belong to node " + node.name);
  }
  if (d.src.port == 0) {
    throw std::invalid_argument("datagram source port must be nonzero");
  }
  record(TraceType::Send, d);
  if (!d.dst.valid()) {
    record(TraceType::Drop, d, DropCause::Unroutable);
    return;
  }
  dispatch_in_domain(node.parent, node_key(origin), std::move(d), false);
}

void Network::send(const std::string& origin, Datagram d) { send(node_id(origin), std::move(d)); }

void Network::schedule_at(SimTime when, TimerFn fn) {
  QueuedEvent ev;
  ev.time = when < now_ ? now_ : when;
  ev.seq = next_seq_++;
  ev.timer = std::move(fn);
  queue_.insert(std::move(ev));
}

void Network::handle_gateway_service(int nat_index, const Datagram& d) {
  if (d.kind != MsgKind::PmpRequest) return;
  auto req = decode_pmp_request(d.payload);
  if (!req) return;

  auto& ns = nats_[nat_index];
  auto grant = ns.device->grant_static_mapping(EndpointAddress{d.src.host, req->internal_port},
                                               req->requested_port, req->lifetime_s, now_);
  PmpStatus status = PmpStatus::Ok;
  switch (grant.status) {
    case nat::NatDevice::PmpResult::Status::Ok: status = PmpStatus::Ok; break;
    case nat::NatDevice::PmpResult::Status::Unsupported: status = PmpStatus::Unsupported; break;
    case nat::NatDevice::PmpResult::Status::NoResources: status = PmpStatus::NoResources; break;
  }

  Datagram resp;
  resp.src = EndpointAddress{ns.internal_host, kPmpPort};
  resp.dst = d.src;
  resp.kind = MsgKind::PmpResponse;
  resp.payload = encode_pmp_response(status, grant.granted_port, grant.lifetime_s);
  record(TraceType::Send, resp);
  dispatch_in_domain(nat_index, nat_key(nat_index), std::move(resp), false);
}

std::optional<TraceEvent> Network::process_nat_hop(Hop& hop) {
  auto& ns = nats_[hop.nat];
  nat::NatDevice& device = *ns.device;

  if (hop.service) {
    record(TraceType::Deliver, hop.dgram);
    TraceEvent delivered = trace_.back();
    handle_gateway_service(hop.nat, hop.dgram);
    return delivered;
  }

  if (hop.inbound) {
    auto inside = device.translate_inbound(hop.dgram, now_);
    if (!inside) {
      record(TraceType::Drop, hop.dgram, DropCause::Filtered);
      return trace_.back();
    }
    dispatch_in_domain(hop.nat, nat_key(hop.nat), std::move(*inside), hop.hairpinned);
    return std::nullopt;
  }

  auto out = device.translate_outbound(hop.dgram, now_);
  switch (out.status) {
    case nat::NatDevice::OutboundResult::Status::TableFull:
      record(TraceType::Drop, hop.dgram, DropCause::TableFull);
      return trace_.back();
    case nat::NatDevice::OutboundResult::Status::PortExhausted:
      record(TraceType::Drop, hop.dgram, DropCause::PortExhausted);
      return trace_.back();
    case nat::NatDevice::OutboundResult::Status::Ok:
      break;
  }

  if (out.hairpin) {
    if (!device.config().hairpinning) {
      record(TraceType::Drop, out.translated, DropCause::HairpinUnsupported);
      return trace_.back();
    }
    auto inside = device.translate_inbound(out.translated, now_);
    if (!inside) {
      record(TraceType::Drop, out.translated, DropCause::Filtered);
      return trace_.back();
    }
    dispatch_in_domain(hop.nat, nat_key(hop.nat), std::move(*inside), true);
    return std::nullopt;
  }

  dispatch_in_domain(ns.parent, nat_key(hop.nat), std::move(out.translated), hop.hairpinned);
  return std::nullopt;
}

std::optional<TraceEvent> Network::process_hop(Hop& hop) {
  if (hop.nat >= 0) return process_nat_hop(hop);

  record(TraceType::Deliver, hop.dgram);
  TraceEvent delivered = trace_.back();
  auto& node = nodes_[hop.node];
  auto hit = node.handlers.find(hop.dgram.dst.port);
  if (hit != node.handlers.end()) {
    DeliveryInfo info{now_, hop.hairpinned};
    DatagramHandler handler = hit->second;  // handler may unbind itself
    handler(*this, hop.dgram, info);
  }
  return delivered;
}

std::optional<TraceEvent> Network::step() {
  if (queue_.empty()) return std::nullopt;
  auto node = queue_.extract(queue_.begin());
  QueuedEvent& ev = node.value();
  assert(ev.time >= now_);
  now_ = ev.time;

  if (ev.hop) return process_hop(*ev.hop);

  const std::size_t before = trace_.size();
  ev.timer(*this);
  // Surface any deliver/drop the timer produced synchronously.
  for (std::size_t i = before; i < trace_.size(); ++i) {
    if (trace_[i].type != TraceType::Send) return trace_[i];
  }
  return std::nullopt;
}

EventTrace Network::run_until(SimTime limit) {
  if (limit < now_) throw std::invalid_argument("run_until limit precedes current clock");
  const std::size_t before = trace_.size();
  while (!queue_.empty() && queue_.begin()->time <= limit) step();
  if (limit != kTimeNever && limit > now_) now_ = limit;
  return EventTrace(trace_.begin() + static_cast<std::ptrdiff_t>(before), trace_.end());
}

EventTrace Network::run_all() {
  const std::size_t before = trace_.size();
  while (!queue_.empty()) step();
  return EventTrace(trace_.begin() + static_cast<std::ptrdiff_t>(before), trace_.end());
}

bool Network::run_until_condition(const std::function<bool()>& pred, SimTime deadline) {
  while (!pred()) {
    if (queue_.empty() || queue_.begin()->time > deadline) {
      if (deadline != kTimeNever && deadline > now_) now_ = deadline;
      return pred();
    }
    step();
  }
  return true;
}

std::map<std::string, std::pair<LinkDirStats, LinkDirStats>> Network::link_stats() const {
  std::map<std::string, std::pair<LinkDirStats, LinkDirStats>> out;
  for (const auto& [key, link] : links_) {
    out[link.label] = {link.stats[0], link.stats[1]};
  }
  return out;
}

}  // namespace natlab::sim
