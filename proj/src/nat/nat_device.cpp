#include "nat/nat_device.hpp"

#include <algorithm>

namespace natlab::nat {

const char* nat_class_name(NatClassName c) {
  switch (c) {
    case NatClassName::OpenInternet: return "open_internet";
    case NatClassName::FullCone: return "full_cone";
    case NatClassName::RestrictedCone: return "restricted_cone";
    case NatClassName::PortRestrictedCone: return "port_restricted_cone";
    case NatClassName::Symmetric: return "symmetric";
  }
  return "unknown";
}

NatClassName classify_config(MappingBehavior m, FilteringBehavior f) {
  if (m == MappingBehavior::AddressAndPortDependent) return NatClassName::Symmetric;
  switch (f) {
    case FilteringBehavior::EndpointIndependent: return NatClassName::FullCone;
    case FilteringBehavior::AddressDependent: return NatClassName::RestrictedCone;
    case FilteringBehavior::AddressAndPortDependent: return NatClassName::PortRestrictedCone;
  }
  return NatClassName::PortRestrictedCone;
}

void NatDevice::FreePortSet::init(Port lo, Port hi) {
  lo_ = lo;
  span_ = static_cast<std::uint32_t>(hi) - lo + 1;
  free_count_ = span_;
  tree_.assign(span_ + 1, 0);
  free_.assign(span_ + 1, true);
  // Everything starts free, so each tree node simply spans its range.
  for (std::uint32_t i = 1; i <= span_; ++i) {
    tree_[i] = static_cast<std::int32_t>(i & (~i + 1));
  }
  top_bit_ = 1;
  while (top_bit_ * 2 <= span_) top_bit_ *= 2;
}

void NatDevice::FreePortSet::add(std::uint32_t index, int delta) {
  for (; index <= span_; index += index & (~index + 1)) {
    tree_[index] += delta;
  }
}

void NatDevice::FreePortSet::take(Port p) {
  const std::uint32_t index = static_cast<std::uint32_t>(p) - lo_ + 1;
  if (!free_[index]) return;
  free_[index] = false;
  add(index, -1);
  --free_count_;
}

void NatDevice::FreePortSet::release(Port p) {
  const std::uint32_t index = static_cast<std::uint32_t>(p) - lo_ + 1;
  if (free_[index]) return;
  free_[index] = true;
  add(index, 1);
  ++free_count_;
}

Port NatDevice::FreePortSet::nth_free(std::uint32_t rank) const {
  std::uint32_t pos = 0;
  std::int32_t remaining = static_cast<std::int32_t>(rank) + 1;
  for (std::uint32_t step = top_bit_; step > 0; step >>= 1) {
    const std::uint32_t next = pos + step;
    if (next <= span_ && tree_[next] < remaining) {
      pos = next;
      remaining -= tree_[next];
    }
  }
  return static_cast<Port>(lo_ + pos);  // pos is the index just before the hit
}

std::uint32_t NatDevice::FreePortSet::free_below(Port p) const {
  if (p <= lo_) return 0;
  std::uint32_t index = std::min<std::uint32_t>(static_cast<std::uint32_t>(p) - lo_, span_);
  std::uint32_t sum = 0;
  for (; index > 0; index -= index & (~index + 1)) {
    sum += static_cast<std::uint32_t>(tree_[index]);
  }
  return sum;
}

NatDevice::NatDevice(std::string name, NatConfig config, std::uint64_t rng_seed)
    : name_(std::move(name)),
      config_(config),
      rng_(rng_seed),
      seq_next_(config.sequential_start) {
  pool_.init(config.port_lo, config.port_hi);
}

SimTime NatDevice::entry_deadline(const MappingEntry& e) const {
  if (e.lease_until) return *e.lease_until;
  if (config_.mapping_ttl == sim::kTimeNever) return sim::kTimeNever;
  return e.last_outbound + config_.mapping_ttl;
}

void NatDevice::insert_entry(MappingEntry entry) {
  const Port port = entry.external_port;
  const SimTime deadline = entry_deadline(entry);
  pool_.take(port);
  outbound_index_[out_key_of(entry)] = port;
  if (config_.exhaustion == ExhaustionPolicy::EvictOldest && !entry.lease_until) {
    lru_.insert({entry.last_outbound, port});
  }
  by_port_.emplace(port, std::move(entry));
  if (deadline != sim::kTimeNever) expiry_queue_.push({deadline, port});
  ++total_created_;
}

void NatDevice::erase_entry(std::map<Port, MappingEntry>::iterator it) {
  pool_.release(it->second.external_port);
  outbound_index_.erase(out_key_of(it->second));
  if (config_.exhaustion == ExhaustionPolicy::EvictOldest && !it->second.lease_until) {
    lru_.erase({it->second.last_outbound, it->second.external_port});
  }
  by_port_.erase(it);
}

void NatDevice::touch(MappingEntry& e, SimTime now) {
  if (e.last_outbound == now) return;
  if (config_.exhaustion == ExhaustionPolicy::EvictOldest && !e.lease_until) {
    lru_.erase({e.last_outbound, e.external_port});
    lru_.insert({now, e.external_port});
  }
  e.last_outbound = now;
}

std::optional<Port> NatDevice::evict_lru() {
  if (lru_.empty()) return std::nullopt;
  auto oldest = *lru_.begin();
  erase_entry(by_port_.find(oldest.second));
  return oldest.second;
}

void NatDevice::expire(SimTime now) {
  while (!expiry_queue_.empty() && expiry_queue_.top().first <= now) {
    const Port port = expiry_queue_.top().second;
    expiry_queue_.pop();
    auto it = by_port_.find(port);
    if (it == by_port_.end()) continue;
    const SimTime deadline = entry_deadline(it->second);
    if (deadline == sim::kTimeNever) continue;
    if (deadline <= now) {
      // Idle past the TTL (or lease over): the port returns to the pool. A
      // delayed inbound packet now finds nothing, or someone else's mapping.
      erase_entry(it);
    } else {
      expiry_queue_.push({deadline, port});
    }
  }
}

MappingEntry* NatDevice::lookup_outbound(EndpointAddress src, EndpointAddress dst) {
  if (config_.mapping == MappingBehavior::AddressAndPortDependent) {
    // Destination-keyed lookup; leases are inbound fixtures only here.
    auto it = outbound_index_.find(OutKey{src, dst});
    if (it == outbound_index_.end()) return nullptr;
    return &by_port_.find(it->second)->second;
  }
  auto it = outbound_index_.find(OutKey{src, EndpointAddress{}});
  if (it == outbound_index_.end()) return nullptr;
  return &by_port_.find(it->second)->second;
}

std::optional<Port> NatDevice::allocate_port() {
  if (pool_.free_count() == 0) return std::nullopt;

  if (config_.port_alloc == PortAllocPolicy::Sequential) {
    Port wanted = seq_next_;
    if (wanted < config_.port_lo || wanted > config_.port_hi) wanted = config_.port_lo;
    const std::uint32_t below = pool_.free_below(wanted);
    const Port candidate =
        below < pool_.free_count() ? pool_.nth_free(below) : pool_.nth_free(0);  // wrap
    seq_next_ =
        candidate == config_.port_hi ? config_.port_lo : static_cast<Port>(candidate + 1);
    return candidate;
  }

  // Uniform over the free ports, by rank.
  return pool_.nth_free(static_cast<std::uint32_t>(rng_.uniform(pool_.free_count())));
}

void NatDevice::permit(MappingEntry& e, EndpointAddress remote) {
  if (std::find(e.permitted_remotes.begin(), e.permitted_remotes.end(), remote) ==
      e.permitted_remotes.end()) {
    e.permitted_remotes.push_back(remote);
  }
}

bool NatDevice::filter_admits(const MappingEntry& e, EndpointAddress source) const {
  if (e.lease_until) return true;  // port forward: any host may send in
  switch (config_.filtering) {
    case FilteringBehavior::EndpointIndependent:
      return true;
    case FilteringBehavior::AddressDependent:
      return std::any_of(e.permitted_remotes.begin(), e.permitted_remotes.end(),
                         [&](EndpointAddress p) { return p.host == source.host; });
    case FilteringBehavior::AddressAndPortDependent:
      return std::find(e.permitted_remotes.begin(), e.permitted_remotes.end(), source) !=
             e.permitted_remotes.end();
  }
  return false;
}

NatDevice::OutboundResult NatDevice::translate_outbound(const Datagram& d, SimTime now) {
  expire(now);
  OutboundResult result;

  MappingEntry* entry = lookup_outbound(d.src, d.dst);
  if (!entry) {
    if (by_port_.size() >= config_.max_mappings) {
      ++table_full_rejections_;
      result.status = OutboundResult::Status::TableFull;
      return result;
    }
    auto port = allocate_port();
    if (!port && config_.exhaustion == ExhaustionPolicy::EvictOldest) {
      // Reclaim the least recently used dynamic entry; its delayed inbound
      // packets will now land on a stranger's mapping, the misaddressing
      // hazard of aggressive re-allocation.
      port = evict_lru();
    }
    if (!port) {
      result.status = OutboundResult::Status::PortExhausted;
      return result;
    }
    MappingEntry fresh;
    fresh.internal = d.src;
    if (config_.mapping == MappingBehavior::AddressAndPortDependent) fresh.remote_key = d.dst;
    fresh.external_port = *port;
    fresh.created = now;
    fresh.last_outbound = now;
    insert_entry(std::move(fresh));
    entry = &by_port_.find(*port)->second;
    result.created_mapping = true;
  }

  touch(*entry, now);
  permit(*entry, d.dst);

  result.translated = d;
  result.translated.src = EndpointAddress{config_.external_host, entry->external_port};
  result.hairpin = d.dst.host == config_.external_host;
  return result;
}

std::optional<Datagram> NatDevice::translate_inbound(const Datagram& d, SimTime now) {
  expire(now);
  auto it = by_port_.find(d.dst.port);
  if (it == by_port_.end()) return std::nullopt;
  if (!filter_admits(it->second, d.src)) return std::nullopt;

  Datagram inside = d;
  inside.dst = it->second.internal;
  return inside;
}

NatDevice::PmpResult NatDevice::grant_static_mapping(EndpointAddress internal, Port requested_port,
                                                     std::uint32_t lifetime_s, SimTime now) {
  expire(now);
  PmpResult result;
  if (config_.cgnat || !config_.pmp_enabled) {
    result.status = PmpResult::Status::Unsupported;
    return result;
  }

  // A repeated request from the same internal endpoint renews the existing
  // lease; a dynamic mapping for it is superseded by the lease (same
  // outbound key).
  auto existing = outbound_index_.find(OutKey{internal, EndpointAddress{}});
  if (existing != outbound_index_.end()) {
    auto it = by_port_.find(existing->second);
    if (it->second.lease_until) {
      it->second.lease_until = now + sim::seconds(lifetime_s);
      expiry_queue_.push({*it->second.lease_until, it->second.external_port});
      result.granted_port = it->second.external_port;
      result.lifetime_s = lifetime_s;
      return result;
    }
    if (config_.mapping == MappingBehavior::EndpointIndependent) {
      erase_entry(it);
    }
  }

  if (by_port_.size() >= config_.max_mappings) {
    ++table_full_rejections_;
    result.status = PmpResult::Status::NoResources;
    return result;
  }

  Port port = 0;
  if (requested_port != 0 && requested_port >= config_.port_lo &&
      requested_port <= config_.port_hi && pool_.is_free(requested_port)) {
    port = requested_port;
  } else {
    auto alt = allocate_port();
    if (!alt) {
      result.status = PmpResult::Status::NoResources;
      return result;
    }
    port = *alt;
  }

  MappingEntry entry;
  entry.internal = internal;
  entry.external_port = port;
  entry.created = now;
  entry.last_outbound = now;
  entry.lease_until = now + sim::seconds(lifetime_s);
  insert_entry(std::move(entry));

  result.granted_port = port;
  result.lifetime_s = lifetime_s;
  return result;
}

const MappingEntry* NatDevice::find_by_external_port(Port p) const {
  auto it = by_port_.find(p);
  return it == by_port_.end() ? nullptr : &it->second;
}

const MappingEntry* NatDevice::find_eim(EndpointAddress internal) const {
  auto it = outbound_index_.find(OutKey{internal, EndpointAddress{}});
  if (it == outbound_index_.end()) return nullptr;
  const MappingEntry& e = by_port_.find(it->second)->second;
  return e.lease_until ? nullptr : &e;
}

std::vector<const MappingEntry*> NatDevice::entries() const {
  std::vector<const MappingEntry*> out;
  out.reserve(by_port_.size());
  for (const auto& [port, entry] : by_port_) out.push_back(&entry);
  return out;
}

std::string NatDevice::snapshot_json() const {
  std::string out = "[";
  bool first_entry = true;
  for (const auto& [port, e] : by_port_) {
    if (!first_entry) out += ",";
    first_entry = false;
    out += "{\"internal\":\"" + to_string(e.internal) + "\"";
    out += ",\"remote_key\":";
    out += e.remote_key ? "\"" + to_string(*e.remote_key) + "\"" : "null";
    out += ",\"external_port\":" + std::to_string(e.external_port);
    out += ",\"last_outbound_us\":" + std::to_string(e.last_outbound);
    out += ",\"permitted_remotes\":[";
    for (std::size_t i = 0; i < e.permitted_remotes.size(); ++i) {
      if (i) out += ",";
      out += "\"" + to_string(e.permitted_remotes[i]) + "\"";
    }
    out += "]}";
  }
  out += "]";
  return out;
}

}  // namespace natlab::nat
