#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sim/datagram.hpp"
#include "sim/random.hpp"

namespace natlab::nat {

using sim::Datagram;
using sim::EndpointAddress;
using sim::HostId;
using sim::Port;
using sim::SimTime;

// RFC 4787 split: endpoint-independent ("easy") vs endpoint-dependent
// ("hard") mapping.
enum class MappingBehavior { EndpointIndependent, AddressAndPortDependent };

enum class FilteringBehavior { EndpointIndependent, AddressDependent, AddressAndPortDependent };

enum class PortAllocPolicy { Sequential, Random };

// What the allocator does when every port in the pool is taken: refuse the
// new mapping, or reclaim the least recently used one (carrier-grade boxes
// commonly do the latter).
enum class ExhaustionPolicy { Reject, EvictOldest };

// The STUN-era taxonomy. OpenInternet is what classification reports for a
// host with no NAT at all; it never describes a NatConfig.
enum class NatClassName { OpenInternet, FullCone, RestrictedCone, PortRestrictedCone, Symmetric };

const char* nat_class_name(NatClassName c);

struct NatConfig {
  HostId external_host = 0;
  MappingBehavior mapping = MappingBehavior::EndpointIndependent;
  FilteringBehavior filtering = FilteringBehavior::AddressAndPortDependent;
  PortAllocPolicy port_alloc = PortAllocPolicy::Random;
  Port sequential_start = 1024;
  SimTime mapping_ttl = sim::seconds(30);  // kTimeNever = no expiry
  std::size_t max_mappings = 65535;
  bool hairpinning = false;

  // External ports are drawn from [port_lo, port_hi]. Carrier boxes hand each
  // subscriber a block, so the pool is configurable; default is the full range.
  Port port_lo = 1;
  Port port_hi = 65535;

  ExhaustionPolicy exhaustion = ExhaustionPolicy::Reject;

  // Gateway port-mapping protocol (the NAT-PMP/PCP/UPnP family, abstracted).
  bool pmp_enabled = false;
  // Carrier-grade boxes refuse mapping requests regardless of pmp_enabled.
  bool cgnat = false;
};

// Derives the class from (mapping, filtering). Any endpoint-dependent
// mapping is Symmetric regardless of filtering.
NatClassName classify_config(MappingBehavior m, FilteringBehavior f);

struct MappingEntry {
  EndpointAddress internal;
  // Set under endpoint-dependent mapping: the remote endpoint this entry is
  // keyed to. Absent for endpoint-independent mappings.
  std::optional<EndpointAddress> remote_key;
  Port external_port = 0;
  SimTime created = 0;
  SimTime last_outbound = 0;
  // Remote endpoints this mapping has sent to. Grows only via outbound
  // traffic; the filtering behavior decides what part of each pair matters.
  std::vector<EndpointAddress> permitted_remotes;
  // Set for entries installed via the port mapping protocol; such entries
  // ignore the idle TTL and admit any source until the lease expires.
  std::optional<SimTime> lease_until;
};

// One NAT box: translation table, port allocator, filter.
class NatDevice {
 public:
  NatDevice(std::string name, NatConfig config, std::uint64_t rng_seed);

  const std::string& name() const { return name_; }
  const NatConfig& config() const { return config_; }
  HostId external_host() const { return config_.external_host; }
  NatClassName nat_class() const { return classify_config(config_.mapping, config_.filtering); }

  struct OutboundResult {
    enum class Status { Ok, TableFull, PortExhausted };
    Status status = Status::Ok;
    Datagram translated;
    bool created_mapping = false;
    // True when the translated destination is this NAT's own external host,
    // i.e. the packet wants to hairpin.
    bool hairpin = false;
  };

  // Rewrites the source of an outbound datagram to (external_host, mapped
  // port), creating a table entry when none is live for the key.
  OutboundResult translate_outbound(const Datagram& d, SimTime now);

  // Rewrites an inbound datagram to the internal endpoint owning the
  // destination port, or returns nothing when no live mapping admits the
  // source (the silent stateful-firewall rule).
  std::optional<Datagram> translate_inbound(const Datagram& d, SimTime now);

  // Removes entries idle past the TTL and expired leases; their ports return
  // to the pool.
  void expire(SimTime now);

  struct PmpResult {
    enum class Status { Ok, Unsupported, NoResources };
    Status status = Status::Ok;
    Port granted_port = 0;
    std::uint32_t lifetime_s = 0;
  };

  // Installs a lease-backed static mapping on behalf of an internal endpoint.
  PmpResult grant_static_mapping(EndpointAddress internal, Port requested_port,
                                 std::uint32_t lifetime_s, SimTime now);

  std::size_t live_count() const { return by_port_.size(); }
  std::uint64_t total_created() const { return total_created_; }
  std::uint64_t table_full_rejections() const { return table_full_rejections_; }

  const MappingEntry* find_by_external_port(Port p) const;
  // Live external mapping for an internal endpoint under EIM, if any.
  const MappingEntry* find_eim(EndpointAddress internal) const;
  std::vector<const MappingEntry*> entries() const;

  // Table snapshot for golden tests: list of
  // {internal, remote_key, external_port, last_outbound_us, permitted_remotes}.
  std::string snapshot_json() const;

 private:
  // Order-statistics index over the allocator pool: uniform draws from the
  // free ports and first-free-at-or-after lookups stay O(log span) even when
  // the pool is nearly saturated.
  class FreePortSet {
   public:
    void init(Port lo, Port hi);
    std::uint32_t free_count() const { return free_count_; }
    bool is_free(Port p) const { return free_[p - lo_ + 1]; }
    void take(Port p);
    void release(Port p);
    Port nth_free(std::uint32_t rank) const;  // rank in [0, free_count)
    std::uint32_t free_below(Port p) const;   // free ports in [lo, p)

   private:
    void add(std::uint32_t index, int delta);
    Port lo_ = 1;
    std::uint32_t span_ = 0;
    std::uint32_t free_count_ = 0;
    std::uint32_t top_bit_ = 0;
    std::vector<std::int32_t> tree_;
    std::vector<bool> free_;
  };

  // Outbound lookup key: (internal, remote) under endpoint-dependent mapping,
  // (internal, unassigned) otherwise and for leases.
  using OutKey = std::pair<EndpointAddress, EndpointAddress>;
  static OutKey out_key_of(const MappingEntry& e) {
    return {e.internal, e.remote_key.value_or(EndpointAddress{})};
  }

  MappingEntry* lookup_outbound(EndpointAddress src, EndpointAddress dst);
  std::optional<Port> allocate_port();
  std::optional<Port> evict_lru();
  void permit(MappingEntry& e, EndpointAddress remote);
  bool filter_admits(const MappingEntry& e, EndpointAddress source) const;
  SimTime entry_deadline(const MappingEntry& e) const;
  void insert_entry(MappingEntry entry);
  void erase_entry(std::map<Port, MappingEntry>::iterator it);
  void touch(MappingEntry& e, SimTime now);

  std::string name_;
  NatConfig config_;
  sim::RandomStream rng_;
  Port seq_next_;
  FreePortSet pool_;
  std::map<Port, MappingEntry> by_port_;
  std::map<OutKey, Port> outbound_index_;
  // Lazy expiry: entries are queued at creation; refreshed deadlines are
  // re-queued when the old one pops.
  std::priority_queue<std::pair<SimTime, Port>, std::vector<std::pair<SimTime, Port>>,
                      std::greater<>>
      expiry_queue_;
  // Recency order of dynamic entries, maintained only under EvictOldest.
  std::set<std::pair<SimTime, Port>> lru_;
  std::uint64_t total_created_ = 0;
  std::uint64_t table_full_rejections_ = 0;
};

}  // namespace natlab::nat
