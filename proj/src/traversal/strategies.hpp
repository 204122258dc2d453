#pragma once

#include <optional>

#include "traversal/punch.hpp"

namespace natlab::traversal {

// One gathered socket: a local port plus the peer candidate it should probe.
struct PeerEndpoint {
  NodeId node = -1;
  Port local_port = 0;
  EndpointAddress target;  // the peer's candidate (reflexive or local)
};

struct PunchTiming {
  SimTime probe_interval = sim::millis(200);
  SimTime timeout = sim::seconds(10);
};

// Generic driver: runs the probe exchange over prepared side specs and wraps
// the outcome in session bookkeeping (stats, mapping deltas, transitions).
TraversalSession punch_sides(Network& net, const SideSpec& a, const SideSpec& b, Strategy label,
                             SimTime start, SimTime deadline,
                             FailReason on_timeout = FailReason::Timeout);

// Synchronized bidirectional hole punch toward fixed candidates. Probing
// starts at `start` on both sides; no adaptation to observed ports is done,
// so an endpoint-dependent mapping on either side defeats it.
TraversalSession simple_punch(Network& net, PeerEndpoint a, PeerEndpoint b, SimTime start,
                              const PunchTiming& timing = {});

struct BruteForceOptions {
  bool hard_sends_initial = true;  // disabled only to demonstrate the failure mode
  bool randomized_order = false;
  SimTime settle_margin = sim::seconds(2);
};

// One-sided port scan: the hard (endpoint-dependent) side opens a single
// mapping toward the easy side's reflexive endpoint, and the easy side sweeps
// the hard NAT's port range at `pps` until it finds it.
TraversalSession brute_force_punch(Network& net, NodeId easy_node, Port easy_port,
                                   EndpointAddress easy_reflexive, NodeId hard_node,
                                   Port hard_port, sim::HostId hard_external_host, Port range_lo,
                                   Port range_hi, std::uint32_t pps, SimTime start,
                                   const BruteForceOptions& opts = {});

struct BirthdaySideSpec {
  NodeId node = -1;
  bool fresh_ports = true;        // endpoint-dependent side: one mapping per probe
  Port fixed_port = 0;            // otherwise: the single punched socket
  sim::HostId peer_external_host = 0;
  Port peer_range_lo = 1;         // peer's allocator pool to guess in
  Port peer_range_hi = 1024;
  std::optional<Port> peer_known_port;  // aim here instead of guessing (mixed mode)
};

struct BirthdayOptions {
  SimTime settle_margin = sim::seconds(2);
  SimTime chunk_gap_extra = sim::millis(1);  // beyond the TTL when waiting out a chunk
  // Each probe is sent this many times in total, one peer-pool-span of slots
  // apart. Retransmission keeps the mapping alive, survives lossy links, and
  // (when the peer's allocator recycles ports) tests the probe against
  // successive generations of the peer's pool.
  std::uint32_t transmissions = 4;
};

// Birthday-paradox collision punch: each side opens up to k fresh random
// source ports (one NAT mapping each) and fires at uniformly random ports in
// the peer's pool, in chunks of at most `chunk` concurrent mappings
// (0 disables chunking).
TraversalSession birthday_punch(Network& net, const BirthdaySideSpec& a,
                                const BirthdaySideSpec& b, std::uint32_t k, std::uint32_t pps,
                                std::uint32_t chunk, SimTime start,
                                const BirthdayOptions& opts = {});

struct MappingOutcome {
  enum class Status { Granted, Unsupported, NoResources, Timeout, PreconditionViolated };
  Status status = Status::Timeout;
  Port granted_port = 0;
  std::uint32_t lifetime_s = 0;
};

// Asks the peer's first-hop gateway for a static external mapping.
MappingOutcome request_mapping(Network& net, NodeId peer, const std::string& gateway_nat,
                               Port internal_port, Port requested_port, std::uint32_t lifetime_s,
                               SimTime timeout = sim::seconds(3));

// Punch through a shared ancestor NAT by sending to each other's reflexive
// endpoints and letting the turn NAT loop the traffic back inside.
TraversalSession hairpin_connect(Network& net, PeerEndpoint a, PeerEndpoint b, SimTime start,
                                 const PunchTiming& timing = {});

struct RelayOptions {
  SimTime probe_interval = sim::millis(200);
  SimTime timeout = sim::seconds(5);
};

// Fallback: both peers keep outbound flows to the relay, which forwards
// everything; works through any NAT that allows outbound traffic.
TraversalSession relay_connect(Network& net, NodeId a, NodeId b, const std::string& relay_node,
                               const RelayOptions& opts = {});

// Periodic probes refreshing every mapping on the session path.
void keepalive(Network& net, const TraversalSession& session, SimTime interval, SimTime until);

// Sends one application datagram along the session path and waits for the
// delivery. On a filtered drop the session degrades to MappingExpired.
bool session_send_app(Network& net, TraversalSession& session, bool from_a,
                      const sim::Bytes& payload, SimTime timeout = sim::seconds(3));

// Counts mappings created across a node's NAT chain (monotone).
std::uint64_t chain_created_mappings(const Network& net, NodeId node);
std::uint64_t chain_table_full_rejections(const Network& net, NodeId node);

}  // namespace natlab::traversal
