#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "nat/nat_device.hpp"
#include "sim/datagram.hpp"
#include "sim/random.hpp"
#include "sim/trace.hpp"

namespace natlab::sim {

struct BuildError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Declarative topology: named nodes and NATs form a forest rooted at the
// public internet ("behind" absent). Links attach profiles to adjacent
// entity pairs; hops without a declared link use the default profile.
struct TopologySpec {
  struct NodeDef {
    std::string name;
    std::optional<std::string> behind;  // NAT name
    std::optional<HostId> host;         // auto-assigned when absent
  };
  struct NatDef {
    std::string name;
    nat::NatConfig config;              // external_host auto-assigned when 0
    std::optional<std::string> behind;  // outer NAT name (nesting)
  };
  struct LinkDef {
    std::string a;
    std::string b;
    LinkProfile profile;
  };

  std::vector<NodeDef> nodes;
  std::vector<NatDef> nats;
  std::vector<LinkDef> links;
  LinkProfile default_link;
  std::uint64_t seed = 1;
};

using NodeId = int;
using NatId = int;
constexpr int kInternetDomain = -1;

struct DeliveryInfo {
  SimTime time = 0;
  bool hairpinned = false;
};

class Network;
using DatagramHandler = std::function<void(Network&, const Datagram&, const DeliveryInfo&)>;
using TimerFn = std::function<void(Network&)>;

// Per-link accounting, one direction.
struct LinkDirStats {
  std::uint64_t entered = 0;
  std::uint64_t forwarded = 0;
  std::uint64_t lost = 0;
};

// Deterministic discrete-event network. Single-threaded by contract: one
// Network instance is never shared across threads; parallel experiments run
// independent instances.
class Network {
 public:
  static Network build(const TopologySpec& spec);

  SimTime now() const { return now_; }

  NodeId node_id(const std::string& name) const;
  NatId nat_id(const std::string& name) const;
  bool has_node(const std::string& name) const;
  const std::string& node_name(NodeId id) const { return nodes_[id].name; }
  HostId node_host(NodeId id) const { return nodes_[id].host; }
  HostId nat_internal_host(NatId id) const { return nats_[id].internal_host; }
  nat::NatDevice& nat_device(NatId id) { return *nats_[id].device; }
  const nat::NatDevice& nat_device(NatId id) const { return *nats_[id].device; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t link_count() const { return declared_links_; }

  // NAT chain protecting a node, innermost first; empty for public nodes.
  std::vector<NatId> nat_chain(NodeId id) const;

  RandomStream& node_rng(NodeId id) { return *nodes_[id].rng; }

  void bind_port(NodeId id, Port port, DatagramHandler handler);
  void unbind_port(NodeId id, Port port);

  // Allocates a fresh ephemeral local port on the node (deterministic).
  Port ephemeral_port(NodeId id);

  // Injects a datagram originating at the node. The source host must belong
  // to the node; an unroutable destination becomes a traced drop, as with
  // real UDP.
  void send(NodeId origin, Datagram d);
  void send(const std::string& origin, Datagram d);

  void schedule_at(SimTime when, TimerFn fn);
  void schedule_in(SimTime delay, TimerFn fn) { schedule_at(now_ + delay, fn); }

  // Pops and processes the earliest event; ties broken by insertion order.
  // Returns the deliver/drop trace event the step produced, if any.
  std::optional<TraceEvent> step();

  // Processes all events with time <= limit, then advances the clock to the
  // limit. Returns the trace slice produced by this call.
  EventTrace run_until(SimTime limit);

  // Processes events until the queue drains.
  EventTrace run_all();

  // Steps until pred() holds or no event at time <= deadline remains.
  bool run_until_condition(const std::function<bool()>& pred, SimTime deadline);

  bool queue_empty() const { return queue_.empty(); }
  const EventTrace& trace() const { return trace_; }

  std::map<std::string, std::pair<LinkDirStats, LinkDirStats>> link_stats() const;

  Network(Network&&) = default;
  Network& operator=(Network&&) = default;
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

 private:
  Network() = default;

  struct NodeState {
    std::string name;
    HostId host = 0;
    int parent = kInternetDomain;  // NAT index or internet
    std::map<Port, DatagramHandler> handlers;
    std::unique_ptr<RandomStream> rng;
    Port next_ephemeral = 40000;
  };

  struct NatState {
    std::unique_ptr<nat::NatDevice> device;
    int parent = kInternetDomain;
    HostId internal_host = 0;  // gateway address inside the stub domain
  };

  struct Target {
    enum class Kind { Node, NatDescend, NatService } kind;
    int index;
  };

  struct Pacer {
    SimTime base = 0;
    std::uint64_t count = 0;
  };

  struct LinkState {
    LinkProfile profile;
    bool declared = false;
    std::unique_ptr<RandomStream> loss_rng;
    Pacer pacer[2];
    LinkDirStats stats[2];
    std::string label;
  };

  struct Hop {
    int nat = -1;   // NAT processing the hop, or -1 for final node delivery
    int node = -1;  // delivery target
    bool inbound = false;
    bool service = false;  // gateway-addressed datagram (port mapping)
    Datagram dgram;
    bool hairpinned = false;
  };

  struct QueuedEvent {
    SimTime time;
    std::uint64_t seq;
    // exactly one of hop/timer is active
    std::optional<Hop> hop;
    TimerFn timer;
    bool operator<(const QueuedEvent& o) const {
      return time != o.time ? time < o.time : seq < o.seq;
    }
  };

  // entity key: node i -> 2i, nat j -> 2j+1
  static int node_key(int i) { return 2 * i; }
  static int nat_key(int j) { return 2 * j + 1; }

  void record(TraceType type, const Datagram& d, DropCause cause = DropCause::None);
  LinkState& link_between(int key_a, int key_b);
  const std::string& entity_name(int key) const;
  void schedule_hop(int from_key, int to_key, Hop hop);
  void dispatch_in_domain(int domain, int from_key, Datagram d, bool hairpinned);
  std::optional<TraceEvent> process_hop(Hop& hop);
  std::optional<TraceEvent> process_nat_hop(Hop& hop);
  void handle_gateway_service(int nat_index, const Datagram& d);

  SimTime now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t root_seed_ = 1;
  std::set<QueuedEvent> queue_;
  EventTrace trace_;
  std::vector<NodeState> nodes_;
  std::vector<NatState> nats_;
  std::map<std::string, int> node_index_;
  std::map<std::string, int> nat_index_;
  // domain (-1 internet, else NAT index) -> host -> target
  std::map<int, std::map<HostId, Target>> domain_hosts_;
  std::map<std::pair<int, int>, LinkState> links_;
  LinkProfile default_link_;
  std::size_t declared_links_ = 0;
};

// Convenience wrapper matching the operation vocabulary.
inline Network build_network(const TopologySpec& spec) { return Network::build(spec); }

}  // namespace natlab::sim
