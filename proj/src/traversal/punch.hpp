#pragma once

#include <vector>

#include "traversal/session.hpp"

namespace natlab::traversal {

using sim::Network;

// A scheduled probe: at `when`, send from `from_port` toward `to`.
struct ProbeStep {
  SimTime when;
  Port from_port;
  EndpointAddress to;
};

struct SideSpec {
  NodeId node = -1;
  std::vector<Port> ports;       // sockets to open (ack handlers)
  std::vector<ProbeStep> plan;   // may be empty for a passive side
};

struct PunchOutcome {
  bool established = false;
  bool hairpin_path = false;
  SimTime established_at = 0;
  std::uint64_t probes_a = 0;
  std::uint64_t probes_b = 0;
  SessionEnd end_a;
  SessionEnd end_b;
};

// Drives a bidirectional probe / probe-ack / ack-ack exchange. A side counts
// as punched once it has seen a probe-ack, or has answered a probe and seen
// the ack-ack for its answer; the hole is open once both sides are punched.
PunchOutcome run_punch(Network& net, const SideSpec& a, const SideSpec& b, std::uint64_t nonce,
                       SimTime deadline);

// Same exchange, but every message rides a relay envelope through the relay
// server; peers address each other by id.
struct RelaySideSpec {
  NodeId node = -1;
  Port port = 0;
  std::uint64_t own_id = 0;
  std::uint64_t peer_id = 0;
  std::vector<SimTime> probe_times;
};

PunchOutcome run_relay_punch(Network& net, const RelaySideSpec& a, const RelaySideSpec& b,
                             EndpointAddress relay, std::uint64_t nonce, SimTime deadline);

// Relay server agent: forwards envelopes between clients it has heard from.
void install_relay(Network& net, const std::string& node);

}  // namespace natlab::traversal
