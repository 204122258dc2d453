#pragma once

#include <optional>
#include <string>

#include "discovery/stun.hpp"
#include "nat/nat_device.hpp"

namespace natlab::discovery {

struct ClassifyOptions {
  SimTime probe_timeout = sim::seconds(3);
};

// Two-server classification: the mapping test runs first so an
// endpoint-dependent mapper short-circuits as Symmetric, then alternate-reply
// probes order the filtering classes. Returns nothing when the baseline
// exchanges themselves time out (Inconclusive).
std::optional<nat::NatClassName> classify_nat(Network& net, NodeId client,
                                              const std::string& server_a,
                                              const std::string& server_b,
                                              const ClassifyOptions& opts = {});

}  // namespace natlab::discovery
