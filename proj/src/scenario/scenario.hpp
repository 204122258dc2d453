#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sim/network.hpp"
#include "traversal/ice.hpp"

namespace natlab::scenario {

enum class NodeKind { Peer, Stun, Rendezvous, Relay };
const char* node_kind_name(NodeKind k);

struct NodeDecl {
  std::string name;
  NodeKind kind = NodeKind::Peer;
  std::optional<std::string> behind;
  std::optional<sim::HostId> host;
  int line = 0;
};

struct NatDecl {
  std::string name;
  nat::NatConfig config;
  std::optional<std::string> behind;
  int line = 0;
};

struct LinkDecl {
  std::string a;
  std::string b;
  sim::LinkProfile profile;
  int line = 0;
};

struct CarrierDecl {
  std::string name;
  nat::NatConfig config;
  int line = 0;
};

// Parsed declarative scenario: topology, carrier list and strategy policy.
struct ScenarioSpec {
  std::uint64_t seed = 1;
  sim::SimTime run_limit = sim::seconds(600);
  sim::LinkProfile default_link;
  std::vector<NodeDecl> nodes;
  std::vector<NatDecl> nats;
  std::vector<LinkDecl> links;
  std::vector<CarrierDecl> carriers;
  traversal::IcePolicy policy;
  std::optional<std::pair<std::string, std::string>> punch_peers;

  std::vector<std::string> peer_names() const;
  std::vector<std::string> server_names(NodeKind kind) const;
  sim::TopologySpec topology(std::uint64_t seed_override) const;
};

struct ParseIssue {
  int line = 0;
  std::string message;
};

struct ParseResult {
  std::optional<ScenarioSpec> spec;
  std::vector<ParseIssue> errors;
  bool ok() const { return spec.has_value(); }
};

// Parses the line-oriented key-value scenario format. Collects every error
// with its line number instead of stopping at the first.
ParseResult parse_scenario(std::string_view text);
ParseResult parse_scenario_file(const std::string& path);

std::string format_errors(const std::vector<ParseIssue>& errors);

}  // namespace natlab::scenario
