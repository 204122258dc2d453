#include "scenario/scenario.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace natlab::scenario {

const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Peer: return "peer";
    case NodeKind::Stun: return "stun";
    case NodeKind::Rendezvous: return "rendezvous";
    case NodeKind::Relay: return "relay";
  }
  return "unknown";
}

std::vector<std::string> ScenarioSpec::peer_names() const {
  std::vector<std::string> out;
  for (const auto& n : nodes) {
    if (n.kind == NodeKind::Peer) out.push_back(n.name);
  }
  return out;
}

std::vector<std::string> ScenarioSpec::server_names(NodeKind kind) const {
  std::vector<std::string> out;
  for (const auto& n : nodes) {
    if (n.kind == kind) out.push_back(n.name);
  }
  return out;
}

sim::TopologySpec ScenarioSpec::topology(std::uint64_t seed_override) const {
  sim::TopologySpec spec;
  spec.seed = seed_override;
  spec.default_link = default_link;
  for (const auto& n : nodes) spec.nodes.push_back({n.name, n.behind, n.host});
  for (const auto& n : nats) spec.nats.push_back({n.name, n.config, n.behind});
  for (const auto& l : links) spec.links.push_back({l.a, l.b, l.profile});
  return spec;
}

namespace {

struct Parser {
  std::vector<ParseIssue> errors;
  ScenarioSpec spec;
  int line_no = 0;

  void error(const std::string& msg) { errors.push_back({line_no, msg}); }

  static std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> tokens;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
  }

  // key=value option, or nothing for bare tokens
  static std::optional<std::pair<std::string, std::string>> split_kv(const std::string& tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) return std::nullopt;
    return std::make_pair(tok.substr(0, eq), tok.substr(eq + 1));
  }

  std::optional<std::uint64_t> parse_u64(const std::string& value, const std::string& key) {
    std::uint64_t out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
      error("invalid number for " + key + ": '" + value + "'");
      return std::nullopt;
    }
    return out;
  }

  std::optional<double> parse_f64(const std::string& value, const std::string& key) {
    try {
      std::size_t used = 0;
      double out = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return out;
    } catch (const std::exception&) {
      error("invalid number for " + key + ": '" + value + "'");
      return std::nullopt;
    }
  }

  std::optional<bool> parse_bool(const std::string& value, const std::string& key) {
    if (value == "on" || value == "true" || value == "yes") return true;
    if (value == "off" || value == "false" || value == "no") return false;
    error("invalid flag for " + key + ": '" + value + "' (want on|off)");
    return std::nullopt;
  }

  bool apply_link_option(sim::LinkProfile& profile, const std::string& key,
                         const std::string& value) {
    if (key == "latency_ms") {
      if (auto v = parse_u64(value, key)) profile.latency_us = sim::millis(*v);
      return true;
    }
    if (key == "latency_us") {
      if (auto v = parse_u64(value, key)) profile.latency_us = *v;
      return true;
    }
    if (key == "loss") {
      if (auto v = parse_f64(value, key)) {
        if (*v < 0.0 || *v > 1.0) {
          error("loss must lie in [0,1], got '" + value + "'");
        } else {
          profile.loss_rate = *v;
        }
      }
      return true;
    }
    if (key == "pps") {
      if (auto v = parse_u64(value, key)) {
        if (*v == 0) {
          error("pps must be positive");
        } else {
          profile.rate_cap_pps = static_cast<std::uint32_t>(*v);
        }
      }
      return true;
    }
    return false;
  }

  nat::NatConfig parse_nat_options(const std::vector<std::string>& tokens, std::size_t first,
                                   std::optional<std::string>& behind,
                                   std::optional<sim::HostId>& host) {
    nat::NatConfig cfg;
    for (std::size_t i = first; i < tokens.size(); ++i) {
      auto kv = split_kv(tokens[i]);
      if (!kv) {
        error("expected key=value, got '" + tokens[i] + "'");
        continue;
      }
      const auto& [key, value] = *kv;
      if (key == "mapping") {
        if (value == "eim") {
          cfg.mapping = nat::MappingBehavior::EndpointIndependent;
        } else if (value == "edm") {
          cfg.mapping = nat::MappingBehavior::AddressAndPortDependent;
        } else {
          error("invalid mapping '" + value + "' (want eim|edm)");
        }
      } else if (key == "filtering") {
        if (value == "endpoint") {
          cfg.filtering = nat::FilteringBehavior::EndpointIndependent;
        } else if (value == "address") {
          cfg.filtering = nat::FilteringBehavior::AddressDependent;
        } else if (value == "address_port") {
          cfg.filtering = nat::FilteringBehavior::AddressAndPortDependent;
        } else {
          error("invalid filtering '" + value + "' (want endpoint|address|address_port)");
        }
      } else if (key == "alloc") {
        if (value == "random") {
          cfg.port_alloc = nat::PortAllocPolicy::Random;
        } else if (value.rfind("sequential", 0) == 0) {
          cfg.port_alloc = nat::PortAllocPolicy::Sequential;
          auto colon = value.find(':');
          if (colon != std::string::npos) {
            if (auto v = parse_u64(value.substr(colon + 1), key)) {
              if (*v == 0 || *v > 65535) {
                error("sequential start must lie in [1,65535]");
              } else {
                cfg.sequential_start = static_cast<sim::Port>(*v);
              }
            }
          }
        } else {
          error("invalid alloc '" + value + "' (want random|sequential[:start])");
        }
      } else if (key == "ttl_s") {
        if (value == "infinite") {
          cfg.mapping_ttl = sim::kTimeNever;
        } else if (auto v = parse_u64(value, key)) {
          cfg.mapping_ttl = sim::seconds(*v);
        }
      } else if (key == "max_mappings") {
        if (auto v = parse_u64(value, key)) {
          if (*v == 0) {
            error("max_mappings must be >= 1");
          } else {
            cfg.max_mappings = *v;
          }
        }
      } else if (key == "hairpin") {
        if (auto v = parse_bool(value, key)) cfg.hairpinning = *v;
      } else if (key == "exhaustion") {
        if (value == "reject") {
          cfg.exhaustion = nat::ExhaustionPolicy::Reject;
        } else if (value == "evict") {
          cfg.exhaustion = nat::ExhaustionPolicy::EvictOldest;
        } else {
          error("invalid exhaustion '" + value + "' (want reject|evict)");
        }
      } else if (key == "pmp") {
        if (auto v = parse_bool(value, key)) cfg.pmp_enabled = *v;
      } else if (key == "cgnat") {
        if (auto v = parse_bool(value, key)) cfg.cgnat = *v;
      } else if (key == "ports") {
        auto dash = value.find('-');
        if (dash == std::string::npos) {
          error("ports wants <lo>-<hi>");
        } else {
          auto lo = parse_u64(value.substr(0, dash), key);
          auto hi = parse_u64(value.substr(dash + 1), key);
          if (lo && hi) {
            if (*lo == 0 || *lo > *hi || *hi > 65535) {
              error("invalid port range " + value);
            } else {
              cfg.port_lo = static_cast<sim::Port>(*lo);
              cfg.port_hi = static_cast<sim::Port>(*hi);
            }
          }
        }
      } else if (key == "behind") {
        behind = value;
      } else if (key == "host") {
        if (auto v = parse_u64(value, key)) host = static_cast<sim::HostId>(*v);
      } else {
        error("unknown NAT key '" + key + "'");
      }
    }
    return cfg;
  }

  void parse_node(const std::vector<std::string>& tokens) {
    if (tokens.size() < 2) {
      error("node wants: node <name> [peer|stun|rendezvous|relay] [behind=<nat>] [host=<id>]");
      return;
    }
    NodeDecl decl;
    decl.name = tokens[1];
    decl.line = line_no;
    std::size_t first_kv = 2;
    if (tokens.size() > 2 && !split_kv(tokens[2])) {
      const std::string& kind = tokens[2];
      if (kind == "peer") {
        decl.kind = NodeKind::Peer;
      } else if (kind == "stun") {
        decl.kind = NodeKind::Stun;
      } else if (kind == "rendezvous") {
        decl.kind = NodeKind::Rendezvous;
      } else if (kind == "relay") {
        decl.kind = NodeKind::Relay;
      } else {
        error("invalid node kind '" + kind + "' (want peer|stun|rendezvous|relay)");
      }
      first_kv = 3;
    }
    for (std::size_t i = first_kv; i < tokens.size(); ++i) {
      auto kv = split_kv(tokens[i]);
      if (!kv) {
        error("expected key=value, got '" + tokens[i] + "'");
        continue;
      }
      if (kv->first == "behind") {
        decl.behind = kv->second;
      } else if (kv->first == "host") {
        if (auto v = parse_u64(kv->second, "host")) decl.host = static_cast<sim::HostId>(*v);
      } else {
        error("unknown node key '" + kv->first + "'");
      }
    }
    spec.nodes.push_back(std::move(decl));
  }

  void parse_nat(const std::vector<std::string>& tokens) {
    if (tokens.size() < 2) {
      error("nat wants: nat <name> mapping=... filtering=... [options]");
      return;
    }
    NatDecl decl;
    decl.name = tokens[1];
    decl.line = line_no;
    std::optional<sim::HostId> host;
    decl.config = parse_nat_options(tokens, 2, decl.behind, host);
    if (host) decl.config.external_host = *host;
    spec.nats.push_back(std::move(decl));
  }

  void parse_carrier(const std::vector<std::string>& tokens) {
    if (tokens.size() < 2) {
      error("carrier wants: carrier <name> mapping=... filtering=... [options]");
      return;
    }
    CarrierDecl decl;
    decl.name = tokens[1];
    decl.line = line_no;
    std::optional<std::string> behind;
    std::optional<sim::HostId> host;
    decl.config = parse_nat_options(tokens, 2, behind, host);
    if (behind) error("carriers cannot be nested");
    spec.carriers.push_back(std::move(decl));
  }

  void parse_link(const std::vector<std::string>& tokens) {
    if (tokens.size() < 3) {
      error("link wants: link <a> <b> [latency_ms=..] [loss=..] [pps=..]");
      return;
    }
    LinkDecl decl;
    decl.a = tokens[1];
    decl.b = tokens[2];
    decl.line = line_no;
    decl.profile = spec.default_link;
    for (std::size_t i = 3; i < tokens.size(); ++i) {
      auto kv = split_kv(tokens[i]);
      if (!kv) {
        error("expected key=value, got '" + tokens[i] + "'");
        continue;
      }
      if (!apply_link_option(decl.profile, kv->first, kv->second)) {
        error("unknown link key '" + kv->first + "'");
      }
    }
    spec.links.push_back(std::move(decl));
  }

  void parse_policy(const std::vector<std::string>& tokens) {
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      auto kv = split_kv(tokens[i]);
      if (!kv) {
        error("expected key=value, got '" + tokens[i] + "'");
        continue;
      }
      const auto& [key, value] = *kv;
      if (key == "ladder") {
        auto ladder = parse_ladder(value);
        if (ladder) spec.policy.allowed = *ladder;
      } else if (key == "pps") {
        if (auto v = parse_u64(value, key)) spec.policy.pps = static_cast<std::uint32_t>(*v);
      } else if (key == "birthday_k") {
        if (auto v = parse_u64(value, key)) {
          spec.policy.birthday_k = static_cast<std::uint32_t>(*v);
        }
      } else if (key == "birthday_p") {
        if (auto v = parse_f64(value, key)) {
          if (*v <= 0 || *v >= 1) {
            error("birthday_p must lie in (0,1)");
          } else {
            spec.policy.birthday_target = *v;
          }
        }
      } else if (key == "chunk") {
        if (auto v = parse_u64(value, key)) spec.policy.chunk = static_cast<std::uint32_t>(*v);
      } else if (key == "punch_timeout_ms") {
        if (auto v = parse_u64(value, key)) spec.policy.punch_timeout = sim::millis(*v);
      } else if (key == "probe_interval_ms") {
        if (auto v = parse_u64(value, key)) spec.policy.probe_interval = sim::millis(*v);
      } else {
        error("unknown policy key '" + key + "'");
      }
    }
  }

  std::optional<std::vector<traversal::Strategy>> parse_ladder(const std::string& value) {
    std::vector<traversal::Strategy> out;
    std::stringstream in(value);
    std::string item;
    bool bad = false;
    while (std::getline(in, item, ',')) {
      bool found = false;
      for (traversal::Strategy s : traversal::strategy_ladder()) {
        if (item == traversal::strategy_name(s)) {
          out.push_back(s);
          found = true;
          break;
        }
      }
      if (!found) {
        error("unknown strategy '" + item + "' in ladder");
        bad = true;
      }
    }
    if (out.empty() && !bad) error("ladder must name at least one strategy");
    if (bad || out.empty()) return std::nullopt;
    return out;
  }

  void parse_line(const std::string& raw) {
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto tokens = tokenize(line);
    if (tokens.empty()) return;
    const std::string& head = tokens[0];

    if (head == "seed") {
      if (tokens.size() != 2) {
        error("seed wants one value");
      } else if (auto v = parse_u64(tokens[1], "seed")) {
        spec.seed = *v;
      }
    } else if (head == "run_limit_ms") {
      if (tokens.size() != 2) {
        error("run_limit_ms wants one value");
      } else if (auto v = parse_u64(tokens[1], "run_limit_ms")) {
        spec.run_limit = sim::millis(*v);
      }
    } else if (head == "default_link") {
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        auto kv = split_kv(tokens[i]);
        if (!kv || !apply_link_option(spec.default_link, kv->first, kv->second)) {
          error("unknown default_link option '" + tokens[i] + "'");
        }
      }
    } else if (head == "node") {
      parse_node(tokens);
    } else if (head == "nat") {
      parse_nat(tokens);
    } else if (head == "carrier") {
      parse_carrier(tokens);
    } else if (head == "nest") {
      if (tokens.size() != 3) {
        error("nest wants: nest <inner> <outer>");
      } else {
        // sugar for behind= on an already declared NAT
        bool found = false;
        for (auto& n : spec.nats) {
          if (n.name == tokens[1]) {
            n.behind = tokens[2];
            found = true;
            break;
          }
        }
        if (!found) error("nest references undeclared NAT '" + tokens[1] + "'");
      }
    } else if (head == "link") {
      parse_link(tokens);
    } else if (head == "policy") {
      parse_policy(tokens);
    } else if (head == "peers") {
      if (tokens.size() != 3) {
        error("peers wants: peers <a> <b>");
      } else {
        spec.punch_peers = std::make_pair(tokens[1], tokens[2]);
      }
    } else {
      error("unknown directive '" + head + "'");
    }
  }

  void validate() {
    std::set<std::string> names;
    auto claim = [&](const std::string& name, int line) {
      if (!names.insert(name).second) {
        errors.push_back({line, "duplicate name '" + name + "'"});
      }
    };
    for (const auto& n : spec.nodes) claim(n.name, n.line);
    for (const auto& n : spec.nats) claim(n.name, n.line);

    std::set<std::string> nat_names;
    for (const auto& n : spec.nats) nat_names.insert(n.name);
    auto check_nat_ref = [&](const std::optional<std::string>& ref, int line,
                             const std::string& what) {
      if (ref && !nat_names.count(*ref)) {
        errors.push_back({line, what + " references undefined NAT '" + *ref + "'"});
      }
    };
    for (const auto& n : spec.nodes) check_nat_ref(n.behind, n.line, "node " + n.name);
    for (const auto& n : spec.nats) check_nat_ref(n.behind, n.line, "nat " + n.name);

    for (const auto& l : spec.links) {
      for (const std::string& end : {l.a, l.b}) {
        if (!names.count(end)) {
          errors.push_back({l.line, "link references undefined node '" + end + "'"});
        }
      }
    }

    if (spec.punch_peers) {
      for (const std::string& p : {spec.punch_peers->first, spec.punch_peers->second}) {
        bool is_peer = false;
        for (const auto& n : spec.nodes) {
          is_peer = is_peer || (n.name == p && n.kind == NodeKind::Peer);
        }
        if (!is_peer) errors.push_back({0, "peers directive names unknown peer '" + p + "'"});
      }
    }

    // Servers live on the public side; a coordinator behind a NAT cannot
    // serve anyone.
    for (const auto& n : spec.nodes) {
      if (n.kind != NodeKind::Peer && n.behind) {
        errors.push_back({n.line, "server node '" + n.name + "' cannot sit behind a NAT"});
      }
    }
    // Every peer must be able to reach some public server.
    if (!spec.peer_names().empty() && !spec.nodes.empty()) {
      bool has_public_server = false;
      for (const auto& n : spec.nodes) {
        has_public_server = has_public_server || (n.kind != NodeKind::Peer && !n.behind);
      }
      if (!has_public_server) {
        errors.push_back({0, "scenario declares peers but no public server node"});
      }
    }
  }
};

}  // namespace

ParseResult parse_scenario(std::string_view text) {
  Parser parser;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++parser.line_no;
    parser.parse_line(line);
  }
  parser.validate();

  ParseResult result;
  result.errors = parser.errors;
  if (parser.errors.empty()) result.spec = std::move(parser.spec);
  return result;
}

ParseResult parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    ParseResult result;
    result.errors.push_back({0, "cannot open scenario file: " + path});
    return result;
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

std::string format_errors(const std::vector<ParseIssue>& errors) {
  std::string out;
  for (const auto& e : errors) {
    out += "line " + std::to_string(e.line) + ": " + e.message + "\n";
  }
  return out;
}

}  // namespace natlab::scenario
