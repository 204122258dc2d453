#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "discovery/classify.hpp"
#include "discovery/rendezvous.hpp"
#include "discovery/stun.hpp"
#include "support/generators.hpp"

using namespace natlab;
using discovery::classify_nat;
using discovery::stun_bind;
using discovery::stun_endpoint;
using nat::FilteringBehavior;
using nat::MappingBehavior;
using nat::NatClassName;
using nat::NatConfig;
using nat::PortAllocPolicy;
using sim::Network;
using sim::TopologySpec;

namespace {

struct World {
  Network net;
  sim::NodeId client;
};

// client [behind optional NAT chain] + two cooperating stun servers.
World make_world(std::optional<NatConfig> inner, std::optional<NatConfig> outer,
                 std::uint64_t seed) {
  TopologySpec topo;
  topo.seed = seed;
  if (outer) topo.nats.push_back({"outer", *outer, std::nullopt});
  if (inner) topo.nats.push_back({"inner", *inner, outer ? std::optional<std::string>("outer")
                                                         : std::nullopt});
  std::optional<std::string> behind;
  if (inner) behind = "inner";
  else if (outer) behind = "outer";
  topo.nodes.push_back({"client", behind, std::nullopt});
  topo.nodes.push_back({"stun1", std::nullopt, std::nullopt});
  topo.nodes.push_back({"stun2", std::nullopt, std::nullopt});
  topo.nodes.push_back({"rdv", std::nullopt, std::nullopt});

  World world{sim::build_network(topo), -1};
  world.client = world.net.node_id("client");
  discovery::install_stun_pair(world.net, "stun1", "stun2");
  return world;
}

NatConfig cfg_of(NatClassName cls, PortAllocPolicy alloc) {
  NatConfig cfg;
  cfg.port_alloc = alloc;
  cfg.sequential_start = 2000;
  switch (cls) {
    case NatClassName::FullCone:
      cfg.mapping = MappingBehavior::EndpointIndependent;
      cfg.filtering = FilteringBehavior::EndpointIndependent;
      break;
    case NatClassName::RestrictedCone:
      cfg.mapping = MappingBehavior::EndpointIndependent;
      cfg.filtering = FilteringBehavior::AddressDependent;
      break;
    case NatClassName::PortRestrictedCone:
      cfg.mapping = MappingBehavior::EndpointIndependent;
      cfg.filtering = FilteringBehavior::AddressAndPortDependent;
      break;
    default:
      cfg.mapping = MappingBehavior::AddressAndPortDependent;
      cfg.filtering = FilteringBehavior::AddressAndPortDependent;
      break;
  }
  return cfg;
}

}  // namespace

TEST_CASE("binding against a server with no NAT returns the local endpoint") {
  auto world = make_world(std::nullopt, std::nullopt, 21);
  auto out = stun_bind(world.net, world.client, 4001, stun_endpoint(world.net, "stun1"));
  REQUIRE(out.has_value());
  CHECK(out->mapped.reflexive ==
        sim::EndpointAddress{world.net.node_host(world.client), 4001});
  CHECK(out->rtt > 0);
}

TEST_CASE("binding through one NAT returns that NAT's live mapping") {
  auto cfg = cfg_of(NatClassName::PortRestrictedCone, PortAllocPolicy::Sequential);
  auto world = make_world(cfg, std::nullopt, 22);
  auto out = stun_bind(world.net, world.client, 4001, stun_endpoint(world.net, "stun1"));
  REQUIRE(out.has_value());

  // Oracle: the device's own table snapshot.
  const auto& dev = world.net.nat_device(world.net.nat_id("inner"));
  const auto* entry =
      dev.find_eim(sim::EndpointAddress{world.net.node_host(world.client), 4001});
  REQUIRE(entry != nullptr);
  CHECK(out->mapped.reflexive ==
        sim::EndpointAddress{dev.external_host(), entry->external_port});
}

TEST_CASE("binding through a nested chain reports the outermost box") {
  auto inner = cfg_of(NatClassName::PortRestrictedCone, PortAllocPolicy::Sequential);
  auto outer = cfg_of(NatClassName::PortRestrictedCone, PortAllocPolicy::Random);
  outer.cgnat = true;
  auto world = make_world(inner, outer, 23);
  auto out = stun_bind(world.net, world.client, 4001, stun_endpoint(world.net, "stun1"));
  REQUIRE(out.has_value());
  const auto& outer_dev = world.net.nat_device(world.net.nat_id("outer"));
  CHECK(out->mapped.reflexive.host == outer_dev.external_host());
  REQUIRE(outer_dev.live_count() == 1);
  CHECK(out->mapped.reflexive.port == outer_dev.entries()[0]->external_port);
}

TEST_CASE("binding times out when the server does not exist") {
  auto world = make_world(std::nullopt, std::nullopt, 24);
  auto out = stun_bind(world.net, world.client, 4001, sim::EndpointAddress{4242, 3478},
                       sim::seconds(1));
  CHECK(!out.has_value());
}

TEST_CASE("classification oracle: all five classes, both allocators, exactly") {
  const NatClassName classes[] = {NatClassName::OpenInternet, NatClassName::FullCone,
                                  NatClassName::RestrictedCone, NatClassName::PortRestrictedCone,
                                  NatClassName::Symmetric};
  for (auto alloc : {PortAllocPolicy::Sequential, PortAllocPolicy::Random}) {
    for (auto expected : classes) {
      std::optional<NatConfig> cfg;
      if (expected != NatClassName::OpenInternet) cfg = cfg_of(expected, alloc);
      auto world = make_world(cfg, std::nullopt,
                              1000 + static_cast<std::uint64_t>(expected) * 2 +
                                  (alloc == PortAllocPolicy::Random));
      auto got = classify_nat(world.net, world.client, "stun1", "stun2");
      REQUIRE(got.has_value());
      CHECK_MESSAGE(*got == expected, "expected ", nat::nat_class_name(expected), " got ",
                    nat::nat_class_name(*got));
    }
  }
}

TEST_CASE("classification is inconclusive when servers are unreachable") {
  TopologySpec topo;
  topo.seed = 31;
  topo.nodes.push_back({"client", std::nullopt, std::nullopt});
  topo.nodes.push_back({"stun1", std::nullopt, std::nullopt});
  topo.nodes.push_back({"stun2", std::nullopt, std::nullopt});
  auto net = sim::build_network(topo);
  // No agents installed: requests fall on deaf ears.
  auto got = classify_nat(net, net.node_id("client"), "stun1", "stun2",
                          {.probe_timeout = sim::seconds(1)});
  CHECK(!got.has_value());
}

TEST_CASE("stun consistency under each mapping behavior") {
  SUBCASE("endpoint-independent: two servers observe one reflexive endpoint") {
    auto world = make_world(cfg_of(NatClassName::PortRestrictedCone, PortAllocPolicy::Random),
                            std::nullopt, 25);
    auto a = stun_bind(world.net, world.client, 4001, stun_endpoint(world.net, "stun1"));
    auto b = stun_bind(world.net, world.client, 4001, stun_endpoint(world.net, "stun2"));
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(a->mapped.reflexive == b->mapped.reflexive);
  }

  SUBCASE("destination-keyed: distinct entries, distinct ports") {
    auto world =
        make_world(cfg_of(NatClassName::Symmetric, PortAllocPolicy::Random), std::nullopt, 26);
    auto a = stun_bind(world.net, world.client, 4001, stun_endpoint(world.net, "stun1"));
    auto b = stun_bind(world.net, world.client, 4001, stun_endpoint(world.net, "stun2"));
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    // The table always holds two distinct entries; ports must differ while
    // both live.
    const auto& dev = world.net.nat_device(world.net.nat_id("inner"));
    CHECK(dev.live_count() == 2);
    CHECK(a->mapped.reflexive.port != b->mapped.reflexive.port);
  }
}

TEST_CASE("wire encodings round-trip and reject junk") {
  sim::RandomStream rng(0x3141);
  for (int round = 0; round < 500; ++round) {
    sim::WireCandidates c;
    c.local = {static_cast<sim::HostId>(rng.next_u64()),
               static_cast<sim::Port>(rng.uniform_in(1, 65535))};
    if (rng.uniform(2)) {
      c.reflexive = sim::EndpointAddress{static_cast<sim::HostId>(rng.next_u64()),
                                         static_cast<sim::Port>(rng.uniform_in(1, 65535))};
    }
    c.server_rtt_us = static_cast<std::uint32_t>(rng.next_u64());

    const auto id = rng.next_u64();
    auto reg = sim::decode_register(sim::encode_register(id, c));
    REQUIRE(reg.has_value());
    CHECK(reg->peer_id == id);
    CHECK(reg->candidates.local == c.local);
    CHECK(reg->candidates.reflexive == c.reflexive);
    CHECK(reg->candidates.server_rtt_us == c.server_rtt_us);

    const auto start = rng.next_u64();
    auto resp = sim::decode_exchange_response(
        sim::encode_exchange_response(sim::ExchangeStatus::Ok, id, c, start));
    REQUIRE(resp.has_value());
    CHECK(resp->punch_start_us == start);
    CHECK(resp->candidates.local == c.local);

    sim::Bytes inner = sim::encode_nonce(rng.next_u64());
    auto env = sim::decode_relay_forward(
        sim::encode_relay_forward(id, id ^ 1, sim::MsgKind::Probe, inner));
    REQUIRE(env.has_value());
    CHECK(env->inner_kind == sim::MsgKind::Probe);
    CHECK(env->inner_payload == inner);

    // Truncations never decode.
    auto bytes = sim::encode_register(id, c);
    bytes.pop_back();
    CHECK(!sim::decode_register(bytes).has_value());
  }

  // Spot checks of the fixed layout: big-endian host and port after the tag.
  auto stun = sim::encode_stun_response({0x01020304, 0x0506});
  REQUIRE(stun.size() == 6);
  CHECK(stun == sim::Bytes{0x01, 0x02, 0x03, 0x04, 0x05, 0x06});
  auto pmp = sim::encode_pmp_request(0x1122, 0x3344, 0x55667788);
  CHECK(pmp == sim::Bytes{0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88});
}

TEST_CASE("rendezvous exchange hands both peers the same future start") {
  TopologySpec topo;
  topo.seed = 27;
  topo.nodes.push_back({"pa", std::nullopt, std::nullopt});
  topo.nodes.push_back({"pb", std::nullopt, std::nullopt});
  topo.nodes.push_back({"rdv", std::nullopt, std::nullopt});
  auto net = sim::build_network(topo);
  auto server = discovery::RendezvousServer::install(net, "rdv");

  const auto id_a = discovery::peer_id_of("pa");
  const auto id_b = discovery::peer_id_of("pb");
  sim::WireCandidates ca{{net.node_host(net.node_id("pa")), 4000}, std::nullopt, 20000};
  ca.reflexive = sim::EndpointAddress{91, 1111};
  sim::WireCandidates cb{{net.node_host(net.node_id("pb")), 4000}, std::nullopt, 30000};
  cb.reflexive = sim::EndpointAddress{92, 2222};

  REQUIRE(discovery::register_peer(net, server, net.node_id("pa"), 4000, id_a, ca));
  REQUIRE(discovery::register_peer(net, server, net.node_id("pb"), 4000, id_b, cb));

  auto ex_a = discovery::exchange(net, server, net.node_id("pa"), 4000, id_a, id_b);
  auto ex_b = discovery::exchange(net, server, net.node_id("pb"), 4000, id_b, id_a);
  REQUIRE(ex_a.has_value());
  REQUIRE(ex_b.has_value());
  CHECK(ex_a->status == sim::ExchangeStatus::Ok);
  CHECK(ex_b->status == sim::ExchangeStatus::Ok);

  // Symmetry: what A learned about B is exactly what B registered.
  CHECK(ex_a->peer_candidates.local == cb.local);
  CHECK(ex_a->peer_candidates.reflexive == cb.reflexive);
  CHECK(ex_b->peer_candidates.local == ca.local);
  CHECK(ex_b->peer_candidates.reflexive == ca.reflexive);

  // One agreed start, strictly in the future of both responses.
  CHECK(ex_a->punch_start == ex_b->punch_start);
  CHECK(ex_a->punch_start > net.now() - sim::millis(50));

  SUBCASE("unknown peer is reported") {
    auto missing = discovery::exchange(net, server, net.node_id("pa"), 4000, id_a, 0xdead);
    REQUIRE(missing.has_value());
    CHECK(missing->status == sim::ExchangeStatus::UnknownPeer);
  }

  SUBCASE("re-registration propagates updated candidates") {
    cb.reflexive = sim::EndpointAddress{92, 3333};
    REQUIRE(discovery::register_peer(net, server, net.node_id("pb"), 4000, id_b, cb));
    auto again = discovery::exchange(net, server, net.node_id("pa"), 4000, id_a, id_b);
    REQUIRE(again.has_value());
    REQUIRE(again->peer_candidates.reflexive.has_value());
    CHECK(again->peer_candidates.reflexive->port == 3333);
  }
}
