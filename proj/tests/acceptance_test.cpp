// Acceptance suite: one line per criterion, nonzero exit when any fails.

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "analytics/formulas.hpp"
#include "discovery/classify.hpp"
#include "report/report.hpp"
#include "support/generators.hpp"
#include "support/world.hpp"
#include "traversal/matrix.hpp"

using namespace natlab;
using testworld::eim_cone;
using testworld::make_punch_world;
using testworld::symmetric;

namespace {

int g_failures = 0;

void criterion(int n, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s — %s\n", ok ? "PASS" : "FAIL", n, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(const char* pattern, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c, d);
  return buf;
}

// ---- criterion 1: birthday headline numbers -------------------------------

void criterion_1() {
  const double p50 = analytics::birthday_success_probability({65535, 54000});
  const double p999 = analytics::birthday_success_probability({65535, 170000});
  const auto k50 = analytics::probes_for_target(0.5, 65535);
  const auto k999 = analytics::probes_for_target(0.999, 65535);
  const bool ok = p50 >= 0.47 && p50 <= 0.53 && p999 >= 0.998 &&
                  std::abs(double(k50) - 54000.0) <= 0.05 * 54000.0 &&
                  std::abs(double(k999) - 170000.0) <= 0.05 * 170000.0;
  criterion(1, "birthday headline numbers", ok,
            fmt("p(54000)=%.4f p(170000)=%.4f k(0.5)=%.0f k(0.999)=%.0f", p50, p999, double(k50),
                double(k999)));
}

// ---- criterion 2: Monte Carlo calibration ----------------------------------

void criterion_2() {
  report::MonteCarloParams params;
  params.port_space = 1024;
  params.ks = {853, 2693};
  params.trials = 500;
  params.pps = 2000;
  auto rows = report::birthday_monte_carlo(params, 0x5eedcafe);
  const double emp_half = rows[0].empirical_p;
  const double emp_high = rows[1].empirical_p;
  const bool ok = std::abs(emp_half - 0.5) <= 0.07 && emp_high >= 0.985;
  criterion(2, "Monte Carlo calibration at P=1024", ok,
            fmt("empirical(k=853)=%.3f (want 0.50±0.07), empirical(k=2693)=%.3f (want >=0.985)",
                emp_half, emp_high));
}

// ---- criterion 3: brute-force arithmetic and simulation --------------------

void criterion_3() {
  const double short_s = analytics::brute_force_duration_s(65535, 57000);
  const double long_s = analytics::brute_force_duration_s(4294836225ULL, 57000);
  bool ok = std::abs(short_s - 1.150) <= 0.001 && std::abs(long_s - 75348.0) <= 1.0;

  // Simulated scan: cone versus symmetric with a 1024-port block at 1024 pps.
  nat::NatConfig hard = symmetric();
  hard.port_lo = 1;
  hard.port_hi = 1024;
  auto world = make_punch_world({.chain_a = {eim_cone()}, .chain_b = {hard}, .seed = 303});
  auto g = traversal::gather_candidates(world.net, world.pa(), world.pb(), world.services);
  double sim_elapsed_s = -1;
  if (g.ok) {
    auto session = traversal::brute_force_punch(world.net, world.pa(), g.a.local_port, g.b.target,
                                                world.pb(), g.b.local_port, g.a.target.host, 1,
                                                1024, 1024, g.punch_start);
    if (session.established()) sim_elapsed_s = double(session.stats().elapsed) / 1e6;
  }
  ok = ok && sim_elapsed_s >= 0 && sim_elapsed_s <= 1.2;
  criterion(3, "brute-force arithmetic and simulated scan", ok,
            fmt("65535/57000=%.4fs, 4294836225/57000=%.0fs, simulated=%.3fs (want <=1.2)",
                short_s, long_s, sim_elapsed_s));
}

// ---- criterion 4: classification oracle ------------------------------------

void criterion_4() {
  using nat::NatClassName;
  using nat::PortAllocPolicy;
  int exact = 0, total = 0;
  std::string misses;
  const NatClassName classes[] = {NatClassName::OpenInternet, NatClassName::FullCone,
                                  NatClassName::RestrictedCone, NatClassName::PortRestrictedCone,
                                  NatClassName::Symmetric};
  for (auto alloc : {PortAllocPolicy::Sequential, PortAllocPolicy::Random}) {
    for (auto expected : classes) {
      ++total;
      sim::TopologySpec topo;
      topo.seed = 400 + total;
      std::optional<std::string> behind;
      if (expected != NatClassName::OpenInternet) {
        nat::NatConfig cfg;
        cfg.port_alloc = alloc;
        cfg.sequential_start = 2000;
        switch (expected) {
          case NatClassName::FullCone:
            cfg.mapping = nat::MappingBehavior::EndpointIndependent;
            cfg.filtering = nat::FilteringBehavior::EndpointIndependent;
            break;
          case NatClassName::RestrictedCone:
            cfg.mapping = nat::MappingBehavior::EndpointIndependent;
            cfg.filtering = nat::FilteringBehavior::AddressDependent;
            break;
          case NatClassName::PortRestrictedCone:
            cfg.mapping = nat::MappingBehavior::EndpointIndependent;
            cfg.filtering = nat::FilteringBehavior::AddressAndPortDependent;
            break;
          default:
            cfg.mapping = nat::MappingBehavior::AddressAndPortDependent;
            cfg.filtering = nat::FilteringBehavior::AddressAndPortDependent;
            break;
        }
        topo.nats.push_back({"box", cfg, std::nullopt});
        behind = "box";
      }
      topo.nodes.push_back({"client", behind, std::nullopt});
      topo.nodes.push_back({"stun1", std::nullopt, std::nullopt});
      topo.nodes.push_back({"stun2", std::nullopt, std::nullopt});
      auto net = sim::build_network(topo);
      discovery::install_stun_pair(net, "stun1", "stun2");
      auto got = discovery::classify_nat(net, net.node_id("client"), "stun1", "stun2");
      if (got && *got == expected) {
        ++exact;
      } else {
        misses += std::string(" ") + nat::nat_class_name(expected);
      }
    }
  }
  criterion(4, "classification oracle (5 classes x 2 allocators)", exact == total,
            fmt("%.0f/%.0f exact", double(exact), double(total)) + misses);
}

// ---- criterion 5: interop matrix reproduction ------------------------------

void criterion_5() {
  std::vector<traversal::CarrierSpec> carriers;
  nat::NatConfig cone = eim_cone();
  cone.cgnat = true;
  cone.port_lo = 10000;
  cone.port_hi = 18191;
  cone.exhaustion = nat::ExhaustionPolicy::EvictOldest;
  nat::NatConfig sym = symmetric();
  sym.cgnat = true;
  sym.port_lo = 10000;
  sym.port_hi = 18191;
  sym.exhaustion = nat::ExhaustionPolicy::EvictOldest;
  carriers.push_back({"north", cone});
  carriers.push_back({"south", cone});
  carriers.push_back({"east", sym});  // the symmetric carrier
  carriers.push_back({"west", cone});

  traversal::IcePolicy punch_only;
  punch_only.allowed = {traversal::Strategy::SimplePunch};
  punch_only.punch_timeout = sim::seconds(5);
  auto base = traversal::run_interop_matrix(carriers, punch_only, 0xf1fe);

  bool pattern_ok = base.total == 16;
  for (std::size_t i = 0; i < 4 && pattern_ok; ++i) {
    for (std::size_t j = 0; j < 4 && pattern_ok; ++j) {
      const bool involves_symmetric = i == 2 || j == 2;
      pattern_ok = base.cells[i][j].established == !involves_symmetric;
    }
  }
  const bool base_ok = pattern_ok && base.successes == 9 && base.interoperable == 3;

  traversal::IcePolicy with_birthday = punch_only;
  with_birthday.allowed = {traversal::Strategy::SimplePunch, traversal::Strategy::Birthday};
  with_birthday.pps = 57000;
  with_birthday.birthday_target = 0.9999;
  auto extended = traversal::run_interop_matrix(carriers, with_birthday, 0xf1fe);
  bool flipped = true;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) flipped = flipped && extended.cells[i][j].established;
  }

  criterion(5, "interop matrix: punch-only pattern and the birthday extension",
            base_ok && flipped,
            fmt("punch-only %.0f/16 cells, %.0f of 4 carriers; with birthday %.0f/16",
                double(base.successes), double(base.interoperable), double(extended.successes)));
}

// ---- criterion 6: classic birthday paradox ---------------------------------

void criterion_6() {
  const double p = analytics::birthday_party_probability(23, 365);
  // Independent route: reverse-order long double product.
  long double no_match = 1.0L;
  for (int i = 22; i >= 0; --i) no_match *= (365.0L - i) / 365.0L;
  const double oracle = double(1.0L - no_match);
  const bool ok = std::abs(p - 0.5073) <= 0.0001 && std::abs(p - oracle) <= 1e-12 &&
                  analytics::pair_count(23) == 253;
  criterion(6, "classic birthday paradox", ok,
            fmt("p(23,365)=%.6f oracle=%.6f pairs=%.0f", p, oracle,
                double(analytics::pair_count(23))));
}

// ---- criterion 7: retention estimate ----------------------------------------

void criterion_7() {
  const double bytes = analytics::retention_volume_bytes(25e6, 33e3, 515);
  const double tb = bytes / 1e12;
  auto rendered = report::run_estimate(
      {report::EstimateRequest::Kind::Retention, 25e6, 33e3, 515});
  const bool labeled = rendered.rendered.find("back-solved") != std::string::npos &&
                       rendered.rendered.find("assumption") != std::string::npos;
  const bool ok = std::abs(tb - 425.0) <= 1.0 && labeled;
  criterion(7, "retention volume with labeled record-size assumption", ok,
            fmt("%.3f TB/day, assumption label", tb) + (labeled ? " present" : " MISSING"));
}

// ---- criterion 8: property suites -------------------------------------------

bool props_netsim_determinism(std::string& detail) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    auto scenario = testgen::random_scripted_scenario(0xd00d + seed);
    if (testgen::run_scripted(scenario) != testgen::run_scripted(scenario)) {
      detail = fmt("trace mismatch at seed %.0f", double(seed));
      return false;
    }
  }
  detail = "1000 scripted scenarios, byte-identical reruns";
  return true;
}

bool props_natbox(std::string& detail) {
  sim::RandomStream meta(0xacce55);
  for (int round = 0; round < 1000; ++round) {
    auto cfg = testgen::random_nat_config(meta);
    cfg.external_host = 100;
    nat::NatDevice dev("prop", cfg, meta.next_u64());
    std::map<sim::EndpointAddress, std::pair<sim::Port, sim::SimTime>> eim_port;
    std::map<std::pair<sim::EndpointAddress, sim::EndpointAddress>,
             std::pair<sim::Port, sim::SimTime>>
        edm_port;
    sim::SimTime now = 0;
    for (int op = 0; op < 60; ++op) {
      now += meta.uniform(sim::seconds(1));
      const sim::EndpointAddress inside{static_cast<sim::HostId>(1 + meta.uniform(3)),
                                        static_cast<sim::Port>(1000 + meta.uniform(4))};
      const sim::EndpointAddress remote{static_cast<sim::HostId>(200 + meta.uniform(5)),
                                        static_cast<sim::Port>(7000 + meta.uniform(5))};
      sim::Datagram d;
      d.src = inside;
      d.dst = remote;

      if (meta.uniform(4) == 0) {
        const sim::EndpointAddress stranger{7777, 1234};
        sim::Datagram in;
        in.src = stranger;
        in.dst = {100, static_cast<sim::Port>(1 + meta.uniform(65000))};
        auto admitted = dev.translate_inbound(in, now);
        if (admitted && cfg.filtering != nat::FilteringBehavior::EndpointIndependent) {
          detail = "stranger admitted through a filtered box";
          return false;
        }
      } else {
        auto out = dev.translate_outbound(d, now);
        if (out.status == nat::NatDevice::OutboundResult::Status::Ok) {
          // Ports are pinned only while the entry stays alive; an idle spell
          // past the TTL legitimately re-allocates.
          if (cfg.mapping == nat::MappingBehavior::EndpointIndependent) {
            auto [it, fresh] =
                eim_port.try_emplace(inside, std::make_pair(out.translated.src.port, now));
            if (!fresh) {
              if (now - it->second.second <= cfg.mapping_ttl &&
                  it->second.first != out.translated.src.port) {
                detail = "EIM external port changed across destinations";
                return false;
              }
              it->second = {out.translated.src.port, now};
            }
          } else {
            auto key = std::make_pair(inside, remote);
            auto [it, fresh] =
                edm_port.try_emplace(key, std::make_pair(out.translated.src.port, now));
            if (!fresh) {
              if (now - it->second.second <= cfg.mapping_ttl &&
                  it->second.first != out.translated.src.port) {
                detail = "EDM pair changed port while live";
                return false;
              }
              it->second = {out.translated.src.port, now};
            }
          }
        }
      }

      if (dev.live_count() > cfg.max_mappings) {
        detail = "capacity exceeded";
        return false;
      }
      std::set<sim::Port> ports;
      for (const auto* e : dev.entries()) {
        if (!ports.insert(e->external_port).second) {
          detail = "duplicate live external port";
          return false;
        }
      }
    }
    // EDM freshness re-stated: live entries never share an external port.
    std::set<sim::Port> live_ports;
    for (const auto* e : dev.entries()) {
      if (!live_ports.insert(e->external_port).second) {
        detail = "two live entries share a port";
        return false;
      }
    }
  }
  detail = "1000 random boxes x 60 ops";
  return true;
}

bool props_punch_completeness(std::string& detail) {
  const nat::FilteringBehavior filters[] = {nat::FilteringBehavior::EndpointIndependent,
                                            nat::FilteringBehavior::AddressDependent,
                                            nat::FilteringBehavior::AddressAndPortDependent};
  sim::RandomStream meta(0xc0de);
  for (int round = 0; round < 1000; ++round) {
    auto world = make_punch_world({.chain_a = {eim_cone(filters[meta.uniform(3)])},
                                   .chain_b = {eim_cone(filters[meta.uniform(3)])},
                                   .seed = 80000 + std::uint64_t(round)});
    auto g = traversal::gather_candidates(world.net, world.pa(), world.pb(), world.services);
    if (!g.ok) {
      detail = fmt("gather failed at round %.0f", double(round));
      return false;
    }
    auto session = traversal::simple_punch(world.net, g.a, g.b, g.punch_start,
                                           {.probe_interval = sim::millis(200),
                                            .timeout = sim::seconds(8)});
    if (!session.established()) {
      detail = fmt("cone pair failed to punch at round %.0f", double(round));
      return false;
    }
    // Punch correctness: app datagrams flow both ways without more
    // coordination.
    if (!traversal::session_send_app(world.net, session, true, {1}) ||
        !traversal::session_send_app(world.net, session, false, {2})) {
      detail = fmt("app traffic failed after punch at round %.0f", double(round));
      return false;
    }
  }
  detail = "1000 cone pairs punched, app both ways";
  return true;
}

bool props_punch_soundness(std::string& detail) {
  sim::RandomStream meta(0x50714d);
  int cases = 0;
  while (cases < 1000) {
    testworld::WorldSpec spec;
    spec.seed = 90000 + std::uint64_t(cases);
    spec.chain_a = {symmetric()};
    // Port-strict far sides; loose filters are legitimately punchable.
    switch (meta.uniform(2)) {
      case 0: spec.chain_b = {eim_cone()}; break;
      default: spec.chain_b = {symmetric()}; break;
    }
    auto world = make_punch_world(spec);
    auto g = traversal::gather_candidates(world.net, world.pa(), world.pb(), world.services);
    if (!g.ok) {
      detail = "gather failed";
      return false;
    }
    auto session = traversal::simple_punch(world.net, g.a, g.b, g.punch_start,
                                           {.probe_interval = sim::millis(300),
                                            .timeout = sim::seconds(3)});
    if (session.established()) {
      detail = fmt("punch through an endpoint-dependent mapper at case %.0f", double(cases));
      return false;
    }
    ++cases;
  }
  detail = "1000 mixed/hard pairs, zero plain punches";
  return true;
}

bool props_ladder_monotonicity(std::string& detail) {
  sim::RandomStream meta(0x1adde5);
  for (int round = 0; round < 1000; ++round) {
    testworld::WorldSpec spec;
    spec.seed = 100000 + std::uint64_t(round);
    spec.with_relay = meta.uniform(2) == 0;
    auto chain_of = [&]() -> std::vector<nat::NatConfig> {
      switch (meta.uniform(4)) {
        case 0: return {};
        case 1: return {eim_cone()};
        case 2: {
          auto pmp = eim_cone();
          pmp.pmp_enabled = true;
          return {pmp};
        }
        default: {
          auto hard = symmetric();
          hard.port_lo = 1;
          hard.port_hi = 256;
          hard.exhaustion = nat::ExhaustionPolicy::EvictOldest;
          return {hard};
        }
      }
    };
    spec.chain_a = chain_of();
    spec.chain_b = chain_of();
    auto world = make_punch_world(spec);
    auto da = traversal::discover_peer(world.net, "pa", world.services);
    auto db = traversal::discover_peer(world.net, "pb", world.services);
    traversal::IcePolicy policy;
    policy.pps = 4096;
    policy.punch_timeout = sim::seconds(2);
    policy.birthday_target = 0.999;
    auto outcome = traversal::ice_connect(world.net, da, db, world.services, policy);

    // Attempts follow the canonical order and stop at the first success.
    const auto& ladder = traversal::strategy_ladder();
    std::size_t canon = 0;
    for (const auto& attempt : outcome.attempts) {
      while (canon < ladder.size() && ladder[canon] != attempt.strategy) ++canon;
      if (canon == ladder.size()) {
        detail = fmt("attempt order broke at round %.0f", double(round));
        return false;
      }
    }
    for (std::size_t i = 0; i + 1 < outcome.attempts.size(); ++i) {
      if (outcome.attempts[i].success) {
        detail = fmt("continued past a success at round %.0f", double(round));
        return false;
      }
    }
    if (outcome.chosen &&
        !outcome.attempts.empty() &&
        outcome.attempts.back().strategy != *outcome.chosen) {
      detail = "chosen strategy is not the last attempt";
      return false;
    }
  }
  detail = "1000 random ladders, ordered attempts, first success wins";
  return true;
}

bool props_chunking_safety(std::string& detail) {
  sim::RandomStream meta(0xc417a6);
  for (int round = 0; round < 1000; ++round) {
    nat::NatConfig small = symmetric();
    small.port_lo = 1;
    small.port_hi = 256;
    small.max_mappings = 6 + meta.uniform(20);
    small.mapping_ttl = sim::seconds(1 + meta.uniform(3));
    auto world = make_punch_world({.chain_a = {small},
                                   .chain_b = {small},
                                   .seed = 110000 + std::uint64_t(round)});
    const auto chunk = static_cast<std::uint32_t>(1 + meta.uniform(small.max_mappings));
    const auto k = chunk * (1 + static_cast<std::uint32_t>(meta.uniform(3)));

    traversal::BirthdaySideSpec a;
    a.node = world.pa();
    a.peer_external_host = world.net.nat_device(world.net.nat_id("nat_b0")).external_host();
    a.peer_range_lo = 1;
    a.peer_range_hi = 256;
    traversal::BirthdaySideSpec b = a;
    b.node = world.pb();
    b.peer_external_host = world.net.nat_device(world.net.nat_id("nat_a0")).external_host();

    traversal::BirthdayOptions opts;
    opts.transmissions = 1 + static_cast<std::uint32_t>(meta.uniform(3));
    (void)traversal::birthday_punch(world.net, a, b, k, 4096, chunk, world.net.now() + 1000,
                                    opts);
    if (traversal::chain_table_full_rejections(world.net, world.pa()) +
            traversal::chain_table_full_rejections(world.net, world.pb()) >
        0) {
      detail = fmt("table-full rejection with chunk<=capacity at round %.0f", double(round));
      return false;
    }
  }
  detail = "1000 chunked birthday runs, zero capacity rejections";
  return true;
}

bool props_birthday_calibration(std::string& detail) {
  // Empirical success at the half and 99.9% budgets across pool sizes.
  for (std::uint32_t space : {256u, 1024u, 4096u}) {
    const auto k_half = static_cast<std::uint32_t>(analytics::probes_for_target(0.5, space));
    const auto k_high = static_cast<std::uint32_t>(analytics::probes_for_target(0.999, space));
    report::MonteCarloParams params;
    params.port_space = space;
    params.ks = {k_half, k_high};
    params.trials = 500;
    params.pps = space >= 4096 ? 8000 : 2000;
    auto rows = report::birthday_monte_carlo(params, 0xca11b + space);
    if (std::abs(rows[0].empirical_p - 0.5) > 0.07) {
      detail = fmt("P=%.0f k=%.0f empirical=%.3f outside 0.5±0.07", double(space), double(k_half),
                   rows[0].empirical_p);
      return false;
    }
    if (rows[1].empirical_p < 0.985) {
      detail = fmt("P=%.0f k=%.0f empirical=%.3f below 0.985", double(space), double(k_high),
                   rows[1].empirical_p);
      return false;
    }
  }
  detail = "P in {256,1024,4096}: 0.5±0.07 at the half budget, >=0.985 at the 99.9% budget";
  return true;
}

void criterion_8() {
  struct Suite {
    const char* name;
    bool (*run)(std::string&);
  };
  const Suite suites[] = {
      {"netsim determinism", props_netsim_determinism},
      {"natbox invariants", props_natbox},
      {"punch completeness+correctness", props_punch_completeness},
      {"punch soundness", props_punch_soundness},
      {"ladder monotonicity", props_ladder_monotonicity},
      {"chunking safety", props_chunking_safety},
      {"birthday calibration", props_birthday_calibration},
  };
  bool all = true;
  std::string summary;
  for (const auto& suite : suites) {
    std::string detail;
    const bool ok = suite.run(detail);
    all = all && ok;
    summary += std::string(ok ? "[ok " : "[FAIL ") + suite.name + ": " + detail + "] ";
  }
  criterion(8, "property suites", all, summary);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  if (g_failures) {
    std::printf("ACCEPTANCE: %d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("ACCEPTANCE: all criteria passed\n");
  return 0;
}
