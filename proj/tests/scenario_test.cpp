#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "report/report.hpp"
#include "scenario/build.hpp"
#include "scenario/scenario.hpp"

using namespace natlab;
using scenario::parse_scenario;

namespace {

const char* kMinimal = R"(
node x peer
node y peer
node stun1 stun
node stun2 stun
node rdv rendezvous
)";

}  // namespace

TEST_CASE("minimal two-open-hosts scenario parses") {
  auto result = parse_scenario(kMinimal);
  REQUIRE(result.ok());
  CHECK(result.spec->nodes.size() == 5);
  CHECK(result.spec->nats.empty());
  CHECK(result.spec->peer_names() == std::vector<std::string>{"x", "y"});
}

TEST_CASE("the carrier interop scenario has the experiment's shape") {
  auto result = scenario::parse_scenario_file(std::string(SCENARIO_DIR) + "/fiveg_interop.nls");
  REQUIRE_MESSAGE(result.ok(), scenario::format_errors(result.errors));
  const auto& spec = *result.spec;
  CHECK(spec.carriers.size() == 4);
  int symmetric = 0;
  for (const auto& c : spec.carriers) {
    symmetric += c.config.mapping == nat::MappingBehavior::AddressAndPortDependent;
  }
  CHECK(symmetric == 1);
  CHECK(spec.peer_names().size() == 3);  // two phones and a desktop
  CHECK(spec.server_names(scenario::NodeKind::Rendezvous).size() == 1);
  CHECK(spec.server_names(scenario::NodeKind::Stun).size() == 2);
  CHECK(spec.policy.allowed == std::vector<traversal::Strategy>{traversal::Strategy::SimplePunch});
  CHECK(spec.punch_peers.has_value());
}

TEST_CASE("errors carry line numbers") {
  SUBCASE("undefined NAT reference") {
    auto result = parse_scenario("node a peer behind=ghost\nnode s stun\n");
    REQUIRE(!result.ok());
    REQUIRE(result.errors.size() == 1);
    CHECK(result.errors[0].line == 1);
    CHECK(result.errors[0].message.find("ghost") != std::string::npos);
  }

  SUBCASE("unknown directive") {
    auto result = parse_scenario("\n\nnonsense here\n");
    REQUIRE(!result.ok());
    CHECK(result.errors[0].line == 3);
  }

  SUBCASE("invalid enum value") {
    auto result = parse_scenario("nat n mapping=weird\n");
    REQUIRE(!result.ok());
    CHECK(result.errors[0].line == 1);
    CHECK(result.errors[0].message.find("mapping") != std::string::npos);
  }

  SUBCASE("unknown key") {
    auto result = parse_scenario("nat n mapping=eim color=blue\n");
    REQUIRE(!result.ok());
    CHECK(result.errors[0].message.find("color") != std::string::npos);
  }

  SUBCASE("duplicate names") {
    auto result = parse_scenario("node a peer\nnat a mapping=eim\nnode stun stun\n");
    REQUIRE(!result.ok());
    CHECK(result.errors[0].line == 2);
  }

  SUBCASE("several errors are all reported") {
    auto result =
        parse_scenario("node a peer behind=ghost\nwat\nnat n mapping=odd\nnode s stun\n");
    REQUIRE(!result.ok());
    CHECK(result.errors.size() == 3);
  }

  SUBCASE("server nodes cannot hide behind NATs") {
    auto result = parse_scenario("nat n mapping=eim\nnode s stun behind=n\nnode p peer\n");
    REQUIRE(!result.ok());
    CHECK(result.errors[0].line == 2);
  }

  SUBCASE("peers without any public server") {
    auto result = parse_scenario("node p peer\n");
    REQUIRE(!result.ok());
    CHECK(result.errors[0].message.find("server") != std::string::npos);
  }
}

TEST_CASE("link and policy options parse") {
  auto result = parse_scenario(R"(
default_link latency_ms=4
node a peer
node b peer
node stun1 stun
node stun2 stun
node rdv rendezvous
link a b latency_us=2500 loss=0.25 pps=500
policy ladder=simple_punch,relay pps=9000 birthday_k=777 chunk=16
)");
  REQUIRE_MESSAGE(result.ok(), scenario::format_errors(result.errors));
  const auto& spec = *result.spec;
  CHECK(spec.default_link.latency_us == 4000);
  REQUIRE(spec.links.size() == 1);
  CHECK(spec.links[0].profile.latency_us == 2500);
  CHECK(spec.links[0].profile.loss_rate == doctest::Approx(0.25));
  CHECK(spec.links[0].profile.rate_cap_pps == 500);
  CHECK(spec.policy.pps == 9000);
  CHECK(spec.policy.birthday_k == 777);
  CHECK(spec.policy.chunk == 16);
  REQUIRE(spec.policy.allowed.size() == 2);
  CHECK(spec.policy.allowed[0] == traversal::Strategy::SimplePunch);
  CHECK(spec.policy.allowed[1] == traversal::Strategy::Relay);
}

TEST_CASE("nest wires inner boxes behind outer ones") {
  auto result = parse_scenario(R"(
node p peer behind=home
node stun1 stun
node stun2 stun
node rdv rendezvous
nat cg mapping=eim filtering=address_port
nat home mapping=eim filtering=address_port
nest home cg
)");
  REQUIRE_MESSAGE(result.ok(), scenario::format_errors(result.errors));
  auto built = scenario::build_scenario(*result.spec, 1);
  auto chain = built.net.nat_chain(built.net.node_id("p"));
  REQUIRE(chain.size() == 2);
  CHECK(built.net.nat_device(chain[0]).name() == "home");
  CHECK(built.net.nat_device(chain[1]).name() == "cg");
}

TEST_CASE("same scenario, seed and command render byte-identical output") {
  auto parsed = scenario::parse_scenario_file(std::string(SCENARIO_DIR) + "/simple_punch.nls");
  REQUIRE(parsed.ok());
  auto first = report::run_punch(*parsed.spec, 99, report::OutputMode::Json);
  auto second = report::run_punch(*parsed.spec, 99, report::OutputMode::Json);
  CHECK(first.rendered == second.rendered);
  CHECK(first.domain_success);

  auto c1 = report::run_classify(*parsed.spec, 5, report::OutputMode::Text);
  auto c2 = report::run_classify(*parsed.spec, 5, report::OutputMode::Text);
  CHECK(c1.rendered == c2.rendered);
  CHECK(c1.rendered == "alice: port_restricted_cone\nbob: port_restricted_cone\n");
}

TEST_CASE("punch against the symmetric carrier fails under punch-only policy") {
  auto parsed = scenario::parse_scenario_file(std::string(SCENARIO_DIR) + "/symmetric_blocked.nls");
  REQUIRE(parsed.ok());
  auto spec = *parsed.spec;
  spec.policy.allowed = {traversal::Strategy::SimplePunch};
  auto result = report::run_punch(spec, 1, report::OutputMode::Json);
  CHECK(!result.domain_success);

  // The full ladder recovers through the scan.
  auto full = *parsed.spec;
  auto recovered = report::run_punch(full, 1, report::OutputMode::Text);
  CHECK(recovered.domain_success);
  CHECK(recovered.rendered.find("brute_force") != std::string::npos);
}

TEST_CASE("montecarlo rows stay within sampling noise of the model") {
  report::MonteCarloParams params;
  params.port_space = 256;
  params.ks = {100, 214};
  params.trials = 200;
  params.pps = 2000;
  auto rows = report::birthday_monte_carlo(params, 2024);
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    const double sigma =
        std::sqrt(row.analytic_p * (1.0 - row.analytic_p) / double(row.trials));
    CHECK_MESSAGE(std::abs(row.empirical_p - row.analytic_p) <= 3.0 * sigma + 0.02, "k=", row.k,
                  " empirical=", row.empirical_p, " analytic=", row.analytic_p);
  }

  // Deterministic rendering.
  auto r1 = report::run_montecarlo(params, 2024, report::OutputMode::Csv);
  auto r2 = report::run_montecarlo(params, 2024, report::OutputMode::Csv);
  CHECK(r1.rendered == r2.rendered);
  CHECK(r1.rendered.find("P,k,trials,successes,empirical_p,analytic_p\n") == 0);
}

TEST_CASE("estimate renders the headline numbers as JSON") {
  report::EstimateRequest brute{report::EstimateRequest::Kind::BruteForce, 65535, 57000, 0};
  auto out = report::run_estimate(brute);
  CHECK(out.rendered.find("\"value\": 1.15") != std::string::npos);

  report::EstimateRequest retention{report::EstimateRequest::Kind::Retention, 25e6, 33e3, 515};
  auto ret = report::run_estimate(retention);
  CHECK(ret.rendered.find("assumption") != std::string::npos);
  CHECK(ret.rendered.find("424.875") != std::string::npos);

  report::EstimateRequest rate{report::EstimateRequest::Kind::Rate, 40e6, 88, 0};
  auto rate_out = report::run_estimate(rate);
  CHECK(rate_out.rendered.find("56818") != std::string::npos);
  CHECK(rate_out.rendered.find("54347") != std::string::npos);  // the documented discrepancy
}

TEST_CASE("matrix on the interop scenario renders the grid") {
  auto parsed = scenario::parse_scenario_file(std::string(SCENARIO_DIR) + "/fiveg_interop.nls");
  REQUIRE(parsed.ok());
  auto out = report::run_matrix(*parsed.spec, 23, report::OutputMode::Text);
  CHECK(out.rendered.find("success: 9/16") != std::string::npos);
  CHECK(out.rendered.find("3 of 4 carriers interoperable") != std::string::npos);

  auto again = report::run_matrix(*parsed.spec, 23, report::OutputMode::Json);
  auto same = report::run_matrix(*parsed.spec, 23, report::OutputMode::Json);
  CHECK(again.rendered == same.rendered);
}
