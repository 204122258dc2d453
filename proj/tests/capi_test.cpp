// Exercises the public C surface exactly as an embedder would: through
// natlab.h and the shared library only.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <string>

#include "natlab.h"

namespace {

const char* kPunchScenario = R"(
seed 7
node alice peer behind=homeA
node bob   peer behind=homeB
node stun1 stun
node stun2 stun
node rdv   rendezvous
nat homeA mapping=eim filtering=address_port alloc=random
nat homeB mapping=eim filtering=address_port alloc=random
)";

const char* kBlockedScenario = R"(
node a peer behind=carrier
node b peer behind=home
node stun1 stun
node stun2 stun
node rdv rendezvous
nat carrier mapping=edm filtering=address_port alloc=random ports=10000-11023
nat home mapping=eim filtering=address_port alloc=random
policy ladder=simple_punch punch_timeout_ms=3000
)";

struct Report {
  nl_report* raw = nullptr;
  ~Report() { nl_report_free(raw); }
  std::string text() const { return raw ? nl_report_text(raw) : ""; }
};

struct Scenario {
  nl_scenario* raw = nullptr;
  ~Scenario() { nl_scenario_free(raw); }
};

}  // namespace

TEST_CASE("version string") {
  CHECK(nl_version() != nullptr);
  CHECK(std::strlen(nl_version()) > 0);
}

TEST_CASE("parse errors come back with line anchors") {
  Scenario s;
  char* error = nullptr;
  auto status = nl_scenario_parse("node a peer behind=ghost\n", &s.raw, &error);
  CHECK(status == NL_ERR_PARSE);
  CHECK(s.raw == nullptr);
  REQUIRE(error != nullptr);
  CHECK(std::string(error).find("line 1") != std::string::npos);
  CHECK(std::string(error).find("ghost") != std::string::npos);
  nl_string_free(error);
}

TEST_CASE("nonexistent file is a parse error") {
  Scenario s;
  char* error = nullptr;
  CHECK(nl_scenario_parse_file("/no/such/file.nls", &s.raw, &error) == NL_ERR_PARSE);
  nl_string_free(error);
}

TEST_CASE("classify through the shared surface") {
  Scenario s;
  REQUIRE(nl_scenario_parse(kPunchScenario, &s.raw, nullptr) == NL_OK);
  CHECK(nl_scenario_seed(s.raw) == 7);

  Report r;
  REQUIRE(nl_run_classify(s.raw, 7, NL_OUT_TEXT, &r.raw) == NL_OK);
  CHECK(nl_report_succeeded(r.raw) == 1);
  CHECK(r.text() == "alice: port_restricted_cone\nbob: port_restricted_cone\n");
}

TEST_CASE("punch reports success and failure as domain outcomes") {
  Scenario ok;
  REQUIRE(nl_scenario_parse(kPunchScenario, &ok.raw, nullptr) == NL_OK);
  Report success;
  REQUIRE(nl_run_punch(ok.raw, 7, NL_OUT_JSON, nullptr, &success.raw) == NL_OK);
  CHECK(nl_report_succeeded(success.raw) == 1);
  CHECK(success.text().find("\"established\": true") != std::string::npos);

  Scenario blocked;
  REQUIRE(nl_scenario_parse(kBlockedScenario, &blocked.raw, nullptr) == NL_OK);
  Report failure;
  REQUIRE(nl_run_punch(blocked.raw, 1, NL_OUT_JSON, nullptr, &failure.raw) == NL_OK);
  CHECK(nl_report_succeeded(failure.raw) == 0);
  CHECK(failure.text().find("timeout") != std::string::npos);
}

TEST_CASE("ladder override validates strategy names") {
  Scenario s;
  REQUIRE(nl_scenario_parse(kPunchScenario, &s.raw, nullptr) == NL_OK);
  CHECK(nl_scenario_set_ladder(s.raw, "simple_punch,relay") == NL_OK);
  CHECK(nl_scenario_set_ladder(s.raw, "teleport") == NL_ERR_INVALID_ARGUMENT);
  CHECK(nl_scenario_set_ladder(s.raw, "") == NL_ERR_INVALID_ARGUMENT);
  CHECK(nl_scenario_set_ladder(nullptr, "relay") == NL_ERR_INVALID_ARGUMENT);
}

TEST_CASE("identical runs render identical bytes") {
  Scenario s;
  REQUIRE(nl_scenario_parse(kPunchScenario, &s.raw, nullptr) == NL_OK);
  Report first, second;
  REQUIRE(nl_run_punch(s.raw, 99, NL_OUT_JSON, nullptr, &first.raw) == NL_OK);
  REQUIRE(nl_run_punch(s.raw, 99, NL_OUT_JSON, nullptr, &second.raw) == NL_OK);
  CHECK(first.text() == second.text());
}

TEST_CASE("estimates render JSON values") {
  Report brute;
  REQUIRE(nl_estimate_brute_force(65535, 57000, &brute.raw) == NL_OK);
  CHECK(brute.text().find("\"value\": 1.15") != std::string::npos);

  Report party;
  REQUIRE(nl_estimate_birthday_party(23, 365, &party.raw) == NL_OK);
  CHECK(party.text().find("\"pair_count\": 253") != std::string::npos);

  Report bad;
  CHECK(nl_estimate_probes_for_target(1.5, 65535, &bad.raw) == NL_ERR_INVALID_ARGUMENT);
  CHECK(bad.raw == nullptr);
}

TEST_CASE("montecarlo validates arguments and renders CSV") {
  Report bad;
  CHECK(nl_run_montecarlo(1, 0, nullptr, 0, 10, NL_OUT_CSV, &bad.raw) ==
        NL_ERR_INVALID_ARGUMENT);

  const uint32_t ks[] = {54};
  Report ok;
  REQUIRE(nl_run_montecarlo(1, 64, ks, 1, 40, NL_OUT_CSV, &ok.raw) == NL_OK);
  CHECK(ok.text().rfind("P,k,trials,successes,empirical_p,analytic_p\n", 0) == 0);
  CHECK(ok.text().find("64,54,40,") != std::string::npos);
}

TEST_CASE("matrix needs carriers") {
  Scenario s;
  REQUIRE(nl_scenario_parse(kPunchScenario, &s.raw, nullptr) == NL_OK);
  Report r;
  CHECK(nl_run_matrix(s.raw, 1, NL_OUT_TEXT, &r.raw) == NL_ERR_UNSUPPORTED);
}
