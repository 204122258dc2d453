// natlab command-line front end. Talks to the engine exclusively through the
// C API in natlab.h.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "natlab.h"

namespace {

struct ScenarioDeleter {
  void operator()(nl_scenario* s) const { nl_scenario_free(s); }
};
struct ReportDeleter {
  void operator()(nl_report* r) const { nl_report_free(r); }
};
using ScenarioPtr = std::unique_ptr<nl_scenario, ScenarioDeleter>;
using ReportPtr = std::unique_ptr<nl_report, ReportDeleter>;

std::optional<std::uint64_t> env_seed() {
  if (const char* env = std::getenv("NATLAB_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0') return v;
    std::fprintf(stderr, "warning: ignoring malformed NATLAB_SEED '%s'\n", env);
  }
  return std::nullopt;
}

nl_output_mode mode_of(const std::string& name) {
  if (name == "text") return NL_OUT_TEXT;
  if (name == "csv") return NL_OUT_CSV;
  return NL_OUT_JSON;
}

ScenarioPtr load_scenario(const std::string& path, const std::string& policy) {
  nl_scenario* raw = nullptr;
  char* error = nullptr;
  nl_status status = nl_scenario_parse_file(path.c_str(), &raw, &error);
  if (status != NL_OK) {
    std::fprintf(stderr, "scenario error:\n%s", error ? error : "unknown\n");
    nl_string_free(error);
    return nullptr;
  }
  ScenarioPtr scenario(raw);
  if (!policy.empty() && nl_scenario_set_ladder(scenario.get(), policy.c_str()) != NL_OK) {
    std::fprintf(stderr, "invalid --policy '%s'\n", policy.c_str());
    return nullptr;
  }
  return scenario;
}

int finish(nl_status status, nl_report* raw) {
  ReportPtr report(raw);
  if (status != NL_OK || !report) {
    std::fprintf(stderr, "error: command failed (status %d)\n", int(status));
    return 1;
  }
  std::fputs(nl_report_text(report.get()), stdout);
  return nl_report_succeeded(report.get()) ? 0 : 2;
}

// Out-parameter fills must happen before finish() reads the pointer.
template <typename Fn>
int run_and_finish(Fn&& fn) {
  nl_report* report = nullptr;
  const nl_status status = fn(&report);
  return finish(status, report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"natlab: deterministic NAT traversal laboratory"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_mode = "text";
  std::string policy;
  std::string trace_path;
  const std::optional<std::uint64_t> seed_env = env_seed();
  std::uint64_t seed = seed_env.value_or(1);
  bool seed_given = false;

  auto add_common = [&](CLI::App* cmd, bool needs_scenario) {
    if (needs_scenario) {
      cmd->add_option("--scenario", scenario_path, "scenario file")->required();
      cmd->add_option("--policy", policy, "restrict the strategy ladder (comma list)");
    }
    cmd->add_option("--seed", seed, "root seed (default: NATLAB_SEED or 1)")
        ->each([&](const std::string&) { seed_given = true; });
    cmd->add_option("--out", out_mode, "output format: json|text|csv")
        ->check(CLI::IsMember({"json", "text", "csv"}));
  };

  auto* classify = app.add_subcommand("classify", "report each peer's NAT class");
  add_common(classify, true);

  auto* punch = app.add_subcommand("punch", "run the strategy ladder between two peers");
  add_common(punch, true);
  punch->add_option("--trace", trace_path, "write the full event trace (JSON lines) here");

  auto* matrix = app.add_subcommand("matrix", "carrier interop grid");
  add_common(matrix, true);

  auto* montecarlo = app.add_subcommand("montecarlo", "birthday collision calibration sweep");
  std::uint32_t port_space = 1024;
  std::uint32_t trials = 500;
  std::vector<std::uint32_t> ks;
  add_common(montecarlo, false);
  montecarlo->add_option("--port-space", port_space, "allocator pool / guess space P");
  montecarlo->add_option("--trials", trials, "trials per k");
  montecarlo->add_option("--k", ks, "per-side probe counts (comma list)")
      ->delimiter(',')
      ->required();
  out_mode = "text";

  auto* estimate = app.add_subcommand("estimate", "closed-form estimates (JSON)");
  estimate->require_subcommand(1);
  double upload_bps = 40e6, probe_bytes = 88;
  auto* est_rate = estimate->add_subcommand("rate", "max probe rate of an uplink");
  est_rate->add_option("--upload-bps", upload_bps, "uplink, bits/s");
  est_rate->add_option("--bytes", probe_bytes, "on-wire bytes per probe");

  double combinations = 65535, est_pps = 57000;
  auto* est_brute = estimate->add_subcommand("brute-force", "exhaustive scan duration");
  est_brute->add_option("--combinations", combinations, "ports or port pairs to cover");
  est_brute->add_option("--pps", est_pps, "probes per second");

  double bd_k = 54000, bd_space = 65535;
  auto* est_bd = estimate->add_subcommand("birthday", "double collision probability");
  est_bd->add_option("--k", bd_k, "probes per side");
  est_bd->add_option("--port-space", bd_space, "port space P");

  double target_p = 0.5, probes_space = 65535;
  auto* est_probes = estimate->add_subcommand("probes", "probes needed for a target probability");
  est_probes->add_option("--p", target_p, "target success probability");
  est_probes->add_option("--port-space", probes_space, "port space P");

  double people = 23, days = 365;
  auto* est_party = estimate->add_subcommand("party", "classic birthday paradox");
  est_party->add_option("--n", people, "people");
  est_party->add_option("--days", days, "days in the year");

  double customers = 25e6, connections = 33e3, record_bytes = 515;
  auto* est_ret = estimate->add_subcommand("retention", "per-day connection log volume");
  est_ret->add_option("--customers", customers, "subscriber count");
  est_ret->add_option("--connections", connections, "connections per subscriber per day");
  est_ret->add_option("--record-bytes", record_bytes, "bytes per log record (assumption)");

  CLI11_PARSE(app, argc, argv);
  (void)seed_given;

  if (*classify || *punch || *matrix) {
    auto scenario = load_scenario(scenario_path, policy);
    if (!scenario) return 1;
    // Precedence: --seed, then NATLAB_SEED, then the scenario's own seed.
    const std::uint64_t run_seed =
        seed_given ? seed : seed_env ? *seed_env : nl_scenario_seed(scenario.get());
    if (*classify) {
      return run_and_finish([&](nl_report** r) {
        return nl_run_classify(scenario.get(), run_seed, mode_of(out_mode), r);
      });
    }
    if (*punch) {
      return run_and_finish([&](nl_report** r) {
        return nl_run_punch(scenario.get(), run_seed, mode_of(out_mode),
                            trace_path.empty() ? nullptr : trace_path.c_str(), r);
      });
    }
    return run_and_finish([&](nl_report** r) {
      return nl_run_matrix(scenario.get(), run_seed, mode_of(out_mode), r);
    });
  }

  if (*montecarlo) {
    return run_and_finish([&](nl_report** r) {
      return nl_run_montecarlo(seed, port_space, ks.data(), ks.size(), trials, mode_of(out_mode),
                               r);
    });
  }

  if (*est_rate) {
    return run_and_finish(
        [&](nl_report** r) { return nl_estimate_max_probe_rate(upload_bps, probe_bytes, r); });
  }
  if (*est_brute) {
    return run_and_finish(
        [&](nl_report** r) { return nl_estimate_brute_force(combinations, est_pps, r); });
  }
  if (*est_bd) {
    return run_and_finish([&](nl_report** r) { return nl_estimate_birthday(bd_k, bd_space, r); });
  }
  if (*est_probes) {
    return run_and_finish(
        [&](nl_report** r) { return nl_estimate_probes_for_target(target_p, probes_space, r); });
  }
  if (*est_party) {
    return run_and_finish(
        [&](nl_report** r) { return nl_estimate_birthday_party(people, days, r); });
  }
  if (*est_ret) {
    return run_and_finish([&](nl_report** r) {
      return nl_estimate_retention(customers, connections, record_bytes, r);
    });
  }

  std::fprintf(stderr, "no command given\n");
  return 1;
}
