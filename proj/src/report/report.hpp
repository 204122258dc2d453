#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scenario/build.hpp"
#include "traversal/matrix.hpp"

namespace natlab::report {

enum class OutputMode { Json, Text, Csv };
std::optional<OutputMode> output_mode_of(const std::string& name);

struct CommandResult {
  std::string rendered;
  bool domain_success = true;  // false maps to exit code 2
};

// classify: NAT class per peer.
CommandResult run_classify(const scenario::ScenarioSpec& spec, std::uint64_t seed,
                           OutputMode mode);

// punch: full discovery + strategy ladder between the scenario's punch pair.
// When trace_path is set, the complete event trace is written there as JSON
// lines.
CommandResult run_punch(const scenario::ScenarioSpec& spec, std::uint64_t seed, OutputMode mode,
                        const std::optional<std::string>& trace_path = std::nullopt);

// matrix: the carrier interop grid under the scenario policy.
CommandResult run_matrix(const scenario::ScenarioSpec& spec, std::uint64_t seed, OutputMode mode);

struct MonteCarloRow {
  std::uint32_t port_space = 0;
  std::uint32_t k = 0;
  std::uint32_t trials = 0;
  std::uint32_t successes = 0;
  double empirical_p = 0;
  double analytic_p = 0;
};

struct MonteCarloParams {
  std::uint32_t port_space = 1024;
  std::vector<std::uint32_t> ks;
  std::uint32_t trials = 500;
  std::uint32_t pps = 2000;
  std::uint32_t threads = 0;  // 0 = hardware concurrency
};

// Independent seeded birthday-punch simulations per (k, trial); aggregation
// is order-insensitive, so worker scheduling cannot change the output.
std::vector<MonteCarloRow> birthday_monte_carlo(const MonteCarloParams& params,
                                                std::uint64_t seed);
CommandResult run_montecarlo(const MonteCarloParams& params, std::uint64_t seed, OutputMode mode);

// One seeded birthday trial; exposed for the calibration suites.
bool birthday_trial(std::uint32_t port_space, std::uint32_t k, std::uint32_t pps,
                    std::uint64_t trial_seed);

struct EstimateRequest {
  enum class Kind { Rate, BruteForce, Birthday, Probes, Party, Retention };
  Kind kind = Kind::Rate;
  double a = 0, b = 0, c = 0;
};

// estimate prints JSON: {inputs, formula, value, provenance_note}.
CommandResult run_estimate(const EstimateRequest& req);

}  // namespace natlab::report
