#include "natlab.h"

#include <cstring>
#include <new>
#include <string>

#include "analytics/formulas.hpp"
#include "report/report.hpp"
#include "scenario/scenario.hpp"

using namespace natlab;

struct nl_scenario {
  scenario::ScenarioSpec spec;
};

struct nl_report {
  std::string text;
  bool succeeded = true;
};

namespace {

char* dup_string(const std::string& s) {
  char* out = new (std::nothrow) char[s.size() + 1];
  if (!out) return nullptr;
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

report::OutputMode to_mode(nl_output_mode mode) {
  switch (mode) {
    case NL_OUT_TEXT: return report::OutputMode::Text;
    case NL_OUT_CSV: return report::OutputMode::Csv;
    case NL_OUT_JSON:
    default: return report::OutputMode::Json;
  }
}

nl_status wrap_result(report::CommandResult result, nl_report** out) {
  if (!out) return NL_ERR_INVALID_ARGUMENT;
  auto* r = new (std::nothrow) nl_report{std::move(result.rendered), result.domain_success};
  if (!r) return NL_ERR_INTERNAL;
  *out = r;
  return NL_OK;
}

nl_status parse_common(scenario::ParseResult parsed, nl_scenario** out, char** error_out) {
  if (error_out) *error_out = nullptr;
  if (!out) return NL_ERR_INVALID_ARGUMENT;
  *out = nullptr;
  if (!parsed.ok()) {
    if (error_out) *error_out = dup_string(scenario::format_errors(parsed.errors));
    return NL_ERR_PARSE;
  }
  auto* s = new (std::nothrow) nl_scenario{std::move(*parsed.spec)};
  if (!s) return NL_ERR_INTERNAL;
  *out = s;
  return NL_OK;
}

template <typename Fn>
nl_status guarded(nl_report** out, Fn&& fn) {
  if (!out) return NL_ERR_INVALID_ARGUMENT;
  *out = nullptr;
  try {
    return wrap_result(fn(), out);
  } catch (const analytics::FormulaError&) {
    return NL_ERR_INVALID_ARGUMENT;
  } catch (const sim::BuildError&) {
    return NL_ERR_UNSUPPORTED;
  } catch (const std::invalid_argument&) {
    return NL_ERR_INVALID_ARGUMENT;
  } catch (...) {
    return NL_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

const char* nl_version(void) { return "natlab 1.0.0"; }

void nl_string_free(char* s) { delete[] s; }

nl_status nl_scenario_parse(const char* text, nl_scenario** out, char** error_out) {
  if (!text) return NL_ERR_INVALID_ARGUMENT;
  return parse_common(scenario::parse_scenario(text), out, error_out);
}

nl_status nl_scenario_parse_file(const char* path, nl_scenario** out, char** error_out) {
  if (!path) return NL_ERR_INVALID_ARGUMENT;
  return parse_common(scenario::parse_scenario_file(path), out, error_out);
}

void nl_scenario_free(nl_scenario* s) { delete s; }

uint64_t nl_scenario_seed(const nl_scenario* s) { return s ? s->spec.seed : 1; }

nl_status nl_scenario_set_ladder(nl_scenario* s, const char* comma_separated) {
  if (!s || !comma_separated) return NL_ERR_INVALID_ARGUMENT;
  std::vector<traversal::Strategy> ladder;
  std::string item;
  std::string input(comma_separated);
  std::size_t pos = 0;
  while (pos <= input.size()) {
    auto comma = input.find(',', pos);
    if (comma == std::string::npos) comma = input.size();
    item = input.substr(pos, comma - pos);
    pos = comma + 1;
    if (item.empty()) continue;
    bool found = false;
    for (traversal::Strategy st : traversal::strategy_ladder()) {
      if (item == traversal::strategy_name(st)) {
        ladder.push_back(st);
        found = true;
        break;
      }
    }
    if (!found) return NL_ERR_INVALID_ARGUMENT;
  }
  if (ladder.empty()) return NL_ERR_INVALID_ARGUMENT;
  s->spec.policy.allowed = std::move(ladder);
  return NL_OK;
}

nl_status nl_run_classify(const nl_scenario* s, uint64_t seed, nl_output_mode mode,
                          nl_report** out) {
  if (!s) return NL_ERR_INVALID_ARGUMENT;
  return guarded(out, [&] { return report::run_classify(s->spec, seed, to_mode(mode)); });
}

nl_status nl_run_punch(const nl_scenario* s, uint64_t seed, nl_output_mode mode,
                       const char* trace_path, nl_report** out) {
  if (!s) return NL_ERR_INVALID_ARGUMENT;
  std::optional<std::string> trace;
  if (trace_path) trace = std::string(trace_path);
  return guarded(out, [&] { return report::run_punch(s->spec, seed, to_mode(mode), trace); });
}

nl_status nl_run_matrix(const nl_scenario* s, uint64_t seed, nl_output_mode mode,
                        nl_report** out) {
  if (!s) return NL_ERR_INVALID_ARGUMENT;
  return guarded(out, [&] { return report::run_matrix(s->spec, seed, to_mode(mode)); });
}

nl_status nl_run_montecarlo(uint64_t seed, uint32_t port_space, const uint32_t* ks,
                            size_t k_count, uint32_t trials, nl_output_mode mode,
                            nl_report** out) {
  if (!ks || k_count == 0 || port_space == 0 || port_space > 65535 || trials == 0) {
    return NL_ERR_INVALID_ARGUMENT;
  }
  report::MonteCarloParams params;
  params.port_space = port_space;
  params.ks.assign(ks, ks + k_count);
  params.trials = trials;
  return guarded(out, [&] { return report::run_montecarlo(params, seed, to_mode(mode)); });
}

nl_status nl_estimate_max_probe_rate(double upload_bps, double bytes_per_probe, nl_report** out) {
  report::EstimateRequest req{report::EstimateRequest::Kind::Rate, upload_bps, bytes_per_probe, 0};
  return guarded(out, [&] { return report::run_estimate(req); });
}

nl_status nl_estimate_brute_force(double combinations, double pps, nl_report** out) {
  report::EstimateRequest req{report::EstimateRequest::Kind::BruteForce, combinations, pps, 0};
  return guarded(out, [&] { return report::run_estimate(req); });
}

nl_status nl_estimate_birthday(double probes_per_side, double port_space, nl_report** out) {
  report::EstimateRequest req{report::EstimateRequest::Kind::Birthday, probes_per_side,
                              port_space, 0};
  return guarded(out, [&] { return report::run_estimate(req); });
}

nl_status nl_estimate_probes_for_target(double probability, double port_space, nl_report** out) {
  report::EstimateRequest req{report::EstimateRequest::Kind::Probes, probability, port_space, 0};
  return guarded(out, [&] { return report::run_estimate(req); });
}

nl_status nl_estimate_birthday_party(double people, double days, nl_report** out) {
  report::EstimateRequest req{report::EstimateRequest::Kind::Party, people, days, 0};
  return guarded(out, [&] { return report::run_estimate(req); });
}

nl_status nl_estimate_retention(double customers, double connections_per_day,
                                double bytes_per_record, nl_report** out) {
  report::EstimateRequest req{report::EstimateRequest::Kind::Retention, customers,
                              connections_per_day, bytes_per_record};
  return guarded(out, [&] { return report::run_estimate(req); });
}

const char* nl_report_text(const nl_report* r) { return r ? r->text.c_str() : ""; }

int nl_report_succeeded(const nl_report* r) { return r && r->succeeded ? 1 : 0; }

void nl_report_free(nl_report* r) { delete r; }

}  // extern "C"
