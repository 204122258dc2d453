/*
 * natlab — deterministic NAT traversal laboratory.
 *
 * C API over the simulation core: opaque handles, integer status codes,
 * caller-freed strings. Every run is a pure function of (scenario, seed,
 * command); repeated calls produce byte-identical reports.
 */

#ifndef NATLAB_H
#define NATLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nl_status {
  NL_OK = 0,
  NL_ERR_INVALID_ARGUMENT = 1, /* bad flag/parameter values */
  NL_ERR_PARSE = 2,            /* scenario text rejected; see error string */
  NL_ERR_UNSUPPORTED = 3,      /* scenario lacks what the command needs */
  NL_ERR_IO = 4,               /* file not readable/writable */
  NL_ERR_INTERNAL = 5
} nl_status;

typedef enum nl_output_mode {
  NL_OUT_JSON = 0,
  NL_OUT_TEXT = 1,
  NL_OUT_CSV = 2
} nl_output_mode;

/* Opaque parsed scenario. */
typedef struct nl_scenario nl_scenario;

/* Opaque command report: rendered output plus the domain outcome. */
typedef struct nl_report nl_report;

const char* nl_version(void);

/* Frees a string returned through an out-parameter. NULL is fine. */
void nl_string_free(char* s);

/*
 * Parses scenario text (or a file). On NL_ERR_PARSE, *error_out (when
 * non-NULL) receives the line-anchored error list; free with nl_string_free.
 */
nl_status nl_scenario_parse(const char* text, nl_scenario** out, char** error_out);
nl_status nl_scenario_parse_file(const char* path, nl_scenario** out, char** error_out);
void nl_scenario_free(nl_scenario* s);

/* Seed declared by the scenario file (1 when unset). */
uint64_t nl_scenario_seed(const nl_scenario* s);

/*
 * Restricts the strategy ladder to a comma-separated subset, e.g.
 * "simple_punch,birthday". Names: direct, port_mapping, simple_punch,
 * brute_force, birthday, hairpin, relay. Returns NL_ERR_INVALID_ARGUMENT on
 * an unknown name.
 */
nl_status nl_scenario_set_ladder(nl_scenario* s, const char* comma_separated);

/*
 * Commands. Each renders a report in the requested mode. A report is
 * produced even when the traversal itself failed; check
 * nl_report_succeeded() for the domain outcome (the CLI maps it to exit
 * code 2). trace_path, when non-NULL, receives the full event trace as JSON
 * lines (punch only).
 */
nl_status nl_run_classify(const nl_scenario* s, uint64_t seed, nl_output_mode mode,
                          nl_report** out);
nl_status nl_run_punch(const nl_scenario* s, uint64_t seed, nl_output_mode mode,
                       const char* trace_path, nl_report** out);
nl_status nl_run_matrix(const nl_scenario* s, uint64_t seed, nl_output_mode mode,
                        nl_report** out);

/*
 * Monte Carlo sweep over per-side probe counts ks[0..k_count). port_space is
 * both the NAT allocator pool and the guessing range of each trial.
 */
nl_status nl_run_montecarlo(uint64_t seed, uint32_t port_space, const uint32_t* ks,
                            size_t k_count, uint32_t trials, nl_output_mode mode,
                            nl_report** out);

/* Closed-form estimates; reports are always JSON. */
nl_status nl_estimate_max_probe_rate(double upload_bps, double bytes_per_probe, nl_report** out);
nl_status nl_estimate_brute_force(double combinations, double pps, nl_report** out);
nl_status nl_estimate_birthday(double probes_per_side, double port_space, nl_report** out);
nl_status nl_estimate_probes_for_target(double probability, double port_space, nl_report** out);
nl_status nl_estimate_birthday_party(double people, double days, nl_report** out);
nl_status nl_estimate_retention(double customers, double connections_per_day,
                                double bytes_per_record, nl_report** out);

/* Rendered output; owned by the report. */
const char* nl_report_text(const nl_report* r);
/* 1 when the domain operation succeeded (punch established, classify
 * conclusive, ...), 0 otherwise. */
int nl_report_succeeded(const nl_report* r);
void nl_report_free(nl_report* r);

#ifdef __cplusplus
}
#endif

#endif /* NATLAB_H */
