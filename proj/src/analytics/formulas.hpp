#pragma once

#include <cstdint>
#include <stdexcept>

namespace natlab::analytics {

// Sending budget of an uplink, in bits per second and on-wire bytes per probe
// (payload plus frame overhead).
struct LinkBudget {
  double upload_bps = 0;
  double bytes_per_probe_on_wire = 0;
};

// The headline uplink assumed throughout: 40 Mbit/s up. With the nominal
// 8-byte payload + 84-byte framing (92 bytes) it yields 54347 pps; an 88-byte
// wire size reproduces the quoted ~57000 pps. The constant stays a parameter
// and estimate output labels the discrepancy.
constexpr double kDefaultUploadBps = 40e6;
constexpr double kHeadlineProbeWireBytes = 88;
constexpr double kNominalProbeWireBytes = 92;

// Floor(upload_bps / (8 * bytes_per_probe)). Rejects non-positive inputs.
std::uint64_t max_probe_rate(const LinkBudget& budget);

// combinations / pps in seconds; exact to the millisecond.
double brute_force_duration_s(std::uint64_t combinations, std::uint64_t pps);
std::uint64_t brute_force_duration_ms(std::uint64_t combinations, std::uint64_t pps);

struct CollisionModel {
  std::uint64_t port_space = 1;      // P
  std::uint64_t probes_per_side = 0;  // k
};

// Probability that two sides, each opening k random mappings and firing at k
// random ports out of P, collide on a mirrored {source, destination} pair:
// 1 - exp(-k^2 / P^2).
double birthday_success_probability(const CollisionModel& m);

// Single-sided variant: one side holds a fixed known endpoint, so only the
// guesser's k draws must hit one of the k open ports: 1 - exp(-k^2 / P).
double single_collision_probability(const CollisionModel& m);

// Smallest per-side probe count reaching success probability p over port
// space P: ceil(P * sqrt(-ln(1-p))). Rejects p >= 1.
std::uint64_t probes_for_target(double p, std::uint64_t port_space);

// Classic birthday paradox, exact product form: 1 - prod_{i<n} (1 - i/days).
double birthday_party_probability(std::uint64_t people, std::uint64_t days);
std::uint64_t pair_count(std::uint64_t people);

// customers * connections_per_day * bytes_per_record, in bytes per day.
double retention_volume_bytes(double customers, double connections_per_day,
                              double bytes_per_record);

// The record size is not given anywhere; 515 bytes is back-solved from the
// quoted daily volume and must be labeled an assumption wherever reported.
constexpr double kBackSolvedRecordBytes = 515;

struct FormulaError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace natlab::analytics
