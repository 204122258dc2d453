#include "analytics/formulas.hpp"

#include <cmath>

namespace natlab::analytics {

std::uint64_t max_probe_rate(const LinkBudget& budget) {
  if (budget.upload_bps <= 0 || budget.bytes_per_probe_on_wire <= 0) {
    throw FormulaError("link budget fields must be positive");
  }
  return static_cast<std::uint64_t>(budget.upload_bps / (8.0 * budget.bytes_per_probe_on_wire));
}

std::uint64_t brute_force_duration_ms(std::uint64_t combinations, std::uint64_t pps) {
  if (pps == 0) throw FormulaError("pps must be positive");
  // Integer rounding keeps the value exact at millisecond precision.
  const unsigned __int128 numerator =
      static_cast<unsigned __int128>(combinations) * 1000 + pps / 2;
  return static_cast<std::uint64_t>(numerator / pps);
}

double brute_force_duration_s(std::uint64_t combinations, std::uint64_t pps) {
  if (pps == 0) throw FormulaError("pps must be positive");
  return static_cast<double>(combinations) / static_cast<double>(pps);
}

double birthday_success_probability(const CollisionModel& m) {
  if (m.port_space == 0) throw FormulaError("port space must be >= 1");
  const double ratio = static_cast<double>(m.probes_per_side) / static_cast<double>(m.port_space);
  return -std::expm1(-ratio * ratio);
}

double single_collision_probability(const CollisionModel& m) {
  if (m.port_space == 0) throw FormulaError("port space must be >= 1");
  const double k = static_cast<double>(m.probes_per_side);
  return -std::expm1(-k * k / static_cast<double>(m.port_space));
}

std::uint64_t probes_for_target(double p, std::uint64_t port_space) {
  if (p < 0 || p >= 1) throw FormulaError("target probability must lie in [0, 1)");
  if (port_space == 0) throw FormulaError("port space must be >= 1");
  if (p == 0) return 0;
  const double k = static_cast<double>(port_space) * std::sqrt(-std::log1p(-p));
  return static_cast<std::uint64_t>(std::ceil(k));
}

double birthday_party_probability(std::uint64_t people, std::uint64_t days) {
  if (days == 0) throw FormulaError("days must be >= 1");
  if (people > days) return 1.0;  // pigeonhole
  double no_match = 1.0;
  for (std::uint64_t i = 0; i < people; ++i) {
    no_match *= 1.0 - static_cast<double>(i) / static_cast<double>(days);
  }
  return 1.0 - no_match;
}

std::uint64_t pair_count(std::uint64_t people) { return people * (people - 1) / 2; }

double retention_volume_bytes(double customers, double connections_per_day,
                              double bytes_per_record) {
  if (customers < 0 || connections_per_day < 0 || bytes_per_record < 0) {
    throw FormulaError("retention inputs must be non-negative");
  }
  return customers * connections_per_day * bytes_per_record;
}

}  // namespace natlab::analytics
