#pragma once

#include "traversal/ice.hpp"

namespace natlab::traversal {

struct CarrierSpec {
  std::string name;
  nat::NatConfig config;
};

struct MatrixCell {
  bool established = false;
  Strategy strategy = Strategy::SimplePunch;
  FailReason reason = FailReason::None;
};

struct MatrixResult {
  std::vector<std::string> carriers;
  std::vector<std::vector<MatrixCell>> cells;  // [row origin][column target]
  std::uint32_t successes = 0;
  std::uint32_t total = 0;
  // Carriers with at least one working cell in their row or column.
  std::uint32_t interoperable = 0;

  double success_ratio() const { return total == 0 ? 0.0 : double(successes) / double(total); }
};

// Simulated interop grid: every ordered carrier pair gets a fresh two-phone
// topology plus coordination servers, and one ice_connect run under the
// policy.
MatrixResult run_interop_matrix(const std::vector<CarrierSpec>& carriers, const IcePolicy& policy,
                                std::uint64_t seed);

}  // namespace natlab::traversal
