#pragma once

#include <cstdint>

namespace natlab::sim {

// Simulation clock value: microseconds since simulation start.
using SimTime = std::uint64_t;

constexpr SimTime kMicrosPerMilli = 1'000;
constexpr SimTime kMicrosPerSecond = 1'000'000;

// Sentinel for "never" (infinite TTL, no deadline).
constexpr SimTime kTimeNever = UINT64_MAX;

constexpr SimTime millis(std::uint64_t ms) { return ms * kMicrosPerMilli; }
constexpr SimTime seconds(std::uint64_t s) { return s * kMicrosPerSecond; }

}  // namespace natlab::sim
