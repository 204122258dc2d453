#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace natlab::sim {

// Deterministic random stream. mt19937_64 raw output is fully specified by the
// standard, and all reductions below are explicit, so a given seed yields the
// same draw sequence on every platform.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 bits of entropy.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, n), debiased by rejection.
  std::uint64_t uniform(std::uint64_t n);

  // Uniform in [lo, hi], inclusive.
  std::uint64_t uniform_in(std::uint64_t lo, std::uint64_t hi) {
    return lo + uniform(hi - lo + 1);
  }

  bool chance(double p) { return p > 0.0 && next_unit() < p; }

 private:
  std::mt19937_64 engine_;
};

// Derives a child seed from a root seed and a stable label, so every node,
// link and NAT gets an independent stream under one scenario seed.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label);

// Stable 64-bit peer identity for a node name, shared by the rendezvous and
// relay protocols.
std::uint64_t stable_peer_id(std::string_view node_name);

}  // namespace natlab::sim
