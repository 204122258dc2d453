#pragma once

#include <cstddef>
#include <optional>

#include "sim/address.hpp"
#include "sim/time.hpp"
#include "sim/wire.hpp"

namespace natlab::sim {

// Fixed per-frame overhead charged on top of the payload: UDP, IP and
// ethernet framing for a minimum-size datagram.
constexpr std::size_t kFrameOverheadBytes = 84;

struct Datagram {
  EndpointAddress src;
  EndpointAddress dst;
  MsgKind kind = MsgKind::App;
  Bytes payload;

  std::size_t wire_bytes() const { return kFrameOverheadBytes + 1 + payload.size(); }
};

struct LinkProfile {
  SimTime latency_us = millis(10);
  double loss_rate = 0.0;
  std::optional<std::uint32_t> rate_cap_pps;
};

}  // namespace natlab::sim
