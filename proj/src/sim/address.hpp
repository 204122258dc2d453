#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

namespace natlab::sim {

// 32-bit host identifier, standing in for an IPv4 address. 0 means "unassigned".
using HostId = std::uint32_t;
using Port = std::uint16_t;

constexpr HostId kUnassignedHost = 0;

struct EndpointAddress {
  HostId host = kUnassignedHost;
  Port port = 0;

  auto operator<=>(const EndpointAddress&) const = default;

  bool valid() const { return host != kUnassignedHost && port != 0; }
};

inline std::string to_string(const EndpointAddress& a) {
  return std::to_string(a.host) + ":" + std::to_string(a.port);
}

}  // namespace natlab::sim

template <>
struct std::hash<natlab::sim::EndpointAddress> {
  std::size_t operator()(const natlab::sim::EndpointAddress& a) const noexcept {
    return (static_cast<std::size_t>(a.host) << 16) ^ a.port;
  }
};
