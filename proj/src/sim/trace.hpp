#pragma once

#include <string>
#include <vector>

#include "sim/datagram.hpp"

namespace natlab::sim {

enum class TraceType { Send, Deliver, Drop };

enum class DropCause {
  None,
  Loss,                // Bernoulli loss on a link
  Unroutable,          // destination host unknown in the public domain
  Filtered,            // NAT had no admitting mapping for an inbound packet
  TableFull,           // NAT mapping table at capacity
  PortExhausted,       // NAT allocator found no free external port
  HairpinUnsupported,  // packet addressed to own external endpoint, hairpinning off
};

const char* trace_type_name(TraceType t);
const char* drop_cause_name(DropCause c);

struct TraceEvent {
  SimTime time_us = 0;
  TraceType type = TraceType::Send;
  EndpointAddress src;
  EndpointAddress dst;
  MsgKind kind = MsgKind::App;
  std::uint64_t seq = 0;
  DropCause cause = DropCause::None;  // set on drops only
};

using EventTrace = std::vector<TraceEvent>;

// One JSON object per line: time_us, type, src, dst, kind, seq (+ cause on drops).
std::string to_json_line(const TraceEvent& e);
std::string to_jsonl(const EventTrace& trace);

}  // namespace natlab::sim
