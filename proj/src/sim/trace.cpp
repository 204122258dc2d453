#include "sim/trace.hpp"

namespace natlab::sim {

const char* trace_type_name(TraceType t) {
  switch (t) {
    case TraceType::Send: return "send";
    case TraceType::Deliver: return "deliver";
    case TraceType::Drop: return "drop";
  }
  return "unknown";
}

const char* drop_cause_name(DropCause c) {
  switch (c) {
    case DropCause::None: return "none";
    case DropCause::Loss: return "loss";
    case DropCause::Unroutable: return "unroutable";
    case DropCause::Filtered: return "filtered";
    case DropCause::TableFull: return "table_full";
    case DropCause::PortExhausted: return "port_exhausted";
    case DropCause::HairpinUnsupported: return "hairpin_unsupported";
  }
  return "unknown";
}

std::string to_json_line(const TraceEvent& e) {
  std::string out;
  out.reserve(128);
  out += "{\"time_us\":";
  out += std::to_string(e.time_us);
  out += ",\"type\":\"";
  out += trace_type_name(e.type);
  out += "\",\"src\":\"";
  out += to_string(e.src);
  out += "\",\"dst\":\"";
  out += to_string(e.dst);
  out += "\",\"kind\":\"";
  out += msg_kind_name(e.kind);
  out += "\",\"seq\":";
  out += std::to_string(e.seq);
  if (e.type == TraceType::Drop) {
    out += ",\"cause\":\"";
    out += drop_cause_name(e.cause);
    out += "\"";
  }
  out += "}";
  return out;
}

std::string to_jsonl(const EventTrace& trace) {
  std::string out;
  for (const auto& e : trace) {
    out += to_json_line(e);
    out += '\n';
  }
  return out;
}

}  // namespace natlab::sim
