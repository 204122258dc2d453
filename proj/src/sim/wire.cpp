#include "sim/wire.hpp"

namespace natlab::sim {

const char* msg_kind_name(MsgKind k) {
  switch (k) {
    case MsgKind::StunRequest: return "stun_req";
    case MsgKind::StunResponse: return "stun_resp";
    case MsgKind::Probe: return "probe";
    case MsgKind::ProbeAck: return "probe_ack";
    case MsgKind::App: return "app";
    case MsgKind::PmpRequest: return "pmp_req";
    case MsgKind::PmpResponse: return "pmp_resp";
    case MsgKind::RelayForward: return "relay_fwd";
    case MsgKind::AltReplyRequest: return "alt_reply_req";
    case MsgKind::Register: return "register";
    case MsgKind::Exchange: return "exchange";
    case MsgKind::AckAck: return "ack_ack";
  }
  return "unknown";
}

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(Bytes& out, std::uint32_t v) {
  put_u16(out, static_cast<std::uint16_t>(v >> 16));
  put_u16(out, static_cast<std::uint16_t>(v));
}

void put_u64(Bytes& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
  put_u32(out, static_cast<std::uint32_t>(v));
}

std::optional<std::uint8_t> ByteReader::u8() {
  if (pos_ + 1 > data_->size()) return std::nullopt;
  return (*data_)[pos_++];
}

std::optional<std::uint16_t> ByteReader::u16() {
  auto hi = u8();
  auto lo = u8();
  if (!hi || !lo) return std::nullopt;
  return static_cast<std::uint16_t>((*hi << 8) | *lo);
}

std::optional<std::uint32_t> ByteReader::u32() {
  auto hi = u16();
  auto lo = u16();
  if (!hi || !lo) return std::nullopt;
  return (static_cast<std::uint32_t>(*hi) << 16) | *lo;
}

std::optional<std::uint64_t> ByteReader::u64() {
  auto hi = u32();
  auto lo = u32();
  if (!hi || !lo) return std::nullopt;
  return (static_cast<std::uint64_t>(*hi) << 32) | *lo;
}

namespace {

void put_endpoint(Bytes& out, EndpointAddress a) {
  put_u32(out, a.host);
  put_u16(out, a.port);
}

std::optional<EndpointAddress> read_endpoint(ByteReader& r) {
  auto host = r.u32();
  auto port = r.u16();
  if (!host || !port) return std::nullopt;
  return EndpointAddress{*host, *port};
}

}  // namespace

Bytes encode_stun_response(EndpointAddress observed) {
  Bytes out;
  put_endpoint(out, observed);
  return out;
}

std::optional<EndpointAddress> decode_stun_response(const Bytes& payload) {
  ByteReader r(payload);
  auto e = read_endpoint(r);
  if (!e || !r.done()) return std::nullopt;
  return e;
}

Bytes encode_alt_reply_request(AltReplyMode mode) {
  return Bytes{static_cast<std::uint8_t>(mode)};
}

std::optional<AltReplyMode> decode_alt_reply_request(const Bytes& payload) {
  ByteReader r(payload);
  auto m = r.u8();
  if (!m || !r.done() || *m > 2) return std::nullopt;
  return static_cast<AltReplyMode>(*m);
}

void put_candidates(Bytes& out, const WireCandidates& c) {
  put_endpoint(out, c.local);
  out.push_back(c.reflexive ? 1 : 0);
  put_endpoint(out, c.reflexive.value_or(EndpointAddress{}));
  put_u32(out, c.server_rtt_us);
}

std::optional<WireCandidates> read_candidates(ByteReader& r) {
  WireCandidates c;
  auto local = read_endpoint(r);
  auto flag = r.u8();
  auto refl = read_endpoint(r);
  auto rtt = r.u32();
  if (!local || !flag || !refl || !rtt) return std::nullopt;
  c.local = *local;
  if (*flag) c.reflexive = *refl;
  c.server_rtt_us = *rtt;
  return c;
}

Bytes encode_register(std::uint64_t peer_id, const WireCandidates& c) {
  Bytes out;
  put_u64(out, peer_id);
  put_candidates(out, c);
  return out;
}

std::optional<RegisterMsg> decode_register(const Bytes& payload) {
  ByteReader r(payload);
  auto id = r.u64();
  auto c = read_candidates(r);
  if (!id || !c || !r.done()) return std::nullopt;
  return RegisterMsg{*id, *c};
}

Bytes encode_exchange_request(std::uint64_t own_id, std::uint64_t peer_id) {
  Bytes out;
  put_u64(out, own_id);
  put_u64(out, peer_id);
  return out;
}

std::optional<ExchangeRequest> decode_exchange_request(const Bytes& payload) {
  ByteReader r(payload);
  auto own = r.u64();
  auto peer = r.u64();
  if (!own || !peer || !r.done()) return std::nullopt;
  return ExchangeRequest{*own, *peer};
}

Bytes encode_exchange_response(ExchangeStatus status, std::uint64_t peer_id,
                               const WireCandidates& c, std::uint64_t punch_start_us) {
  Bytes out;
  out.push_back(static_cast<std::uint8_t>(status));
  put_u64(out, peer_id);
  put_candidates(out, c);
  put_u64(out, punch_start_us);
  return out;
}

std::optional<ExchangeResponse> decode_exchange_response(const Bytes& payload) {
  ByteReader r(payload);
  auto status = r.u8();
  auto id = r.u64();
  auto c = read_candidates(r);
  auto start = r.u64();
  if (!status || !id || !c || !start || !r.done() || *status > 1) return std::nullopt;
  return ExchangeResponse{static_cast<ExchangeStatus>(*status), *id, *c, *start};
}

Bytes encode_nonce(std::uint64_t nonce) {
  Bytes out;
  put_u64(out, nonce);
  return out;
}

std::optional<std::uint64_t> decode_nonce(const Bytes& payload) {
  ByteReader r(payload);
  auto n = r.u64();
  if (!n || !r.done()) return std::nullopt;
  return n;
}

Bytes encode_pmp_request(Port internal_port, Port requested_port, std::uint32_t lifetime_s) {
  Bytes out;
  put_u16(out, internal_port);
  put_u16(out, requested_port);
  put_u32(out, lifetime_s);
  return out;
}

std::optional<PmpRequestMsg> decode_pmp_request(const Bytes& payload) {
  ByteReader r(payload);
  auto internal = r.u16();
  auto requested = r.u16();
  auto lifetime = r.u32();
  if (!internal || !requested || !lifetime || !r.done()) return std::nullopt;
  return PmpRequestMsg{*internal, *requested, *lifetime};
}

Bytes encode_pmp_response(PmpStatus status, Port granted_port, std::uint32_t lifetime_s) {
  Bytes out;
  out.push_back(static_cast<std::uint8_t>(status));
  put_u16(out, granted_port);
  put_u32(out, lifetime_s);
  return out;
}

std::optional<PmpResponseMsg> decode_pmp_response(const Bytes& payload) {
  ByteReader r(payload);
  auto status = r.u8();
  auto granted = r.u16();
  auto lifetime = r.u32();
  if (!status || !granted || !lifetime || !r.done() || *status > 2) return std::nullopt;
  return PmpResponseMsg{static_cast<PmpStatus>(*status), *granted, *lifetime};
}

Bytes encode_relay_forward(std::uint64_t sender_id, std::uint64_t target_id,
                           MsgKind inner_kind, const Bytes& inner_payload) {
  Bytes out;
  put_u64(out, sender_id);
  put_u64(out, target_id);
  out.push_back(static_cast<std::uint8_t>(inner_kind));
  out.insert(out.end(), inner_payload.begin(), inner_payload.end());
  return out;
}

std::optional<RelayForwardMsg> decode_relay_forward(const Bytes& payload) {
  ByteReader r(payload);
  auto sender = r.u64();
  auto target = r.u64();
  auto kind = r.u8();
  if (!sender || !target || !kind || *kind < 0x01 || *kind > 0x0C) return std::nullopt;
  RelayForwardMsg msg;
  msg.sender_id = *sender;
  msg.target_id = *target;
  msg.inner_kind = static_cast<MsgKind>(*kind);
  msg.inner_payload.assign(payload.begin() + 17, payload.end());
  return msg;
}

}  // namespace natlab::sim
