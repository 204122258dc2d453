#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sim/address.hpp"

namespace natlab::sim {

// Wire tags. A datagram on the wire is the tag byte followed by the payload
// bytes; all multi-byte fields are big-endian.
enum class MsgKind : std::uint8_t {
  StunRequest = 0x01,      // no payload
  StunResponse = 0x02,     // 4-byte host + 2-byte port (the observed source)
  Probe = 0x03,            // 8-byte session nonce
  ProbeAck = 0x04,         // 8-byte session nonce
  App = 0x05,              // application bytes
  PmpRequest = 0x06,       // 2-byte internal port + 2-byte requested port + 4-byte lifetime (s)
  PmpResponse = 0x07,      // status byte + 2-byte granted port + 4-byte lifetime (s)
  RelayForward = 0x08,     // 8-byte sender id + 8-byte target id + inner encoded datagram
  AltReplyRequest = 0x09,  // mode byte: 0=same, 1=alt-port, 2=alt-host
  Register = 0x0A,         // 8-byte peer id + candidate encoding
  Exchange = 0x0B,         // request: 8-byte own id + 8-byte peer id
                           // response: status + 8-byte peer id + candidates + 8-byte start
  AckAck = 0x0C,           // 8-byte session nonce
};

const char* msg_kind_name(MsgKind k);

using Bytes = std::vector<std::uint8_t>;

// Big-endian primitives.
void put_u16(Bytes& out, std::uint16_t v);
void put_u32(Bytes& out, std::uint32_t v);
void put_u64(Bytes& out, std::uint64_t v);

class ByteReader {
 public:
  explicit ByteReader(const Bytes& b) : data_(&b) {}
  std::optional<std::uint8_t> u8();
  std::optional<std::uint16_t> u16();
  std::optional<std::uint32_t> u32();
  std::optional<std::uint64_t> u64();
  bool done() const { return pos_ == data_->size(); }

 private:
  const Bytes* data_;
  std::size_t pos_ = 0;
};

// STUN
Bytes encode_stun_response(EndpointAddress observed);
std::optional<EndpointAddress> decode_stun_response(const Bytes& payload);

enum class AltReplyMode : std::uint8_t { Same = 0, AltPort = 1, AltHost = 2 };
Bytes encode_alt_reply_request(AltReplyMode mode);
std::optional<AltReplyMode> decode_alt_reply_request(const Bytes& payload);

// Candidates carried by the rendezvous protocol.
struct WireCandidates {
  EndpointAddress local;
  std::optional<EndpointAddress> reflexive;
  std::uint32_t server_rtt_us = 0;  // peer's own estimate, used for punch scheduling
};
void put_candidates(Bytes& out, const WireCandidates& c);
std::optional<WireCandidates> read_candidates(ByteReader& r);

Bytes encode_register(std::uint64_t peer_id, const WireCandidates& c);
struct RegisterMsg {
  std::uint64_t peer_id;
  WireCandidates candidates;
};
std::optional<RegisterMsg> decode_register(const Bytes& payload);

Bytes encode_exchange_request(std::uint64_t own_id, std::uint64_t peer_id);
struct ExchangeRequest {
  std::uint64_t own_id;
  std::uint64_t peer_id;
};
std::optional<ExchangeRequest> decode_exchange_request(const Bytes& payload);

enum class ExchangeStatus : std::uint8_t { Ok = 0, UnknownPeer = 1 };
Bytes encode_exchange_response(ExchangeStatus status, std::uint64_t peer_id,
                               const WireCandidates& c, std::uint64_t punch_start_us);
struct ExchangeResponse {
  ExchangeStatus status;
  std::uint64_t peer_id;
  WireCandidates candidates;
  std::uint64_t punch_start_us;
};
std::optional<ExchangeResponse> decode_exchange_response(const Bytes& payload);

// Punch probes.
Bytes encode_nonce(std::uint64_t nonce);
std::optional<std::uint64_t> decode_nonce(const Bytes& payload);

// Port mapping protocol.
Bytes encode_pmp_request(Port internal_port, Port requested_port, std::uint32_t lifetime_s);
struct PmpRequestMsg {
  Port internal_port;
  Port requested_port;
  std::uint32_t lifetime_s;
};
std::optional<PmpRequestMsg> decode_pmp_request(const Bytes& payload);

enum class PmpStatus : std::uint8_t { Ok = 0, Unsupported = 1, NoResources = 2 };
Bytes encode_pmp_response(PmpStatus status, Port granted_port, std::uint32_t lifetime_s);
struct PmpResponseMsg {
  PmpStatus status;
  Port granted_port;
  std::uint32_t lifetime_s;
};
std::optional<PmpResponseMsg> decode_pmp_response(const Bytes& payload);

// Relay envelope: inner datagram encoded as kind byte + payload.
Bytes encode_relay_forward(std::uint64_t sender_id, std::uint64_t target_id,
                           MsgKind inner_kind, const Bytes& inner_payload);
struct RelayForwardMsg {
  std::uint64_t sender_id;
  std::uint64_t target_id;
  MsgKind inner_kind;
  Bytes inner_payload;
};
std::optional<RelayForwardMsg> decode_relay_forward(const Bytes& payload);

// Well-known service ports inside the simulated universe.
constexpr Port kStunPort = 3478;
constexpr Port kStunAltPort = 3479;
constexpr Port kRendezvousPort = 5000;
constexpr Port kRelayPort = 6000;
constexpr Port kPmpPort = 5351;

}  // namespace natlab::sim
