#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sim/network.hpp"

namespace natlab::traversal {

using sim::EndpointAddress;
using sim::NodeId;
using sim::Port;
using sim::SimTime;

enum class Strategy { Direct, PortMapping, SimplePunch, BruteForce, Birthday, Hairpin, Relay };

const char* strategy_name(Strategy s);
// The canonical preference order.
const std::vector<Strategy>& strategy_ladder();

enum class PathKind { Direct, Hairpin, Relayed };
const char* path_kind_name(PathKind p);

enum class SessionState { Idle, Gathering, Punching, Established, Failed };
const char* session_state_name(SessionState s);

enum class FailReason {
  None,
  Timeout,
  NoCandidates,
  TableFull,
  HairpinUnsupported,
  RelayDown,
  MappingExpired,
  AllStrategiesExhausted,
  PreconditionViolated,
};
const char* fail_reason_name(FailReason r);

struct PunchStats {
  std::uint64_t probes_a = 0;
  std::uint64_t probes_b = 0;
  std::uint64_t mappings_a = 0;
  std::uint64_t mappings_b = 0;
  SimTime elapsed = 0;

  PunchStats& operator+=(const PunchStats& o) {
    probes_a += o.probes_a;
    probes_b += o.probes_b;
    mappings_a += o.mappings_a;
    mappings_b += o.mappings_b;
    elapsed += o.elapsed;
    return *this;
  }
};

// One end of an established path: which socket talks to which remote.
struct SessionEnd {
  NodeId node = -1;
  Port port = 0;
  EndpointAddress remote;
};

// The session state machine. States only move forward along
// Idle -> Gathering -> Punching -> {Established, Failed}.
class TraversalSession {
 public:
  SessionState state() const { return state_; }
  PathKind path() const { return path_; }
  FailReason reason() const { return reason_; }
  Strategy strategy() const { return strategy_; }
  const PunchStats& stats() const { return stats_; }
  PunchStats& stats() { return stats_; }
  const SessionEnd& end_a() const { return a_; }
  const SessionEnd& end_b() const { return b_; }
  std::uint64_t nonce() const { return nonce_; }
  bool established() const { return state_ == SessionState::Established; }

  void set_strategy(Strategy s) { strategy_ = s; }
  void set_nonce(std::uint64_t n) { nonce_ = n; }
  // Peer ids used for relay envelopes (relayed paths only).
  void set_relay_ids(std::uint64_t a_id, std::uint64_t b_id) {
    relay_id_a_ = a_id;
    relay_id_b_ = b_id;
  }
  std::uint64_t relay_id_a() const { return relay_id_a_; }
  std::uint64_t relay_id_b() const { return relay_id_b_; }

  void to_gathering() { advance(SessionState::Gathering); }
  void to_punching() { advance(SessionState::Punching); }
  void establish(PathKind path, SessionEnd a, SessionEnd b) {
    advance(SessionState::Established);
    path_ = path;
    a_ = a;
    b_ = b;
  }
  void fail(FailReason reason) {
    advance(SessionState::Failed);
    reason_ = reason;
  }
  // Post-establishment degradation (expired path detected by app traffic).
  void degrade(FailReason reason) {
    if (state_ != SessionState::Established) {
      throw std::logic_error("only an established session can degrade");
    }
    state_ = SessionState::Failed;
    reason_ = reason;
  }

 private:
  void advance(SessionState next) {
    const bool legal = (state_ == SessionState::Idle && next == SessionState::Gathering) ||
                       (state_ == SessionState::Gathering &&
                        (next == SessionState::Punching || next == SessionState::Failed)) ||
                       (state_ == SessionState::Punching &&
                        (next == SessionState::Established || next == SessionState::Failed));
    if (!legal) {
      throw std::logic_error(std::string("illegal session transition ") +
                             session_state_name(state_) + " -> " + session_state_name(next));
    }
    state_ = next;
  }

  SessionState state_ = SessionState::Idle;
  PathKind path_ = PathKind::Direct;
  FailReason reason_ = FailReason::None;
  Strategy strategy_ = Strategy::SimplePunch;
  PunchStats stats_;
  SessionEnd a_;
  SessionEnd b_;
  std::uint64_t nonce_ = 0;
  std::uint64_t relay_id_a_ = 0;
  std::uint64_t relay_id_b_ = 0;
};

}  // namespace natlab::traversal
