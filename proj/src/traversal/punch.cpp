#include "traversal/punch.hpp"

#include <map>
#include <memory>

namespace natlab::traversal {

using sim::Datagram;
using sim::DeliveryInfo;
using sim::MsgKind;

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Direct: return "direct";
    case Strategy::PortMapping: return "port_mapping";
    case Strategy::SimplePunch: return "simple_punch";
    case Strategy::BruteForce: return "brute_force";
    case Strategy::Birthday: return "birthday";
    case Strategy::Hairpin: return "hairpin";
    case Strategy::Relay: return "relay";
  }
  return "unknown";
}

const std::vector<Strategy>& strategy_ladder() {
  static const std::vector<Strategy> order = {
      Strategy::Direct,   Strategy::PortMapping, Strategy::SimplePunch, Strategy::BruteForce,
      Strategy::Birthday, Strategy::Hairpin,     Strategy::Relay,
  };
  return order;
}

const char* path_kind_name(PathKind p) {
  switch (p) {
    case PathKind::Direct: return "direct";
    case PathKind::Hairpin: return "hairpin";
    case PathKind::Relayed: return "relayed";
  }
  return "unknown";
}

const char* session_state_name(SessionState s) {
  switch (s) {
    case SessionState::Idle: return "idle";
    case SessionState::Gathering: return "gathering";
    case SessionState::Punching: return "punching";
    case SessionState::Established: return "established";
    case SessionState::Failed: return "failed";
  }
  return "unknown";
}

const char* fail_reason_name(FailReason r) {
  switch (r) {
    case FailReason::None: return "none";
    case FailReason::Timeout: return "timeout";
    case FailReason::NoCandidates: return "no_candidates";
    case FailReason::TableFull: return "table_full";
    case FailReason::HairpinUnsupported: return "hairpin_unsupported";
    case FailReason::RelayDown: return "relay_down";
    case FailReason::MappingExpired: return "mapping_expired";
    case FailReason::AllStrategiesExhausted: return "all_strategies_exhausted";
    case FailReason::PreconditionViolated: return "precondition_violated";
  }
  return "unknown";
}

namespace {

struct SideProgress {
  bool sent_ack = false;
  bool got_ack = false;
  bool got_ack_ack = false;
  std::uint64_t probes_sent = 0;
  Port est_port = 0;
  EndpointAddress est_remote;
  bool est_hairpin = false;

  // A hole counts only once this side has observed bidirectionality: either
  // an ack for its own probe arrived, or its ack to the peer's probe was
  // acknowledged in turn.
  bool punched() const { return got_ack || (sent_ack && got_ack_ack); }

  void note_path(Port port, EndpointAddress remote, bool hairpinned) {
    if (est_port == 0) {
      est_port = port;
      est_remote = remote;
    }
    est_hairpin = est_hairpin || hairpinned;
  }
};

struct PairProgress {
  SideProgress side[2];
  bool done = false;
  SimTime done_at = 0;

  void refresh(SimTime now) {
    if (!done && side[0].punched() && side[1].punched()) {
      done = true;
      done_at = now;
    }
  }
};

Datagram make_msg(EndpointAddress from, EndpointAddress to, MsgKind kind, std::uint64_t nonce) {
  Datagram d;
  d.src = from;
  d.dst = to;
  d.kind = kind;
  d.payload = sim::encode_nonce(nonce);
  return d;
}

PunchOutcome collect_outcome(const PairProgress& pair, const SideSpec& a, const SideSpec& b) {
  PunchOutcome out;
  out.established = pair.done;
  out.established_at = pair.done_at;
  out.probes_a = pair.side[0].probes_sent;
  out.probes_b = pair.side[1].probes_sent;
  out.hairpin_path = pair.side[0].est_hairpin || pair.side[1].est_hairpin;
  out.end_a = SessionEnd{a.node, pair.side[0].est_port, pair.side[0].est_remote};
  out.end_b = SessionEnd{b.node, pair.side[1].est_port, pair.side[1].est_remote};
  return out;
}

}  // namespace

PunchOutcome run_punch(Network& net, const SideSpec& a, const SideSpec& b, std::uint64_t nonce,
                       SimTime deadline) {
  auto pair = std::make_shared<PairProgress>();
  const SideSpec* sides[2] = {&a, &b};
  const sim::HostId hosts[2] = {net.node_host(a.node), net.node_host(b.node)};

  for (int s = 0; s < 2; ++s) {
    const NodeId node = sides[s]->node;
    const sim::HostId host = hosts[s];
    for (Port port : sides[s]->ports) {
      net.bind_port(node, port,
                    [pair, s, node, host, port, nonce](Network& n, const Datagram& d,
                                                       const DeliveryInfo& info) {
                      auto got = sim::decode_nonce(d.payload);
                      if (!got || *got != nonce) return;
                      SideProgress& me = pair->side[s];
                      const EndpointAddress self{host, port};
                      switch (d.kind) {
                        case MsgKind::Probe:
                          // Answer toward the observed source; under drifted
                          // mappings that is the only address that can work.
                          me.sent_ack = true;
                          n.send(node, make_msg(self, d.src, MsgKind::ProbeAck, *got));
                          break;
                        case MsgKind::ProbeAck:
                          me.got_ack = true;
                          me.note_path(port, d.src, info.hairpinned);
                          // Re-acknowledged per ack so a lost copy is healed
                          // by the peer's next probe.
                          n.send(node, make_msg(self, d.src, MsgKind::AckAck, *got));
                          break;
                        case MsgKind::AckAck:
                          me.got_ack_ack = true;
                          me.note_path(port, d.src, info.hairpinned);
                          break;
                        default:
                          return;
                      }
                      pair->refresh(info.time);
                    });
    }
  }

  for (int s = 0; s < 2; ++s) {
    const NodeId node = sides[s]->node;
    const sim::HostId host = hosts[s];
    for (const ProbeStep& step : sides[s]->plan) {
      net.schedule_at(step.when, [pair, s, node, host, step, nonce](Network& n) {
        if (pair->done) return;
        pair->side[s].probes_sent++;
        n.send(node, make_msg(EndpointAddress{host, step.from_port}, step.to, MsgKind::Probe,
                              nonce));
      });
    }
  }

  net.run_until_condition([&] { return pair->done; }, deadline);

  for (int s = 0; s < 2; ++s) {
    for (Port port : sides[s]->ports) net.unbind_port(sides[s]->node, port);
  }
  return collect_outcome(*pair, a, b);
}

void install_relay(Network& net, const std::string& node) {
  const NodeId id = net.node_id(node);
  const sim::HostId host = net.node_host(id);
  auto clients = std::make_shared<std::map<std::uint64_t, EndpointAddress>>();

  net.bind_port(id, sim::kRelayPort,
                [id, host, clients](Network& n, const Datagram& d, const DeliveryInfo&) {
                  if (d.kind != MsgKind::RelayForward) return;
                  auto msg = sim::decode_relay_forward(d.payload);
                  if (!msg) return;
                  (*clients)[msg->sender_id] = d.src;
                  auto target = clients->find(msg->target_id);
                  if (target == clients->end()) return;  // peer not heard from yet
                  Datagram fwd;
                  fwd.src = EndpointAddress{host, sim::kRelayPort};
                  fwd.dst = target->second;
                  fwd.kind = MsgKind::RelayForward;
                  fwd.payload = d.payload;
                  n.send(id, std::move(fwd));
                });
}

PunchOutcome run_relay_punch(Network& net, const RelaySideSpec& a, const RelaySideSpec& b,
                             EndpointAddress relay, std::uint64_t nonce, SimTime deadline) {
  auto pair = std::make_shared<PairProgress>();
  const RelaySideSpec* sides[2] = {&a, &b};
  const sim::HostId hosts[2] = {net.node_host(a.node), net.node_host(b.node)};

  for (int s = 0; s < 2; ++s) {
    const RelaySideSpec& spec = *sides[s];
    const sim::HostId host = hosts[s];
    net.bind_port(
        spec.node, spec.port,
        [pair, s, spec, host, relay, nonce](Network& n, const Datagram& d,
                                            const DeliveryInfo& info) {
          if (d.kind != MsgKind::RelayForward) return;
          auto env = sim::decode_relay_forward(d.payload);
          if (!env || env->sender_id != spec.peer_id || env->target_id != spec.own_id) return;
          auto got = sim::decode_nonce(env->inner_payload);
          if (!got || *got != nonce) return;

          SideProgress& me = pair->side[s];
          const EndpointAddress self{host, spec.port};
          auto reply = [&](MsgKind inner) {
            Datagram out;
            out.src = self;
            out.dst = relay;
            out.kind = MsgKind::RelayForward;
            out.payload = sim::encode_relay_forward(spec.own_id, spec.peer_id, inner,
                                                    sim::encode_nonce(nonce));
            n.send(spec.node, std::move(out));
          };
          switch (env->inner_kind) {
            case MsgKind::Probe:
              me.sent_ack = true;
              reply(MsgKind::ProbeAck);
              break;
            case MsgKind::ProbeAck:
              me.got_ack = true;
              me.note_path(spec.port, d.src, false);
              reply(MsgKind::AckAck);
              break;
            case MsgKind::AckAck:
              me.got_ack_ack = true;
              me.note_path(spec.port, d.src, false);
              break;
            default:
              return;
          }
          pair->refresh(info.time);
        });
  }

  for (int s = 0; s < 2; ++s) {
    const RelaySideSpec& spec = *sides[s];
    const sim::HostId host = hosts[s];
    for (SimTime when : spec.probe_times) {
      net.schedule_at(when, [pair, s, spec, host, relay, nonce](Network& n) {
        if (pair->done) return;
        pair->side[s].probes_sent++;
        Datagram out;
        out.src = EndpointAddress{host, spec.port};
        out.dst = relay;
        out.kind = MsgKind::RelayForward;
        out.payload = sim::encode_relay_forward(spec.own_id, spec.peer_id, MsgKind::Probe,
                                                sim::encode_nonce(nonce));
        n.send(spec.node, std::move(out));
      });
    }
  }

  net.run_until_condition([&] { return pair->done; }, deadline);
  net.unbind_port(a.node, a.port);
  net.unbind_port(b.node, b.port);

  PunchOutcome out;
  out.established = pair->done;
  out.established_at = pair->done_at;
  out.probes_a = pair->side[0].probes_sent;
  out.probes_b = pair->side[1].probes_sent;
  out.end_a = SessionEnd{a.node, a.port, pair->side[0].est_remote};
  out.end_b = SessionEnd{b.node, b.port, pair->side[1].est_remote};
  return out;
}

}  // namespace natlab::traversal
