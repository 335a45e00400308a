#pragma once

#include <algorithm>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "decoynet/config.hpp"
#include "decoynet/dnp3.hpp"
#include "decoynet/net_sim.hpp"
#include "decoynet/rng.hpp"

// Staged attacker: reconnaissance probing, MITM-style inspection polling,
// command injection, and fingerprint-driven disengagement. Escalation is
// intel-gated (a stage advances only after enough DELIVERED responses), so
// rerouting that starves the attacker of responses also slows the attack.

namespace decoynet::adversary {

enum class Stage { recon, mitm_inspect, inject, disengaged, done };

inline std::string to_string(Stage s) {
  switch (s) {
    case Stage::recon: return "recon";
    case Stage::mitm_inspect: return "mitm_inspect";
    case Stage::inject: return "inject";
    case Stage::disengaged: return "disengaged";
    case Stage::done: return "done";
  }
  return "?";
}

// Escalation order; disengaged sits outside the ladder.
inline int stage_rank(Stage s) {
  switch (s) {
    case Stage::recon: return 0;
    case Stage::mitm_inspect: return 1;
    case Stage::inject: return 2;
    case Stage::done: return 3;
    case Stage::disengaged: return -1;
  }
  return -1;
}

// A response the attacker saw last step, with its fingerprinting verdict.
struct ResponseRecord {
  dnp3::Dnp3Message message;
  dnp3::ValidationReport report;
  int latency_ms = 0;
  bool from_pot = false;  // set by the environment; drives (1 - p_dec) * kappa
  int from_node = -1;
};

struct AttackerState {
  Stage stage = Stage::recon;
  int node_id = -1;
  int target = -1;
  double suspicion = 0.0;
  std::set<std::pair<int, int>> intel;  // discovered (node, binary point) pairs
  std::vector<int> known_outstations;
  std::set<int> probed;
  std::set<int> commanded;
  int delivered_probes = 0;  // responses received while in recon
  int delivered_polls = 0;   // responses received while in mitm_inspect
  int next_seq = 0;
};

struct AttackerEmission {
  net::PacketRecord packet;
  dnp3::Dnp3Message message;
};

inline AttackerState init_attacker(int node_id, std::vector<int> outstations) {
  if (outstations.empty()) throw ConfigError("init_attacker: no outstations to target");
  AttackerState st;
  st.node_id = node_id;
  st.known_outstations = std::move(outstations);
  std::sort(st.known_outstations.begin(), st.known_outstations.end());
  st.target = st.known_outstations.front();
  return st;
}

// Malicious payload: breaker latch_off via direct_operate (no select needed,
// so a single delivered packet is disruptive).
inline dnp3::Dnp3Message inject_command(AttackerState& st, int target) {
  if (st.stage != Stage::inject)
    throw std::logic_error("inject_command: attacker not in inject stage");
  int point = 0;
  for (const auto& [node, idx] : st.intel) {
    if (node == target) {
      point = idx;
      break;
    }
  }
  dnp3::Dnp3Message cmd;
  cmd.direction = dnp3::Direction::request;
  cmd.function = dnp3::FunctionCode::direct_operate;
  cmd.seq = st.next_seq;
  st.next_seq = (st.next_seq + 1) % 16;
  cmd.objects.push_back({dnp3::PointKind::crob, point, 0,
                         static_cast<std::int32_t>(dnp3::CrobCode::latch_off)});
  return cmd;
}

namespace detail {

inline dnp3::Dnp3Message class0_read(AttackerState& st) {
  dnp3::Dnp3Message m;
  m.direction = dnp3::Direction::request;
  m.function = dnp3::FunctionCode::read;
  m.seq = st.next_seq;
  st.next_seq = (st.next_seq + 1) % 16;
  return m;
}

inline void switch_target(AttackerState& st, Rng& rng) {
  std::vector<int> unprobed;
  for (int n : st.known_outstations)
    if (!st.probed.count(n)) unprobed.push_back(n);
  if (!unprobed.empty()) {
    st.target = unprobed[rng.next_below(unprobed.size())];
    return;
  }
  std::vector<int> others;
  for (int n : st.known_outstations)
    if (n != st.target) others.push_back(n);
  if (!others.empty()) st.target = others[rng.next_below(others.size())];
}

}  // namespace detail

// One attacker decision step. Consumes the responses its previous packets
// earned, updates suspicion/intel, maybe disengages or escalates, then emits
// this step's packets. Pure in (state, inputs, seed).
inline std::pair<AttackerState, std::vector<AttackerEmission>> attacker_step(
    AttackerState st, const std::vector<ResponseRecord>& last_responses, double p_dec,
    const AttackerConfig& cfg, std::uint64_t rng_seed) {
  std::vector<AttackerEmission> out;
  if (st.stage == Stage::disengaged) return {std::move(st), out};

  Rng rng(mix_seed(rng_seed, 0xa77aULL));

  for (const auto& r : last_responses) {
    st.suspicion += cfg.violation_increment * static_cast<double>(r.report.violations.size());
    if (r.from_pot) st.suspicion += (1.0 - p_dec) * cfg.kappa;
    for (const auto& o : r.message.objects)
      if (o.kind == dnp3::PointKind::binary_input) st.intel.insert({r.from_node, o.index});
    if (st.stage == Stage::recon) ++st.delivered_probes;
    if (st.stage == Stage::mitm_inspect) ++st.delivered_polls;
  }
  st.suspicion = std::clamp(st.suspicion, 0.0, 1.0);

  if (st.suspicion > cfg.theta) {
    if (rng.bernoulli(cfg.disengage_prob)) {
      st.stage = Stage::disengaged;
      return {std::move(st), out};
    }
    detail::switch_target(st, rng);
  }

  if (st.stage == Stage::recon && st.delivered_probes >= cfg.recon_dwell)
    st.stage = Stage::mitm_inspect;
  if (st.stage == Stage::mitm_inspect && st.delivered_polls >= cfg.inspect_polls)
    st.stage = Stage::inject;

  auto emit = [&](net::PacketKind kind, dnp3::Dnp3Message msg) {
    AttackerEmission e;
    e.packet.src = st.node_id;
    e.packet.dst = st.target;
    e.packet.kind = kind;
    e.message = std::move(msg);
    out.push_back(std::move(e));
  };

  switch (st.stage) {
    case Stage::recon:
      st.probed.insert(st.target);
      emit(net::PacketKind::recon_probe, detail::class0_read(st));
      break;
    case Stage::mitm_inspect:
      st.probed.insert(st.target);
      emit(net::PacketKind::dnp3_poll, detail::class0_read(st));
      break;
    case Stage::inject: {
      if (!st.commanded.count(st.target)) {
        emit(net::PacketKind::dnp3_command, inject_command(st, st.target));
        st.commanded.insert(st.target);
      }
      // aim at the next uncommanded outstation; all hit -> monitoring mode
      bool pending = false;
      for (int n : st.known_outstations)
        if (!st.commanded.count(n)) {
          st.target = n;
          pending = true;
          break;
        }
      if (!pending) st.stage = Stage::done;
      if (out.empty()) emit(net::PacketKind::dnp3_poll, detail::class0_read(st));
      break;
    }
    case Stage::done: emit(net::PacketKind::dnp3_poll, detail::class0_read(st)); break;
    case Stage::disengaged: break;
  }
  return {std::move(st), out};
}

}  // namespace decoynet::adversary
