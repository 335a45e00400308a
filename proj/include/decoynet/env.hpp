#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "decoynet/adversary.hpp"
#include "decoynet/config.hpp"
#include "decoynet/dnp3.hpp"
#include "decoynet/grid_sim.hpp"
#include "decoynet/net_sim.hpp"
#include "decoynet/personality.hpp"
#include "decoynet/rng.hpp"

// The defended network as an MDP. Agents steer per-router forwarding; the
// staged attacker, the benign SCADA polling, the honeypots, and (in
// cyber-physical modes) the grid restoration process all advance inside
// step(). Every random draw is keyed by (episode seed, step, stream tag), so
// a transition depends only on state, action, and seed.

namespace decoynet::env {

enum class Outcome { none, real_rtu_disrupted, deception_success, attacker_disengaged, timeout };

inline std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::none: return "none";
    case Outcome::real_rtu_disrupted: return "real_rtu_disrupted";
    case Outcome::deception_success: return "deception_success";
    case Outcome::attacker_disengaged: return "attacker_disengaged";
    case Outcome::timeout: return "timeout";
  }
  return "?";
}

struct Observation {
  // one row per router: {drop_prob, mean utilization, suspicious, redirection}
  std::vector<std::vector<double>> rows;

  std::vector<double> flat() const {
    std::vector<double> out;
    for (const auto& r : rows) out.insert(out.end(), r.begin(), r.end());
    return out;
  }
};

struct ActionSingle {
  int router = 0;
  int iface = 0;
};

using ActionMulti = std::vector<int>;  // interface choice per router

struct RewardBreakdown {
  int n_pot = 0;
  int n_act = 0;
  int n_total = 0;
  int benign_total = 0;
  int benign_dropped = 0;
  double d_net = 0.0;
  double r_c = 0.0;
  double r_p = 0.0;
  double score_input = 0.0;  // x behind p_dec; only scored exchanges move it
  double p_dec = 0.0;
  double r_c_eff = 0.0;  // p_dec-weighted r_c when the deception loop is live
  double r_cp = 0.0;
  bool g_c = false;
  bool g_p = false;
};

// r_c = l1*n_pot/n_total - l2*n_act/n_total - l3*d_net, attack terms dropped
// when the attacker sent nothing. Bounded in [-l2-l3, l1].
inline double cyber_reward(int n_pot, int n_act, int n_total, double d_net,
                           const RewardConfig& rc) {
  double r = -rc.lambda3 * d_net;
  if (n_total > 0)
    r += rc.lambda1 * static_cast<double>(n_pot) / static_cast<double>(n_total) -
         rc.lambda2 * static_cast<double>(n_act) / static_cast<double>(n_total);
  return r;
}

inline double physical_reward(int n_res, const RewardConfig& rc) {
  return n_res == 0 ? rc.goal_bonus : -static_cast<double>(n_res);
}

// Coupling table over the two goal predicates. The achieved half of the
// reward is frozen out so the agent keeps optimizing whichever objective
// still has room; with both goals met (or neither) the sum is returned.
inline double coupled_reward(bool g_c, bool g_p, double r_c_eff, double r_p) {
  if (g_c && !g_p) return r_p;
  if (!g_c && g_p) return r_c_eff;
  return r_c_eff + r_p;
}

struct StepInfo {
  int step = 0;
  RewardBreakdown reward;
  adversary::Stage stage = adversary::Stage::recon;
  double suspicion = 0.0;
  int n_res = 0;
  Outcome outcome = Outcome::none;
};

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  StepInfo info;
};

inline nlohmann::json step_record_json(const StepInfo& info) {
  return nlohmann::json{{"step", info.step},
                        {"n_pot", info.reward.n_pot},
                        {"n_act", info.reward.n_act},
                        {"n_total", info.reward.n_total},
                        {"d_net", info.reward.d_net},
                        {"r_c", info.reward.r_c},
                        {"r_p", info.reward.r_p},
                        {"score_input", info.reward.score_input},
                        {"p_dec", info.reward.p_dec},
                        {"r_cp", info.reward.r_cp},
                        {"g_c", info.reward.g_c},
                        {"g_p", info.reward.g_p},
                        {"stage", adversary::to_string(info.stage)},
                        {"suspicion", info.suspicion},
                        {"n_res", info.n_res},
                        {"outcome", to_string(info.outcome)}};
}

class Environment {
 public:
  explicit Environment(SimConfig cfg) : cfg_(std::move(cfg)) {
    validate(cfg_);
    topo_ = net::build_topology(cfg_.topology);
    master_ = topo_.nodes_of_kind(net::NodeKind::master).front();
    reals_ids_ = topo_.nodes_of_kind(net::NodeKind::rtu_real);
    pot_ids_ = topo_.nodes_of_kind(net::NodeKind::rtu_pot);
    attacker_id_ = topo_.nodes_of_kind(net::NodeKind::attacker).front();
    // Honeypots outlive episodes: their models keep maturing for as long as
    // this environment exists.
    for (int p : pot_ids_)
      pots_.emplace(p, personality::HoneypotDevice(personality::default_personality(),
                                                   cfg_.personality));
    routing_ = net::make_routing_state(topo_);
  }

  const net::Topology& topology() const { return topo_; }
  int n_routers() const { return topo_.n_routers; }
  int n_interfaces() const { return topo_.n_interfaces; }
  const std::vector<int>& pot_nodes() const { return pot_ids_; }
  const SimConfig& config() const { return cfg_; }
  const net::RoutingState& routing() const { return routing_; }
  const grid::GridState& grid() const { return grid_; }
  const adversary::AttackerState& attacker() const { return attacker_; }
  const personality::HoneypotDevice& pot(int node) const { return pots_.at(node); }
  bool done() const { return done_; }
  Outcome episode_outcome() const { return outcome_; }
  int step_count() const { return step_count_; }
  double current_p_dec() const { return last_p_dec_; }

  Observation reset(std::uint64_t episode_seed) {
    episode_seed_ = episode_seed;
    step_count_ = 0;
    streak_ = 0;
    done_ = false;
    outcome_ = Outcome::none;
    last_p_dec_ = cfg_.attacker.static_deception_quality;
    last_score_ = 0.0;
    pending_.clear();
    attacker_view_.clear();
    susp_.assign(static_cast<size_t>(topo_.n_routers), 0.0);
    redir_.assign(static_cast<size_t>(topo_.n_routers), 0.0);

    routing_ = net::make_routing_state(topo_);
    routing_.forwarding = net::shortest_path_forwarding(topo_, reals_ids_.front());
    routing_ = net::congestion_update(routing_, cfg_.env.scenario, cfg_.congestion,
                                      mix_seed(episode_seed_, kCongTag));

    grid_ = grid::init_grid(cfg_.grid);

    reals_.clear();
    shadows_.clear();
    for (int r : reals_ids_) reals_.emplace(r, dnp3::RtuDevice{});
    for (int p : pot_ids_) {
      shadows_.emplace(p, dnp3::RtuDevice{});
      pots_.at(p).reset_episode();
    }

    std::vector<int> outstations = reals_ids_;
    outstations.insert(outstations.end(), pot_ids_.begin(), pot_ids_.end());
    attacker_ = adversary::init_attacker(attacker_id_, outstations);
    return observation();
  }

  // Single agent: redirect one router to one interface, everything else holds.
  StepResult step_single(const ActionSingle& a) {
    require_live();
    if (a.router < 0 || a.router >= topo_.n_routers)
      throw std::out_of_range("step_single: router index out of range");
    if (a.iface < 0 || a.iface >= topo_.n_interfaces)
      throw std::out_of_range("step_single: interface index out of range");
    routing_.forwarding[static_cast<size_t>(a.router)] = a.iface;
    return advance();
  }

  // Multi agent: a full joint forwarding assignment, one entry per router.
  StepResult step_multi(const ActionMulti& a) {
    require_live();
    if (static_cast<int>(a.size()) != topo_.n_routers)
      throw std::out_of_range("step_multi: need one interface per router");
    for (int iface : a)
      if (iface < 0 || iface >= topo_.n_interfaces)
        throw std::out_of_range("step_multi: interface index out of range");
    for (size_t r = 0; r < a.size(); ++r) routing_.forwarding[r] = a[r];
    return advance();
  }

  Observation observation() const {
    Observation obs;
    obs.rows.resize(static_cast<size_t>(topo_.n_routers));
    for (size_t r = 0; r < obs.rows.size(); ++r) {
      const auto& util = routing_.utilization[r];
      const double mean_util =
          util.empty() ? 0.0
                       : std::accumulate(util.begin(), util.end(), 0.0) /
                             static_cast<double>(util.size());
      obs.rows[r] = {routing_.drop_prob[r], mean_util, susp_[r], redir_[r]};
    }
    return obs;
  }

 private:
  static constexpr std::uint64_t kCongTag = 0x60c0;
  static constexpr std::uint64_t kAtkTag = 0xa7a7;
  static constexpr std::uint64_t kRouteTag = 0xf0f0;
  static constexpr std::uint64_t kLatTag = 0x1a7e;
  static constexpr std::uint64_t kGenTag = 0xdeca;

  void require_live() const {
    if (done_) throw std::logic_error("step on a finished episode; call reset");
  }

  StepResult advance() {
    ++step_count_;
    const auto step_u = static_cast<std::uint32_t>(step_count_);

    // 1. Attacker consumes last step's responses and emits this step's packets.
    const double p_dec_seen = cfg_.env.mode == EnvMode::cyber_physical_llm
                                  ? last_p_dec_
                                  : cfg_.attacker.static_deception_quality;
    auto [atk, emissions] =
        adversary::attacker_step(attacker_, pending_, p_dec_seen, cfg_.attacker,
                                 mix_seed(episode_seed_, step_u, kAtkTag));
    attacker_ = std::move(atk);
    pending_.clear();

    // 2. Inject attacker packets first, then the master's benign polls.
    std::vector<net::PacketRecord> packets;
    for (const auto& e : emissions) packets.push_back(e.packet);
    for (int r : reals_ids_) {
      net::PacketRecord b;
      b.src = master_;
      b.dst = r;
      b.kind = net::PacketKind::benign;
      packets.push_back(b);
    }
    auto routed = net::route_step(topo_, routing_, std::move(packets),
                                  mix_seed(episode_seed_, step_u, kRouteTag));
    net::recompute_utilization(routing_);

    // 3. Delivered attacker packets earn responses; real deliveries may
    //    disrupt equipment, honeypot deliveries feed the deception loop.
    RewardBreakdown rb;
    rb.n_total = static_cast<int>(emissions.size());
    bool contained = true;
    int n_disrupted_cmds = 0;
    std::vector<double> p_dec_samples;
    std::vector<double> score_samples;
    for (size_t i = 0; i < emissions.size(); ++i) {
      const auto& pkt = routed[i];
      const auto& req = emissions[i].message;
      if (pkt.fate == net::PacketFate::dropped) continue;
      const int node = pkt.final_node;
      const auto kind = topo_.kind(node);
      if (pkt.fate == net::PacketFate::delivered_pot) {
        ++rb.n_pot;
        handle_pot_delivery(node, req, step_u, i, p_dec_samples, score_samples);
        continue;
      }
      contained = false;  // reached something real (RTU, master, or looped home)
      if (kind == net::NodeKind::rtu_real) {
        ++rb.n_act;
        n_disrupted_cmds += handle_real_delivery(node, req, step_u, i);
      }
      // master or attacker endpoint: silently absorbed, no outstation there
    }

    // 4. Benign fate accounting.
    for (size_t i = emissions.size(); i < routed.size(); ++i) {
      ++rb.benign_total;
      if (routed[i].fate == net::PacketFate::dropped) ++rb.benign_dropped;
    }
    rb.d_net = rb.benign_total > 0
                   ? static_cast<double>(rb.benign_dropped) / rb.benign_total
                   : 0.0;

    // 5. Deception probability: live estimate in llm mode, static otherwise.
    if (cfg_.env.mode == EnvMode::cyber_physical_llm) {
      if (!p_dec_samples.empty()) {
        last_p_dec_ = std::accumulate(p_dec_samples.begin(), p_dec_samples.end(), 0.0) /
                      static_cast<double>(p_dec_samples.size());
        last_score_ = std::accumulate(score_samples.begin(), score_samples.end(), 0.0) /
                      static_cast<double>(score_samples.size());
      }
      rb.p_dec = last_p_dec_;
      rb.score_input = last_score_;
    } else {
      rb.p_dec = cfg_.attacker.static_deception_quality;
    }

    // 6. Physical process: restoration needs containment, delivered commands
    //    trip restored buses.
    const bool physical = cfg_.env.mode != EnvMode::cyber_only;
    if (physical) {
      grid_ = grid::restoration_tick(grid_, contained);
      if (n_disrupted_cmds > 0) grid_ = grid::apply_compromise(grid_, n_disrupted_cmds);
    }

    // 7. Reward assembly.
    rb.r_c = cyber_reward(rb.n_pot, rb.n_act, rb.n_total, rb.d_net, cfg_.reward);
    rb.g_c = rb.n_total > 0 && rb.n_pot == rb.n_total &&
             adversary::stage_rank(attacker_.stage) >= 1;
    rb.r_c_eff = cfg_.env.mode == EnvMode::cyber_physical_llm ? rb.p_dec * rb.r_c : rb.r_c;
    if (physical) {
      rb.g_p = grid_.n_res == 0;
      rb.r_p = physical_reward(grid_.n_res, cfg_.reward);
      rb.r_cp = coupled_reward(rb.g_c, rb.g_p, rb.r_c_eff, rb.r_p);
    } else {
      rb.r_cp = rb.r_c;
    }
    const double reward = rb.r_cp;

    // 8. Deception-success window: containment goal must hold W steps running.
    const bool goal_ok = rb.g_c && (!physical || rb.g_p);
    streak_ = goal_ok ? streak_ + 1 : 0;

    // 9. Exactly one outcome, highest severity first.
    StepResult res;
    bool any_disrupted = false;
    for (const auto& [node, dev] : reals_) any_disrupted |= dev.disrupted();
    if (any_disrupted) {
      done_ = true;
      res.terminated = true;
      outcome_ = Outcome::real_rtu_disrupted;
    } else if (streak_ >= cfg_.env.sustain_window) {
      done_ = true;
      res.terminated = true;
      outcome_ = Outcome::deception_success;
    } else if (attacker_.stage == adversary::Stage::disengaged) {
      done_ = true;
      res.terminated = true;
      outcome_ = Outcome::attacker_disengaged;
    } else if (step_count_ >= cfg_.env.max_steps) {
      done_ = true;
      res.truncated = true;
      outcome_ = Outcome::timeout;
    }

    // 10. Observation fields derived from this step's attacker traffic.
    susp_.assign(static_cast<size_t>(topo_.n_routers), 0.0);
    redir_.assign(static_cast<size_t>(topo_.n_routers), 0.0);
    std::vector<int> through(static_cast<size_t>(topo_.n_routers), 0);
    std::vector<int> to_pot(static_cast<size_t>(topo_.n_routers), 0);
    for (size_t i = 0; i < emissions.size(); ++i) {
      for (int r : routed[i].router_path) {
        ++through[static_cast<size_t>(r)];
        if (routed[i].fate == net::PacketFate::delivered_pot)
          ++to_pot[static_cast<size_t>(r)];
      }
    }
    for (size_t r = 0; r < susp_.size(); ++r) {
      susp_[r] = through[r] > 0 ? 1.0 : 0.0;
      redir_[r] = through[r] > 0 ? static_cast<double>(to_pot[r]) / through[r] : 0.0;
    }

    res.obs = observation();
    res.reward = reward;
    res.info.step = step_count_;
    res.info.reward = rb;
    res.info.stage = attacker_.stage;
    res.info.suspicion = attacker_.suspicion;
    res.info.n_res = grid_.n_res;
    res.info.outcome = outcome_;
    return res;
  }

  // Honeypot answers; in llm mode the exchange is scored against the ground
  // truth a real outstation would have produced, then that truth enters the
  // datastore (score first, learn after).
  void handle_pot_delivery(int node, const dnp3::Dnp3Message& req, std::uint32_t step_u,
                           size_t idx, std::vector<double>& p_dec_samples,
                           std::vector<double>& score_samples) {
    auto& pot = pots_.at(node);
    auto& shadow = shadows_.at(node);
    const auto truth = shadow.respond(req, step_u);
    const auto resp = pot.respond(
        req, step_u, mix_seed(mix_seed(episode_seed_, step_u, kGenTag), idx));
    if (cfg_.env.mode == EnvMode::cyber_physical_llm) {
      const auto ref = personality::render_response_tokens(truth);
      const auto rep = pot.score(ref);
      score_samples.push_back(
          personality::score_input_value(rep, cfg_.personality.score_input));
      p_dec_samples.push_back(
          personality::deception_probability(rep, cfg_.personality.score_input).p_dec);
      if (cfg_.personality.live_updates) pot.observe_truth(ref);
    }
    const int latency =
        pot.latency(mix_seed(mix_seed(episode_seed_, step_u, kLatTag), idx));
    record_response(node, req, resp, latency, true);
  }

  // Real outstation answers; a command that flips equipment is a disruption.
  int handle_real_delivery(int node, const dnp3::Dnp3Message& req, std::uint32_t step_u,
                           size_t idx) {
    auto& dev = reals_.at(node);
    const bool was_disrupted = dev.disrupted();
    const auto resp = dev.respond(req, step_u);
    const int latency =
        dev.latency(mix_seed(mix_seed(episode_seed_, step_u, kLatTag), idx));
    record_response(node, req, resp, latency, false);
    return !was_disrupted && dev.disrupted() ? 1 : 0;
  }

  void record_response(int node, const dnp3::Dnp3Message& req, const dnp3::Dnp3Message& resp,
                       int latency, bool from_pot) {
    auto& session = attacker_view_[node];
    adversary::ResponseRecord rec;
    rec.message = resp;
    rec.report = dnp3::validate_response(req, resp, session, latency,
                                         dnp3::timing_from(cfg_.dnp3));
    dnp3::session_note_request(session, req);
    rec.latency_ms = latency;
    rec.from_pot = from_pot;
    rec.from_node = node;
    pending_.push_back(std::move(rec));
  }

  SimConfig cfg_;
  net::Topology topo_;
  net::RoutingState routing_;
  grid::GridState grid_;
  adversary::AttackerState attacker_;
  std::map<int, dnp3::RtuDevice> reals_;
  std::map<int, dnp3::RtuDevice> shadows_;
  std::map<int, personality::HoneypotDevice> pots_;
  std::map<int, dnp3::SessionState> attacker_view_;
  std::vector<adversary::ResponseRecord> pending_;
  std::vector<double> susp_;
  std::vector<double> redir_;
  std::vector<int> reals_ids_;
  std::vector<int> pot_ids_;
  int master_ = -1;
  int attacker_id_ = -1;
  std::uint64_t episode_seed_ = 0;
  int step_count_ = 0;
  int streak_ = 0;
  double last_p_dec_ = 0.5;
  double last_score_ = 0.0;
  bool done_ = false;
  Outcome outcome_ = Outcome::none;
};

}  // namespace decoynet::env
