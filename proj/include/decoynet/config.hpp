#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "decoynet/errors.hpp"

namespace decoynet {

using json = nlohmann::json;

enum class EnvMode { cyber_only, cyber_physical, cyber_physical_llm };
enum class Scenario { none, congestion };

inline std::string to_string(EnvMode m) {
  switch (m) {
    case EnvMode::cyber_only: return "cyber_only";
    case EnvMode::cyber_physical: return "cyber_physical";
    case EnvMode::cyber_physical_llm: return "cyber_physical_llm";
  }
  return "?";
}

inline std::string to_string(Scenario s) {
  return s == Scenario::none ? "none" : "congestion";
}

inline EnvMode env_mode_from_string(const std::string& s) {
  if (s == "cyber_only") return EnvMode::cyber_only;
  if (s == "cyber_physical") return EnvMode::cyber_physical;
  if (s == "cyber_physical_llm") return EnvMode::cyber_physical_llm;
  throw ConfigError("unknown env mode: " + s);
}

inline Scenario scenario_from_string(const std::string& s) {
  if (s == "none") return Scenario::none;
  if (s == "congestion") return Scenario::congestion;
  throw ConfigError("unknown scenario: " + s);
}

struct TopologyConfig {
  int n_routers = 4;
  int n_interfaces = 3;      // forwarding interfaces per router
  int n_real_rtus = 2;
  int n_pot_rtus = 2;
};

struct GridConfig {
  int n_critical = 5;
  int n_initial_outages = 3;
};

struct CongestionConfig {
  double drop_min = 0.05;
  double drop_max = 0.30;
};

struct AttackerConfig {
  int recon_dwell = 3;                  // delivered probes before escalating to inspection
  int inspect_polls = 10;               // delivered polls before escalating to injection
  double violation_increment = 0.05;    // suspicion per observed validation violation
  double kappa = 0.2;                   // suspicion per honeypot interaction, scaled by (1 - p_dec)
  double theta = 0.8;                   // suspicion threshold
  double disengage_prob = 0.5;          // per-step disengage chance once past theta
  double static_deception_quality = 0.5;  // pot quality stand-in outside llm mode
};

struct Dnp3Config {
  bool select_before_operate = true;
  int base_latency_ms = 20;
  int jitter_ms = 5;
};

enum class ScoreInput { cross_entropy_bits, perplexity };

struct PersonalityConfig {
  int order = 3;
  double smoothing_k = 0.1;
  int datastore_window = 512;
  ScoreInput score_input = ScoreInput::cross_entropy_bits;
  // When false the honeypot language model is frozen: responses are still
  // scored but ground-truth snapshots never enter the datastore.
  bool live_updates = true;
};

struct RewardConfig {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 0.5;
  double gamma = 0.99;
  double goal_bonus = 20.0;
};

struct EnvSection {
  EnvMode mode = EnvMode::cyber_only;
  Scenario scenario = Scenario::none;
  int sustain_window = 5;   // consecutive containment steps for deception success
  int max_steps = 100;
};

struct LearnerConfig {
  double lr_policy = 0.08;
  double lr_value = 0.02;
  double clip_ratio = 0.2;
  double entropy_coef = 0.01;
  // Initial state-value estimate (the bias weight of the value function).
  // Optimistic values mark unexplored behavior as disappointing, which keeps
  // the policy from settling on reward-0 sinks before it has seen redirection
  // pay off.
  double value_init = 6.0;
  bool normalize_advantage = false;
  int ppo_epochs = 4;
  int batch_episodes = 4;
  // Evaluation-based checkpoint selection: every checkpoint_every training
  // episodes (and at the end) the current policy is scored with
  // checkpoint_episodes greedy roll-outs on a held-out seed stream, and
  // training returns the best-scoring snapshot instead of the final one.
  // 0 disables selection.
  int checkpoint_every = 100;
  int checkpoint_episodes = 10;
};

struct ExperimentConfig {
  int episodes = 1500;
  int eval_episodes = 30;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
};

struct SimConfig {
  TopologyConfig topology;
  GridConfig grid;
  CongestionConfig congestion;
  AttackerConfig attacker;
  Dnp3Config dnp3;
  PersonalityConfig personality;
  RewardConfig reward;
  EnvSection env;
  LearnerConfig learner;
  ExperimentConfig experiment;
};

namespace detail {

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline void validate(const SimConfig& c);

// Partial documents are fine: absent keys keep their defaults.
inline SimConfig config_from_json(const json& j) {
  SimConfig c;
  if (j.contains("topology")) {
    const auto& t = j.at("topology");
    detail::maybe(t, "n_routers", c.topology.n_routers);
    detail::maybe(t, "n_interfaces", c.topology.n_interfaces);
    detail::maybe(t, "n_real_rtus", c.topology.n_real_rtus);
    detail::maybe(t, "n_pot_rtus", c.topology.n_pot_rtus);
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    detail::maybe(g, "n_critical", c.grid.n_critical);
    detail::maybe(g, "n_initial_outages", c.grid.n_initial_outages);
  }
  if (j.contains("congestion")) {
    const auto& g = j.at("congestion");
    detail::maybe(g, "drop_min", c.congestion.drop_min);
    detail::maybe(g, "drop_max", c.congestion.drop_max);
  }
  if (j.contains("attacker")) {
    const auto& a = j.at("attacker");
    detail::maybe(a, "recon_dwell", c.attacker.recon_dwell);
    detail::maybe(a, "inspect_polls", c.attacker.inspect_polls);
    detail::maybe(a, "violation_increment", c.attacker.violation_increment);
    detail::maybe(a, "kappa", c.attacker.kappa);
    detail::maybe(a, "theta", c.attacker.theta);
    detail::maybe(a, "disengage_prob", c.attacker.disengage_prob);
    detail::maybe(a, "static_deception_quality", c.attacker.static_deception_quality);
  }
  if (j.contains("dnp3")) {
    const auto& d = j.at("dnp3");
    detail::maybe(d, "select_before_operate", c.dnp3.select_before_operate);
    detail::maybe(d, "base_latency_ms", c.dnp3.base_latency_ms);
    detail::maybe(d, "jitter_ms", c.dnp3.jitter_ms);
  }
  if (j.contains("personality")) {
    const auto& p = j.at("personality");
    detail::maybe(p, "order", c.personality.order);
    detail::maybe(p, "smoothing_k", c.personality.smoothing_k);
    detail::maybe(p, "datastore_window", c.personality.datastore_window);
    detail::maybe(p, "live_updates", c.personality.live_updates);
    if (p.contains("score_input")) {
      const std::string s = p.at("score_input").get<std::string>();
      if (s == "cross_entropy")
        c.personality.score_input = ScoreInput::cross_entropy_bits;
      else if (s == "perplexity")
        c.personality.score_input = ScoreInput::perplexity;
      else
        throw ConfigError("unknown score_input: " + s);
    }
  }
  if (j.contains("reward")) {
    const auto& r = j.at("reward");
    detail::maybe(r, "lambda1", c.reward.lambda1);
    detail::maybe(r, "lambda2", c.reward.lambda2);
    detail::maybe(r, "lambda3", c.reward.lambda3);
    detail::maybe(r, "gamma", c.reward.gamma);
    detail::maybe(r, "goal_bonus", c.reward.goal_bonus);
  }
  if (j.contains("env")) {
    const auto& e = j.at("env");
    if (e.contains("mode")) c.env.mode = env_mode_from_string(e.at("mode").get<std::string>());
    if (e.contains("scenario"))
      c.env.scenario = scenario_from_string(e.at("scenario").get<std::string>());
    detail::maybe(e, "sustain_window", c.env.sustain_window);
    detail::maybe(e, "max_steps", c.env.max_steps);
  }
  if (j.contains("learner")) {
    const auto& l = j.at("learner");
    detail::maybe(l, "lr_policy", c.learner.lr_policy);
    detail::maybe(l, "lr_value", c.learner.lr_value);
    detail::maybe(l, "clip_ratio", c.learner.clip_ratio);
    detail::maybe(l, "entropy_coef", c.learner.entropy_coef);
    detail::maybe(l, "value_init", c.learner.value_init);
    detail::maybe(l, "normalize_advantage", c.learner.normalize_advantage);
    detail::maybe(l, "ppo_epochs", c.learner.ppo_epochs);
    detail::maybe(l, "batch_episodes", c.learner.batch_episodes);
    detail::maybe(l, "checkpoint_every", c.learner.checkpoint_every);
    detail::maybe(l, "checkpoint_episodes", c.learner.checkpoint_episodes);
  }
  if (j.contains("experiment")) {
    const auto& x = j.at("experiment");
    detail::maybe(x, "episodes", c.experiment.episodes);
    detail::maybe(x, "eval_episodes", c.experiment.eval_episodes);
    detail::maybe(x, "seeds", c.experiment.seeds);
  }
  validate(c);
  return c;
}

inline void validate(const SimConfig& c) {
  if (c.topology.n_routers < 2) throw ConfigError("topology.n_routers must be >= 2");
  if (c.topology.n_interfaces < 2) throw ConfigError("topology.n_interfaces must be >= 2");
  if (c.topology.n_real_rtus < 1) throw ConfigError("topology.n_real_rtus must be >= 1");
  if (c.topology.n_pot_rtus < 1) throw ConfigError("topology.n_pot_rtus must be >= 1");
  if (c.grid.n_initial_outages < 0 || c.grid.n_initial_outages > c.grid.n_critical)
    throw ConfigError("grid.n_initial_outages must lie in [0, n_critical]");
  if (c.congestion.drop_min < 0.0 || c.congestion.drop_max > 1.0 ||
      c.congestion.drop_min > c.congestion.drop_max)
    throw ConfigError("congestion drop range must satisfy 0 <= min <= max <= 1");
  if (c.reward.lambda1 < 0 || c.reward.lambda2 < 0 || c.reward.lambda3 < 0)
    throw ConfigError("reward lambdas must be non-negative");
  if (c.reward.gamma <= 0.0 || c.reward.gamma > 1.0)
    throw ConfigError("reward.gamma must lie in (0, 1]");
  if (c.env.sustain_window < 1) throw ConfigError("env.sustain_window must be >= 1");
  if (c.env.max_steps < 1) throw ConfigError("env.max_steps must be >= 1");
  if (c.personality.order < 1) throw ConfigError("personality.order must be >= 1");
  if (c.personality.smoothing_k <= 0.0) throw ConfigError("personality.smoothing_k must be > 0");
  if (c.personality.datastore_window < 1)
    throw ConfigError("personality.datastore_window must be >= 1");
  if (c.experiment.eval_episodes < 1) throw ConfigError("experiment.eval_episodes must be >= 1");
  if (c.experiment.seeds.empty()) throw ConfigError("experiment.seeds must be non-empty");
  if (c.attacker.theta < 0 || c.attacker.theta > 1)
    throw ConfigError("attacker.theta must lie in [0, 1]");
  if (c.attacker.disengage_prob < 0 || c.attacker.disengage_prob > 1)
    throw ConfigError("attacker.disengage_prob must lie in [0, 1]");
  if (c.attacker.static_deception_quality < 0 || c.attacker.static_deception_quality > 1)
    throw ConfigError("attacker.static_deception_quality must lie in [0, 1]");
  if (c.learner.lr_policy <= 0 || c.learner.lr_value <= 0)
    throw ConfigError("learner rates must be > 0");
  if (c.learner.clip_ratio <= 0) throw ConfigError("learner.clip_ratio must be > 0");
  if (c.learner.entropy_coef < 0) throw ConfigError("learner.entropy_coef must be >= 0");
  if (c.learner.ppo_epochs < 1) throw ConfigError("learner.ppo_epochs must be >= 1");
  if (c.learner.batch_episodes < 1) throw ConfigError("learner.batch_episodes must be >= 1");
  if (c.learner.checkpoint_every < 0)
    throw ConfigError("learner.checkpoint_every must be >= 0");
  if (c.learner.checkpoint_every > 0 && c.learner.checkpoint_episodes < 1)
    throw ConfigError("learner.checkpoint_episodes must be >= 1");
}

inline SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse failure in " + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace decoynet
