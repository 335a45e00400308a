#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "decoynet/config.hpp"
#include "decoynet/env.hpp"
#include "decoynet/errors.hpp"
#include "decoynet/rng.hpp"

// Linear-softmax policy-gradient learners over the routing MDP. A policy is a
// flat parameter vector viewed as one or more categorical heads; the single
// agent factorizes its (router, interface) action into two heads over the
// global observation, the multi agent gives every router its own head over
// that router's local observation. A2C and PPO share one objective surface,
// so PPO with an unbounded clip and a single epoch reproduces A2C exactly.

namespace decoynet::learn {

enum class LearnerKind { random, a2c, a2c_norm, ppo };
enum class AgentMode { single, multi };

inline std::string to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::random: return "random";
    case LearnerKind::a2c: return "a2c";
    case LearnerKind::a2c_norm: return "a2c_norm";
    case LearnerKind::ppo: return "ppo";
  }
  return "?";
}

inline LearnerKind learner_from_string(const std::string& s) {
  if (s == "random") return LearnerKind::random;
  if (s == "a2c") return LearnerKind::a2c;
  if (s == "a2c_norm") return LearnerKind::a2c_norm;
  if (s == "ppo") return LearnerKind::ppo;
  throw ConfigError("unknown learner: " + s);
}

inline std::string to_string(AgentMode m) {
  return m == AgentMode::single ? "single" : "multi";
}

inline AgentMode agent_mode_from_string(const std::string& s) {
  if (s == "single") return AgentMode::single;
  if (s == "multi") return AgentMode::multi;
  throw ConfigError("unknown agent mode: " + s);
}

// Per-learner training profiles. The step-size/exploration needs of the three
// learners differ sharply on this environment: PPO's multi-epoch updates work
// with small steps, plain A2C needs large steps plus extra entropy to escape
// the reward-0 master-sink policy, and normalized A2C additionally needs a
// fast value baseline because advantage normalization discards the scale that
// optimistic initialization relies on. `base` supplies everything a profile
// does not pin (batch size, clip ratio, and any user overrides layered on
// afterwards by the caller).
inline LearnerConfig learner_profile(LearnerKind kind, LearnerConfig base = {}) {
  switch (kind) {
    case LearnerKind::a2c:
      base.lr_policy = 0.3;
      base.lr_value = 0.08;
      base.entropy_coef = 0.05;
      break;
    case LearnerKind::a2c_norm:
      base.lr_policy = 0.15;
      base.lr_value = 0.2;
      base.entropy_coef = 0.15;
      break;
    case LearnerKind::random:
    case LearnerKind::ppo:
      break;  // defaults are the PPO-tuned values
  }
  return base;
}

// ---------------------------------------------------------------------------
// Categorical heads over linear logits.

inline std::vector<double> softmax(std::vector<double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double& l : logits) {
    l = std::exp(l - m);
    z += l;
  }
  for (double& l : logits) l /= z;
  return logits;
}

inline double entropy_of(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

// One categorical decision: `n` weight blocks of size `dim` starting at
// `offset` in the flat parameter vector, scored against feature vector `x`.
struct HeadView {
  size_t offset = 0;
  int n = 0;
  int dim = 0;
  std::vector<double> x;
  int chosen = 0;
};

// A recorded joint decision (all heads taken in one env step).
struct TransitionView {
  std::vector<HeadView> heads;
};

inline std::vector<double> head_probs(const std::vector<double>& w, const HeadView& h) {
  if (static_cast<int>(h.x.size()) != h.dim)
    throw UpdateError("feature vector length does not match head dimension");
  if (h.offset + static_cast<size_t>(h.n) * h.dim > w.size())
    throw UpdateError("head extends past the parameter vector");
  std::vector<double> logits(static_cast<size_t>(h.n), 0.0);
  for (int k = 0; k < h.n; ++k) {
    const size_t base = h.offset + static_cast<size_t>(k) * h.dim;
    double dot = 0.0;
    for (int f = 0; f < h.dim; ++f) dot += w[base + static_cast<size_t>(f)] * h.x[static_cast<size_t>(f)];
    logits[static_cast<size_t>(k)] = dot;
  }
  return softmax(std::move(logits));
}

inline double joint_log_prob(const std::vector<double>& w, const TransitionView& t) {
  double lp = 0.0;
  for (const auto& h : t.heads) lp += std::log(head_probs(w, h)[static_cast<size_t>(h.chosen)]);
  return lp;
}

inline double joint_entropy(const std::vector<double>& w, const TransitionView& t) {
  double e = 0.0;
  for (const auto& h : t.heads) e += entropy_of(head_probs(w, h));
  return e;
}

// d log pi(a) / dW[k,f] = (1[k==a] - p_k) * x_f
inline void add_logprob_grad(const std::vector<double>& w, const TransitionView& t,
                             double scale, std::vector<double>& g) {
  for (const auto& h : t.heads) {
    const auto p = head_probs(w, h);
    for (int k = 0; k < h.n; ++k) {
      const double coef = scale * ((k == h.chosen ? 1.0 : 0.0) - p[static_cast<size_t>(k)]);
      const size_t base = h.offset + static_cast<size_t>(k) * h.dim;
      for (int f = 0; f < h.dim; ++f)
        g[base + static_cast<size_t>(f)] += coef * h.x[static_cast<size_t>(f)];
    }
  }
}

// dH/dW[k,f] = -p_k (log p_k + H) * x_f
inline void add_entropy_grad(const std::vector<double>& w, const TransitionView& t,
                             double scale, std::vector<double>& g) {
  for (const auto& h : t.heads) {
    const auto p = head_probs(w, h);
    const double hh = entropy_of(p);
    for (int k = 0; k < h.n; ++k) {
      const double pk = p[static_cast<size_t>(k)];
      if (pk <= 0.0) continue;
      const double coef = scale * (-pk * (std::log(pk) + hh));
      const size_t base = h.offset + static_cast<size_t>(k) * h.dim;
      for (int f = 0; f < h.dim; ++f)
        g[base + static_cast<size_t>(f)] += coef * h.x[static_cast<size_t>(f)];
    }
  }
}

// ---------------------------------------------------------------------------
// Policies.

inline int sample_categorical(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.next_double();
  double cum = 0.0;
  for (size_t k = 0; k < probs.size(); ++k) {
    cum += probs[k];
    if (u < cum) return static_cast<int>(k);
  }
  return static_cast<int>(probs.size()) - 1;
}

inline int argmax(const std::vector<double>& probs) {
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

inline std::vector<double> with_bias(std::vector<double> x) {
  x.push_back(1.0);
  return x;
}

// Two heads over the global observation: which router to retarget, and which
// interface to point it at.
class SinglePolicy {
 public:
  SinglePolicy() = default;
  SinglePolicy(int n_routers, int n_ifaces, int feat_dim)
      : nr_(n_routers), ni_(n_ifaces), d_(feat_dim),
        w_(static_cast<size_t>((n_routers + n_ifaces) * feat_dim), 0.0) {}

  int feat_dim() const { return d_; }
  std::vector<double>& params() { return w_; }
  const std::vector<double>& params() const { return w_; }

  TransitionView view(const std::vector<double>& x, const env::ActionSingle& a) const {
    TransitionView t;
    t.heads.push_back({0, nr_, d_, x, a.router});
    t.heads.push_back({static_cast<size_t>(nr_) * d_, ni_, d_, x, a.iface});
    return t;
  }

  env::ActionSingle act(const std::vector<double>& x, Rng& rng, bool greedy) const {
    HeadView hr{0, nr_, d_, x, 0};
    HeadView hi{static_cast<size_t>(nr_) * d_, ni_, d_, x, 0};
    const auto pr = head_probs(w_, hr);
    const auto pi = head_probs(w_, hi);
    env::ActionSingle a;
    a.router = greedy ? argmax(pr) : sample_categorical(pr, rng);
    a.iface = greedy ? argmax(pi) : sample_categorical(pi, rng);
    return a;
  }

 private:
  int nr_ = 0, ni_ = 0, d_ = 0;
  std::vector<double> w_;
};

// One head per router over its local observation row.
class MultiPolicy {
 public:
  MultiPolicy() = default;
  MultiPolicy(int n_routers, int n_ifaces, int local_dim)
      : nr_(n_routers), ni_(n_ifaces), d_(local_dim),
        w_(static_cast<size_t>(n_routers * n_ifaces * local_dim), 0.0) {}

  int local_dim() const { return d_; }
  std::vector<double>& params() { return w_; }
  const std::vector<double>& params() const { return w_; }

  TransitionView view(const std::vector<std::vector<double>>& rows,
                      const env::ActionMulti& a) const {
    if (static_cast<int>(rows.size()) != nr_ || a.size() != rows.size())
      throw UpdateError("multi-agent view needs one row and one action per router");
    TransitionView t;
    for (int r = 0; r < nr_; ++r)
      t.heads.push_back({static_cast<size_t>(r) * ni_ * d_, ni_, d_,
                         with_bias(rows[static_cast<size_t>(r)]), a[static_cast<size_t>(r)]});
    return t;
  }

  env::ActionMulti act(const std::vector<std::vector<double>>& rows, Rng& rng,
                       bool greedy) const {
    if (static_cast<int>(rows.size()) != nr_)
      throw UpdateError("multi-agent act needs one observation row per router");
    env::ActionMulti a;
    for (int r = 0; r < nr_; ++r) {
      HeadView h{static_cast<size_t>(r) * ni_ * d_, ni_, d_,
                 with_bias(rows[static_cast<size_t>(r)]), 0};
      const auto p = head_probs(w_, h);
      a.push_back(greedy ? argmax(p) : sample_categorical(p, rng));
    }
    return a;
  }

 private:
  int nr_ = 0, ni_ = 0, d_ = 0;
  std::vector<double> w_;
};

// Linear state-value baseline over the global features.
class ValueFn {
 public:
  ValueFn() = default;
  explicit ValueFn(int feat_dim) : w_(static_cast<size_t>(feat_dim), 0.0) {}

  std::vector<double>& params() { return w_; }
  const std::vector<double>& params() const { return w_; }

  double predict(const std::vector<double>& x) const {
    if (x.size() != w_.size()) throw UpdateError("value feature length mismatch");
    double v = 0.0;
    for (size_t i = 0; i < x.size(); ++i) v += w_[i] * x[i];
    return v;
  }

 private:
  std::vector<double> w_;
};

// ---------------------------------------------------------------------------
// Batch updates.

struct BatchStep {
  TransitionView view;
  std::vector<double> value_x;  // global features for the baseline
  double ret = 0.0;             // discounted return from this step
  double adv = 0.0;
  double lp_old = 0.0;          // behavior log-probability at collection time
};

// Mean-zero, unit-std advantages (exact up to the 1e-8 guard).
inline void normalize_advantages(std::vector<BatchStep>& batch) {
  if (batch.empty()) return;
  double mean = 0.0;
  for (const auto& s : batch) mean += s.adv;
  mean /= static_cast<double>(batch.size());
  double var = 0.0;
  for (const auto& s : batch) var += (s.adv - mean) * (s.adv - mean);
  var /= static_cast<double>(batch.size());
  const double denom = std::sqrt(var) + 1e-8;
  for (auto& s : batch) s.adv = (s.adv - mean) / denom;
}

// Mean per-step surrogate objective. clip <= 0 selects the plain
// advantage-weighted form; positive clip selects the ratio-clipped form
// against the stored behavior log-probs.
inline double policy_objective(const std::vector<double>& w,
                               const std::vector<BatchStep>& batch, double beta,
                               double clip) {
  if (batch.empty()) return 0.0;
  double j = 0.0;
  for (const auto& s : batch) {
    const double lp = joint_log_prob(w, s.view);
    if (clip <= 0.0) {
      j += s.adv * lp;
    } else {
      const double rho = std::exp(lp - s.lp_old);
      const double unclipped = rho * s.adv;
      const double clipped = std::clamp(rho, 1.0 - clip, 1.0 + clip) * s.adv;
      j += std::min(unclipped, clipped);
    }
    j += beta * joint_entropy(w, s.view);
  }
  return j / static_cast<double>(batch.size());
}

inline std::vector<double> policy_gradient(const std::vector<double>& w,
                                           const std::vector<BatchStep>& batch,
                                           double beta, double clip) {
  std::vector<double> g(w.size(), 0.0);
  if (batch.empty()) return g;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const auto& s : batch) {
    if (clip <= 0.0) {
      add_logprob_grad(w, s.view, s.adv * inv_n, g);
    } else {
      const double lp = joint_log_prob(w, s.view);
      const double rho = std::exp(lp - s.lp_old);
      const double unclipped = rho * s.adv;
      const double clipped = std::clamp(rho, 1.0 - clip, 1.0 + clip) * s.adv;
      // gradient flows only while the unclipped branch is active
      if (unclipped <= clipped) add_logprob_grad(w, s.view, s.adv * rho * inv_n, g);
    }
    add_entropy_grad(w, s.view, beta * inv_n, g);
  }
  return g;
}

inline void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x))
      throw UpdateError(std::string("non-finite value in ") + what +
                        " (diverging learning rate or corrupt features)");
}

inline void value_update(ValueFn& vf, const std::vector<BatchStep>& batch, double lr) {
  if (batch.empty()) return;
  auto& w = vf.params();
  std::vector<double> g(w.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const auto& s : batch) {
    const double err = vf.predict(s.value_x) - s.ret;  // d 0.5(v-G)^2 / dv
    for (size_t i = 0; i < w.size(); ++i) g[i] += err * s.value_x[i] * inv_n;
  }
  for (size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
  check_finite(w, "value parameters");
}

inline void fill_advantages(std::vector<BatchStep>& batch, const ValueFn& vf,
                            bool normalize) {
  for (auto& s : batch) s.adv = s.ret - vf.predict(s.value_x);
  if (normalize) normalize_advantages(batch);
}

// One advantage-actor-critic step over the batch.
inline void update_a2c(std::vector<double>& w, ValueFn& vf, std::vector<BatchStep> batch,
                       const LearnerConfig& lc) {
  fill_advantages(batch, vf, lc.normalize_advantage);
  const auto g = policy_gradient(w, batch, lc.entropy_coef, 0.0);
  check_finite(g, "policy gradient");
  for (size_t i = 0; i < w.size(); ++i) w[i] += lc.lr_policy * g[i];
  check_finite(w, "policy parameters");
  value_update(vf, batch, lc.lr_value);
}

// Clipped-ratio update, several epochs over the same batch. Behavior
// log-probs must already be stored in the batch.
inline void update_ppo(std::vector<double>& w, ValueFn& vf, std::vector<BatchStep> batch,
                       const LearnerConfig& lc) {
  fill_advantages(batch, vf, lc.normalize_advantage);
  for (int epoch = 0; epoch < lc.ppo_epochs; ++epoch) {
    const auto g = policy_gradient(w, batch, lc.entropy_coef, lc.clip_ratio);
    check_finite(g, "policy gradient");
    for (size_t i = 0; i < w.size(); ++i) w[i] += lc.lr_policy * g[i];
    check_finite(w, "policy parameters");
    value_update(vf, batch, lc.lr_value);
  }
}

// ---------------------------------------------------------------------------
// Training and greedy evaluation.

struct CurveRow {
  int episode = 0;
  int length = 0;
  double reward = 0.0;
  env::Outcome outcome = env::Outcome::none;
};

struct TrainResult {
  LearnerKind kind = LearnerKind::random;
  AgentMode mode = AgentMode::single;
  SinglePolicy single;
  MultiPolicy multi;
  ValueFn value;
  std::vector<CurveRow> curve;
};

namespace detail {

inline std::uint64_t act_seed(std::uint64_t run_seed, int episode) {
  return mix_seed(run_seed, static_cast<std::uint64_t>(episode), 0x5eedULL);
}

inline std::uint64_t env_seed(std::uint64_t run_seed, int episode) {
  return mix_seed(run_seed, static_cast<std::uint64_t>(episode), 0xe9e9ULL);
}

}  // namespace detail

// Roll one episode; when `batch` is non-null every transition is recorded.
// Random play ignores the policies entirely.
inline CurveRow run_episode(env::Environment& e, LearnerKind kind, AgentMode mode,
                            const SinglePolicy& sp, const MultiPolicy& mp,
                            std::uint64_t episode_seed, Rng& act_rng, bool greedy,
                            double gamma, std::vector<BatchStep>* batch) {
  auto obs = e.reset(episode_seed);
  double total = 0.0;
  std::vector<BatchStep> steps;
  std::vector<double> rewards;

  while (!e.done()) {
    const auto global_x = with_bias(obs.flat());
    env::StepResult res;
    BatchStep rec;
    if (mode == AgentMode::single) {
      env::ActionSingle a;
      if (kind == LearnerKind::random) {
        a.router = static_cast<int>(act_rng.next_below(
            static_cast<std::uint64_t>(e.n_routers())));
        a.iface = static_cast<int>(act_rng.next_below(
            static_cast<std::uint64_t>(e.n_interfaces())));
      } else {
        a = sp.act(global_x, act_rng, greedy);
      }
      if (batch) rec.view = sp.view(global_x, a);
      res = e.step_single(a);
    } else {
      env::ActionMulti a;
      if (kind == LearnerKind::random) {
        for (int r = 0; r < e.n_routers(); ++r)
          a.push_back(static_cast<int>(act_rng.next_below(
              static_cast<std::uint64_t>(e.n_interfaces()))));
      } else {
        a = mp.act(obs.rows, act_rng, greedy);
      }
      if (batch) rec.view = mp.view(obs.rows, a);
      res = e.step_multi(a);
    }
    if (batch) {
      rec.value_x = global_x;
      steps.push_back(std::move(rec));
      rewards.push_back(res.reward);
    }
    total += res.reward;
    obs = std::move(res.obs);
  }

  if (batch) {
    double g = 0.0;
    for (size_t i = steps.size(); i-- > 0;) {
      g = rewards[i] + gamma * g;
      steps[i].ret = g;
    }
    for (auto& s : steps) batch->push_back(std::move(s));
  }

  CurveRow row;
  row.length = e.step_count();
  row.reward = total;
  row.outcome = e.episode_outcome();
  return row;
}

inline TrainResult train(const SimConfig& cfg, LearnerKind kind, AgentMode mode,
                         std::uint64_t seed) {
  LearnerConfig lc = cfg.learner;
  if (kind == LearnerKind::a2c_norm) lc.normalize_advantage = true;

  env::Environment e(cfg);
  const int global_dim = 4 * e.n_routers() + 1;
  TrainResult out;
  out.kind = kind;
  out.mode = mode;
  out.single = SinglePolicy(e.n_routers(), e.n_interfaces(), global_dim);
  out.multi = MultiPolicy(e.n_routers(), e.n_interfaces(), 5);
  out.value = ValueFn(global_dim);
  // Optimistic baseline: the bias feature is the last entry of the global
  // feature vector, so this sets V(s) = value_init everywhere at episode 0.
  out.value.params().back() = lc.value_init;

  std::vector<BatchStep> batch;
  auto& w = mode == AgentMode::single ? out.single.params() : out.multi.params();

  // Policy-gradient training on these reward surfaces is not monotone: a
  // policy can pass through a strong basin and later fall into an absorbing
  // sink. Score the current policy with greedy roll-outs on a held-out seed
  // stream at fixed intervals and hand back the best snapshot seen.
  const bool select = kind != LearnerKind::random && lc.checkpoint_every > 0;
  const std::uint64_t ckpt_seed = mix_seed(seed, 0xc4ecULL);
  double best_score = 0.0;
  bool have_best = false;
  std::vector<double> best_w, best_v;
  auto checkpoint = [&] {
    env::Environment probe(cfg);
    double score = 0.0;
    for (int i = 0; i < lc.checkpoint_episodes; ++i) {
      Rng rng(detail::act_seed(ckpt_seed, i));
      score += run_episode(probe, kind, mode, out.single, out.multi,
                           detail::env_seed(ckpt_seed, i), rng, true,
                           cfg.reward.gamma, nullptr)
                   .reward;
    }
    if (!have_best || score > best_score) {
      have_best = true;
      best_score = score;
      best_w = w;
      best_v = out.value.params();
    }
  };

  for (int ep = 0; ep < cfg.experiment.episodes; ++ep) {
    Rng act_rng(detail::act_seed(seed, ep));
    const bool collect = kind != LearnerKind::random;
    auto row = run_episode(e, kind, mode, out.single, out.multi,
                           detail::env_seed(seed, ep), act_rng, false,
                           cfg.reward.gamma, collect ? &batch : nullptr);
    row.episode = ep;
    out.curve.push_back(row);

    if (!collect) continue;
    if ((ep + 1) % lc.batch_episodes == 0) {
      // params were frozen during collection, so behavior log-probs can be
      // stamped at the batch boundary
      for (auto& s : batch) s.lp_old = joint_log_prob(w, s.view);
      if (kind == LearnerKind::ppo)
        update_ppo(w, out.value, std::move(batch), lc);
      else
        update_a2c(w, out.value, std::move(batch), lc);
      batch.clear();
    }
    if (select && (ep + 1) % lc.checkpoint_every == 0) checkpoint();
  }
  if (select) {
    checkpoint();  // the final policy competes too
    w = best_w;
    out.value.params() = best_v;
  }
  return out;
}

struct EvalSummary {
  double mean_length = 0.0;
  double mean_reward = 0.0;
  std::vector<CurveRow> episodes;
};

// Greedy roll-outs on a fresh environment; eval episode i uses a seed derived
// from (seed, i) so repeated calls reproduce byte-identical results.  Pass
// greedy=false to evaluate the sampled policy instead of the mode.
inline EvalSummary evaluate(const SimConfig& cfg, const TrainResult& tr, int episodes,
                            std::uint64_t seed, bool greedy = true) {
  env::Environment e(cfg);
  EvalSummary s;
  for (int ep = 0; ep < episodes; ++ep) {
    Rng act_rng(detail::act_seed(seed ^ 0x9e3779b97f4a7c15ULL, ep));
    auto row = run_episode(e, tr.kind, tr.mode, tr.single, tr.multi,
                           detail::env_seed(seed ^ 0x9e3779b97f4a7c15ULL, ep), act_rng,
                           greedy, cfg.reward.gamma, nullptr);
    row.episode = ep;
    s.episodes.push_back(row);
    s.mean_length += row.length;
    s.mean_reward += row.reward;
  }
  if (!s.episodes.empty()) {
    s.mean_length /= static_cast<double>(s.episodes.size());
    s.mean_reward /= static_cast<double>(s.episodes.size());
  }
  return s;
}

}  // namespace decoynet::learn
