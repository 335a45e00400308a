// Acceptance gate. Exercises the ten release criteria end to end and prints
// one verdict line per criterion; the exit code is the number of failures.
// Criteria 3-6 retrain policies from scratch, so a full run takes minutes.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "decoynet/dnp3.hpp"
#include "decoynet/env.hpp"
#include "decoynet/harness.hpp"
#include "decoynet/learners.hpp"
#include "decoynet/personality.hpp"
#include "decoynet/rng.hpp"

using namespace decoynet;

namespace {

struct Verdict {
  bool ok = true;
  std::string note;
};

void expect(Verdict& v, bool cond, const std::string& why) {
  if (cond) return;
  v.ok = false;
  v.note += (v.note.empty() ? "" : "; ") + why;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Trained arms shared by criteria 3-6. One arm = train at a seed with the
// learner's tuned profile, then greedy-evaluate 20 episodes on a fixed
// evaluation seed. Random arms skip training entirely.

struct ArmResult {
  double len = 0.0;
  double rew = 0.0;
  double steps = 0.0;  // steps to deception_success, censored at max_steps
};

ArmResult run_arm(learn::LearnerKind kind, learn::AgentMode mode, Scenario scen,
                  EnvMode emode, int episodes, std::uint64_t seed) {
  SimConfig c;
  c.env.mode = emode;
  c.env.scenario = scen;
  c.learner = learn::learner_profile(kind, c.learner);
  c.experiment.episodes = kind == learn::LearnerKind::random ? 0 : episodes;
  auto tr = learn::train(c, kind, mode, seed);
  auto ev = learn::evaluate(c, tr, 20, 900);
  ArmResult r;
  r.len = ev.mean_length;
  r.rew = ev.mean_reward;
  double s = 0.0;
  for (const auto& e : ev.episodes)
    s += e.outcome == env::Outcome::deception_success ? e.length : c.env.max_steps;
  r.steps = s / static_cast<double>(ev.episodes.size());
  return r;
}

ArmResult mean_arm(learn::LearnerKind kind, learn::AgentMode mode, Scenario scen,
                   EnvMode emode, int episodes) {
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  ArmResult acc;
  for (auto s : seeds) {
    auto r = run_arm(kind, mode, scen, emode, episodes, s);
    acc.len += r.len;
    acc.rew += r.rew;
    acc.steps += r.steps;
  }
  const double n = static_cast<double>(seeds.size());
  acc.len /= n;
  acc.rew /= n;
  acc.steps /= n;
  return acc;
}

// ---------------------------------------------------------------------------
// Criterion 1: the sigmoid mapping reproduces the six published score/P_dec
// pairs within 0.01, both directly and through the trace replay helper.

Verdict criterion_pdec_table() {
  const double xs[] = {5.07, 4.34, 3.27, 2.1, 1.03, 0.12};
  const double want[] = {0.06, 0.115, 0.275, 0.55, 0.78, 0.9};
  Verdict v;
  for (int i = 0; i < 6; ++i) {
    const double got = personality::deception_sigmoid(xs[i]);
    expect(v, std::fabs(got - want[i]) <= 0.01,
           fmt("sigmoid(%.2f)=%.4f wants %.3f", xs[i], got, want[i]));
  }
  auto pts = harness::pdec_points_from_scores({xs, xs + 6});
  expect(v, pts.size() == 6, "trace replay dropped points");
  for (size_t i = 0; i < pts.size(); ++i) {
    expect(v, pts[i].step == static_cast<int>(i) + 1, "trace replay misnumbered steps");
    expect(v, pts[i].score_input == xs[i], "trace replay altered scores");
    expect(v, std::fabs(pts[i].p_dec - want[i]) <= 0.01,
           fmt("replayed p_dec %.4f wants %.3f", pts[i].p_dec, want[i]));
  }
  if (v.ok) v.note = "six pairs within 0.01";
  return v;
}

// ---------------------------------------------------------------------------
// Criterion 2: reward algebra. Bounds on r_c, the exact r_p rule, and the
// three published coupling cases, fuzzed over 1e5 random inputs.

Verdict criterion_reward_algebra() {
  Verdict v;
  Rng rng(0xa1feULL);
  int checked = 0;
  for (int i = 0; i < 100000 && v.ok; ++i) {
    RewardConfig rc;
    rc.lambda1 = rng.uniform(0.0, 2.0);
    rc.lambda2 = rng.uniform(0.0, 2.0);
    rc.lambda3 = rng.uniform(0.0, 2.0);
    const int n_total = static_cast<int>(rng.next_below(51));
    const int n_pot = n_total == 0 ? 0 : static_cast<int>(rng.next_below(n_total + 1));
    const int n_act = n_total - n_pot;
    const double d_net = rng.next_double();
    const double r_c = env::cyber_reward(n_pot, n_act, n_total, d_net, rc);
    expect(v, r_c >= -rc.lambda2 - rc.lambda3 - 1e-12 && r_c <= rc.lambda1 + 1e-12,
           fmt("r_c %.6f escapes [-%.3f, %.3f]", r_c, rc.lambda2 + rc.lambda3, rc.lambda1));

    const int n_res = static_cast<int>(rng.next_below(41));
    const double r_p = env::physical_reward(n_res, rc);
    expect(v, r_p == (n_res == 0 ? rc.goal_bonus : -static_cast<double>(n_res)),
           fmt("r_p %.3f wrong at n_res=%.0f", r_p, n_res));

    const double rcv = rng.uniform(-3.0, 3.0);
    const double rpv = rng.uniform(-40.0, 25.0);
    expect(v, env::coupled_reward(true, true, rcv, rpv) == rcv + rpv,
           "coupling case g_c&g_p broke");
    expect(v, env::coupled_reward(true, false, rcv, rpv) == rpv,
           "coupling case g_c only broke");
    expect(v, env::coupled_reward(false, true, rcv, rpv) == rcv,
           "coupling case g_p only broke");
    ++checked;
  }
  if (v.ok) v.note = fmt("%.0f fuzzed steps clean", checked);
  return v;
}

// ---------------------------------------------------------------------------
// Criterion 3: trained single-agent clipped-ratio policy beats the random
// baseline by at least 30% on mean episode length and strictly on reward.

Verdict criterion_single_vs_random(ArmResult& ppo_single_out) {
  Verdict v;
  const auto rnd = run_arm(learn::LearnerKind::random, learn::AgentMode::single,
                           Scenario::none, EnvMode::cyber_only, 0, 1);
  const auto ppo = mean_arm(learn::LearnerKind::ppo, learn::AgentMode::single,
                            Scenario::none, EnvMode::cyber_only, 1500);
  ppo_single_out = ppo;
  const double bar = 0.7 * rnd.len;
  expect(v, ppo.len <= bar, fmt("len %.2f misses 30%% bar %.2f", ppo.len, bar));
  expect(v, ppo.rew > rnd.rew, fmt("reward %.2f not above %.2f", ppo.rew, rnd.rew));
  v.note = fmt("len %.2f vs random %.2f", ppo.len, rnd.len) +
           fmt(" (bar %.2f)", bar) + fmt(", reward %.2f vs %.2f", ppo.rew, rnd.rew);
  return v;
}

// ---------------------------------------------------------------------------
// Criterion 4: multi-agent mean episode length does not exceed single-agent,
// same topology and seeds.

Verdict criterion_multi_vs_single(const ArmResult& ppo_single) {
  Verdict v;
  const auto multi = mean_arm(learn::LearnerKind::ppo, learn::AgentMode::multi,
                              Scenario::none, EnvMode::cyber_only, 1500);
  expect(v, multi.len <= ppo_single.len,
         fmt("multi len %.2f exceeds single %.2f", multi.len, ppo_single.len));
  v.note = fmt("multi len %.2f vs single %.2f", multi.len, ppo_single.len);
  return v;
}

// ---------------------------------------------------------------------------
// Criterion 5: under congestion every trained learner beats random on both
// metrics, in both agent modes. The normalized-advantage learner gets the
// doubled budget it also receives in the table presets.

Verdict criterion_congestion(double budget_s, std::chrono::steady_clock::time_point t0) {
  Verdict v;
  const struct {
    learn::LearnerKind kind;
    int episodes;
    const char* tag;
  } learners[] = {
      {learn::LearnerKind::ppo, 1500, "ppo"},
      {learn::LearnerKind::a2c, 1500, "a2c"},
      {learn::LearnerKind::a2c_norm, 3000, "a2c_norm"},
  };
  for (auto mode : {learn::AgentMode::single, learn::AgentMode::multi}) {
    const char* mtag = mode == learn::AgentMode::single ? "single" : "multi";
    const auto rnd = run_arm(learn::LearnerKind::random, mode, Scenario::congestion,
                             EnvMode::cyber_only, 0, 1);
    for (const auto& l : learners) {
      const auto got = mean_arm(l.kind, mode, Scenario::congestion,
                                EnvMode::cyber_only, l.episodes);
      expect(v, got.len < rnd.len,
             std::string(l.tag) + " " + mtag + fmt(" len %.2f not below %.2f", got.len, rnd.len));
      expect(v, got.rew > rnd.rew,
             std::string(l.tag) + " " + mtag + fmt(" reward %.2f not above %.2f", got.rew, rnd.rew));
      if (elapsed_s(t0) > budget_s) {
        expect(v, false, "budget exhausted before all arms ran");
        return v;
      }
    }
    if (v.ok)
      v.note += std::string(v.note.empty() ? "" : "; ") + mtag +
                fmt(" random len %.2f, all learners below", rnd.len);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Criterion 6: the scored-honeypot mode reaches deception_success in fewer
// mean steps than the unscored coupled mode, identical seeds and learner.
// Episodes that end any other way count as max_steps.

Verdict criterion_llm_benefit() {
  Verdict v;
  const auto cp = mean_arm(learn::LearnerKind::ppo, learn::AgentMode::single,
                           Scenario::none, EnvMode::cyber_physical, 1500);
  const auto llm = mean_arm(learn::LearnerKind::ppo, learn::AgentMode::single,
                            Scenario::none, EnvMode::cyber_physical_llm, 1500);
  expect(v, llm.steps < cp.steps,
         fmt("llm steps %.2f not below coupled %.2f", llm.steps, cp.steps));
  v.note = fmt("llm steps %.2f vs coupled %.2f", llm.steps, cp.steps);
  return v;
}

// ---------------------------------------------------------------------------
// Criterion 7: with live datastore updates on a stationary query stream, the
// median imitation score over 20 seeds never increases across 6 updates.

Verdict criterion_score_monotone() {
  Verdict v;
  const int kSeeds = 20, kUpdates = 6;
  const auto sel = SimConfig{}.personality.score_input;
  std::vector<std::vector<double>> scores(kUpdates);
  for (int s = 0; s < kSeeds; ++s) {
    personality::HoneypotDevice pot;
    dnp3::RtuDevice real;
    for (int u = 0; u < kUpdates; ++u) {
      dnp3::Dnp3Message poll;
      poll.function = dnp3::FunctionCode::read;
      poll.seq = u % 16;
      const auto truth = real.respond(poll, static_cast<std::uint32_t>(s * 100 + u));
      const auto ref = personality::render_response_tokens(truth);
      scores[static_cast<size_t>(u)].push_back(
          personality::score_input_value(pot.score(ref), sel));
      pot.observe_truth(ref);
    }
  }
  auto median = [](std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    return xs[xs.size() / 2];
  };
  double prev = median(scores[0]);
  std::string path = fmt("%.3f", prev);
  for (int u = 1; u < kUpdates; ++u) {
    const double m = median(scores[static_cast<size_t>(u)]);
    expect(v, m <= prev + 1e-9, fmt("median rose %.4f -> %.4f at update %.0f", prev, m, u));
    path += fmt(" %.3f", m);
    prev = m;
  }
  if (v.ok) v.note = "medians " + path;
  return v;
}

// ---------------------------------------------------------------------------
// Criterion 8: codec round-trip fuzz plus validator cleanliness for both the
// generated honeypot responses and the real outstation.

dnp3::Dnp3Message random_wire_message(Rng& rng) {
  using namespace dnp3;
  Dnp3Message m;
  const int dir = static_cast<int>(rng.next_below(3));
  m.direction = static_cast<Direction>(dir);
  if (dir == 0) {
    const FunctionCode fns[] = {FunctionCode::read, FunctionCode::write,
                                FunctionCode::select, FunctionCode::operate,
                                FunctionCode::direct_operate};
    m.function = fns[rng.next_below(5)];
    m.iin = 0;
  } else {
    m.function = dir == 1 ? FunctionCode::response_fn : FunctionCode::unsolicited_fn;
    m.iin = static_cast<std::uint16_t>(rng.next_below(0x10000));
  }
  m.seq = static_cast<int>(rng.next_below(16));
  const int n = static_cast<int>(rng.next_below(9));
  for (int i = 0; i < n; ++i) {
    PointValue o;
    o.kind = static_cast<PointKind>(rng.next_below(3));
    o.index = static_cast<int>(rng.next_below(0x10000));
    o.timestamp = static_cast<std::uint32_t>(rng.next_u64());
    switch (o.kind) {
      case PointKind::binary_input: o.value = static_cast<std::int32_t>(rng.next_below(2)); break;
      case PointKind::crob: o.value = static_cast<std::int32_t>(rng.next_below(4)); break;
      case PointKind::analog_input:
        o.value = static_cast<std::int32_t>(static_cast<std::uint32_t>(rng.next_u64()));
        break;
    }
    m.objects.push_back(o);
  }
  return m;
}

Verdict criterion_codec_validator() {
  using namespace dnp3;
  Verdict v;
  Rng rng(0xc0decULL);
  for (int i = 0; i < 10000 && v.ok; ++i) {
    const Dnp3Message m = random_wire_message(rng);
    const auto bytes = encode(m);
    expect(v, decode(bytes) == m, fmt("round-trip diverged at message %.0f", i));
  }

  // a conversation template covering polls, select/operate, direct operate
  // and a stale operate; both device types must come out violation-free
  auto converse = [&v](auto& dev, const char* tag, auto&& respond) {
    SessionState observer;
    const TimingProfile timing = dev.timing();
    std::uint32_t step = 0;
    Rng lrng(0x5e55ULL);
    for (int round = 0; round < 50; ++round) {
      std::vector<Dnp3Message> reqs;
      Dnp3Message poll;
      poll.function = FunctionCode::read;
      poll.seq = round % 16;
      reqs.push_back(poll);
      Dnp3Message sel;
      sel.function = FunctionCode::select;
      sel.seq = (round + 1) % 16;
      sel.objects.push_back({PointKind::crob, 0, 0,
                             static_cast<std::int32_t>(lrng.next_below(4))});
      Dnp3Message op = sel;
      op.function = FunctionCode::operate;
      reqs.push_back(sel);
      reqs.push_back(op);
      reqs.push_back(op);  // stale repeat; rejection is the compliant answer
      Dnp3Message dop = sel;
      dop.function = FunctionCode::direct_operate;
      dop.seq = (round + 2) % 16;
      reqs.push_back(dop);
      for (const auto& req : reqs) {
        const Dnp3Message resp = respond(dev, req, step, lrng);
        const auto rep = validate_response(req, resp, observer, dev.latency(step), timing);
        expect(v, rep.compliant(),
               std::string(tag) + fmt(" violation at step %.0f", step));
        session_note_request(observer, req);
        ++step;
        if (!v.ok) return;
      }
    }
  };

  RtuDevice real;
  converse(real, "real rtu", [](RtuDevice& d, const Dnp3Message& q, std::uint32_t s, Rng&) {
    return d.respond(q, s);
  });
  personality::HoneypotDevice pot;
  converse(pot, "honeypot",
           [](personality::HoneypotDevice& d, const Dnp3Message& q, std::uint32_t s, Rng& r) {
             return d.respond(q, s, r.next_u64());
           });
  if (v.ok) v.note = "1e4 round-trips, 500 exchanges clean";
  return v;
}

// ---------------------------------------------------------------------------
// Criterion 9: analytic gradients against central finite differences on a
// synthetic batch, for the advantage-weighted path, the clipped-ratio path
// with the clip opened up, and the value head.

double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({1.0, std::fabs(a[i]), std::fabs(b[i])});
    worst = std::max(worst, std::fabs(a[i] - b[i]) / scale);
  }
  return worst;
}

Verdict criterion_gradients() {
  using namespace learn;
  Verdict v;
  Rng rng(0x96adULL);
  SinglePolicy pol(3, 2, 5);
  std::vector<double> w0(pol.params().size());
  for (auto& x : w0) x = rng.uniform(-0.5, 0.5);

  std::vector<BatchStep> batch;
  for (int i = 0; i < 8; ++i) {
    BatchStep s;
    std::vector<double> feats;
    for (int k = 0; k < pol.feat_dim(); ++k) feats.push_back(rng.next_double());
    env::ActionSingle a;
    a.router = static_cast<int>(rng.next_below(3));
    a.iface = static_cast<int>(rng.next_below(2));
    s.view = pol.view(feats, a);
    s.value_x.assign(feats.begin(), feats.end());
    s.adv = rng.uniform(-2.0, 2.0);
    s.ret = rng.uniform(-3.0, 3.0);
    s.lp_old = joint_log_prob(w0, s.view);
    batch.push_back(std::move(s));
  }

  auto fd = [&batch](const std::vector<double>& w, double beta, double clip) {
    const double h = 1e-6;
    std::vector<double> g(w.size(), 0.0);
    std::vector<double> wp = w;
    for (size_t i = 0; i < w.size(); ++i) {
      wp[i] = w[i] + h;
      const double jp = policy_objective(wp, batch, beta, clip);
      wp[i] = w[i] - h;
      const double jm = policy_objective(wp, batch, beta, clip);
      wp[i] = w[i];
      g[i] = (jp - jm) / (2.0 * h);
    }
    return g;
  };

  // advantage-weighted objective, on-policy
  double err = max_rel_err(policy_gradient(w0, batch, 0.05, 0.0), fd(w0, 0.05, 0.0));
  expect(v, err < 1e-4, fmt("advantage path err %.2e", err));
  v.note = fmt("adv %.1e", err);

  // clipped-ratio objective with the clip opened wide, off-policy point
  std::vector<double> w1 = w0;
  for (auto& x : w1) x += rng.uniform(-0.15, 0.15);
  const double wide = 1e9;
  err = max_rel_err(policy_gradient(w1, batch, 0.05, wide), fd(w1, 0.05, wide));
  expect(v, err < 1e-4, fmt("open-clip path err %.2e", err));
  v.note += fmt(", clip %.1e", err);

  // value head: recover the applied gradient from one unit-rate update and
  // compare against differences of the squared-error loss
  ValueFn vf(static_cast<int>(batch[0].value_x.size()));
  for (auto& x : vf.params()) x = rng.uniform(-0.5, 0.5);
  const std::vector<double> vw0 = vf.params();
  value_update(vf, batch, 1.0);
  std::vector<double> analytic(vw0.size());
  for (size_t i = 0; i < vw0.size(); ++i) analytic[i] = vw0[i] - vf.params()[i];

  auto value_loss = [&batch](const std::vector<double>& w) {
    double l = 0.0;
    for (const auto& s : batch) {
      double pred = 0.0;
      for (size_t i = 0; i < w.size(); ++i) pred += w[i] * s.value_x[i];
      l += 0.5 * (pred - s.ret) * (pred - s.ret);
    }
    return l / static_cast<double>(batch.size());
  };
  std::vector<double> vfd(vw0.size());
  std::vector<double> wp = vw0;
  for (size_t i = 0; i < vw0.size(); ++i) {
    const double h = 1e-6;
    wp[i] = vw0[i] + h;
    const double jp = value_loss(wp);
    wp[i] = vw0[i] - h;
    const double jm = value_loss(wp);
    wp[i] = vw0[i];
    vfd[i] = (jp - jm) / (2.0 * h);
  }
  err = max_rel_err(analytic, vfd);
  expect(v, err < 1e-4, fmt("value head err %.2e", err));
  v.note += fmt(", value %.1e", err);
  return v;
}

// ---------------------------------------------------------------------------
// Criterion 10: every preset re-run with the same seed emits byte-identical
// tables and traces. Budgets are scaled down; determinism does not depend on
// episode counts.

Verdict criterion_determinism() {
  Verdict v;
  SimConfig small;
  small.experiment.episodes = 120;
  small.experiment.eval_episodes = 4;
  small.experiment.seeds = {1, 2};
  for (const auto& preset : harness::list_presets()) {
    if (preset.name == "pdec-trace") {
      const auto spec = harness::pdec_trace_spec(small);
      const auto a = harness::pdec_to_jsonl(harness::run_pdec_trace(small, spec));
      const auto b = harness::pdec_to_jsonl(harness::run_pdec_trace(small, spec));
      expect(v, a == b, preset.name + " trace bytes diverged");
      continue;
    }
    const auto rows = harness::preset_rows(preset.name, small);
    const auto r1 = harness::run_experiment(small, rows, preset.name);
    const auto r2 = harness::run_experiment(small, rows, preset.name);
    expect(v, harness::to_csv(r1.table) == harness::to_csv(r2.table),
           preset.name + " csv bytes diverged");
    expect(v, harness::to_jsonl(r1.traces) == harness::to_jsonl(r2.traces),
           preset.name + " trace bytes diverged");
  }
  if (v.ok) v.note = fmt("%.0f presets byte-stable", harness::list_presets().size());
  return v;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* label;
    double budget_s;  // 0 = no standalone budget
  };
  const Entry entries[] = {
      {1, "deception mapping hits the six published pairs", 1.0},
      {2, "reward bounds and coupling cases hold under fuzz", 60.0},
      {3, "trained single-agent policy beats random by 30% length", 900.0},
      {4, "multi-agent length at or below single-agent", 1200.0},
      {5, "all learners beat random under congestion, both modes", 1200.0},
      {6, "scored honeypots reach deception success sooner", 1200.0},
      {7, "median imitation score non-increasing over updates", 60.0},
      {8, "codec round-trips and validators stay clean", 60.0},
      {9, "analytic gradients match finite differences", 60.0},
      {10, "presets re-run byte-identically", 0.0},
  };

  int failures = 0;
  ArmResult ppo_single;
  for (const auto& e : entries) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    switch (e.id) {
      case 1: v = criterion_pdec_table(); break;
      case 2: v = criterion_reward_algebra(); break;
      case 3: v = criterion_single_vs_random(ppo_single); break;
      case 4: v = criterion_multi_vs_single(ppo_single); break;
      case 5: v = criterion_congestion(e.budget_s, t0); break;
      case 6: v = criterion_llm_benefit(); break;
      case 7: v = criterion_score_monotone(); break;
      case 8: v = criterion_codec_validator(); break;
      case 9: v = criterion_gradients(); break;
      case 10: v = criterion_determinism(); break;
    }
    const double secs = elapsed_s(t0);
    if (e.budget_s > 0.0 && secs > e.budget_s) {
      v.ok = false;
      v.note += (v.note.empty() ? "" : "; ") + fmt("over %.0fs budget", e.budget_s);
    }
    std::printf("%2d %s (%.1fs)  %s\n", e.id, v.ok ? "PASS" : "FAIL", secs,
                v.note.c_str());
    std::fflush(stdout);
    if (!v.ok) ++failures;
  }
  std::printf("acceptance: %d/10 criteria passed\n", 10 - failures);
  return failures;
}
