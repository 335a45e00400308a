#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "decoynet/harness.hpp"

using namespace decoynet;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
};

SimConfig load_base(const GlobalArgs& g) {
  SimConfig cfg = g.config_path.empty() ? SimConfig{} : load_config(g.config_path);
  if (g.seed_set) cfg.experiment.seeds = {g.seed};
  validate(cfg);
  return cfg;
}

void print_table(const harness::MetricsTable& t) {
  std::printf("%-20s %10s %10s %12s %12s %9s\n", t.name.c_str(), "len_mean", "len_std",
              "reward_mean", "reward_std", "episodes");
  for (const auto& r : t.rows)
    std::printf("%-20s %10.2f %10.2f %12.2f %12.2f %9d\n", r.agent.c_str(), r.len_mean,
                r.len_std, r.reward_mean, r.reward_std, r.episodes_evaluated);
}

// Row settings shared by the train and eval subcommands.
struct RowArgs {
  std::string learner = "ppo";
  std::string agents = "single";
  std::string mode = "cyber_only";
  std::string scenario = "none";
  int episodes = -1;       // -1: keep the config's budget
  int eval_episodes = -1;  // -1: keep the config's budget
  bool raw_learner = false;
};

void add_row_flags(CLI::App* cmd, RowArgs& r) {
  cmd->add_option("--learner", r.learner, "random | a2c | a2c_norm | ppo")
      ->capture_default_str();
  cmd->add_option("--agents", r.agents, "single | multi")->capture_default_str();
  cmd->add_option("--env-mode", r.mode,
                  "cyber_only | cyber_physical | cyber_physical_llm")
      ->capture_default_str();
  cmd->add_option("--scenario", r.scenario, "none | congestion")->capture_default_str();
  cmd->add_option("--episodes", r.episodes, "training episodes (default: config)");
  cmd->add_option("--eval-episodes", r.eval_episodes,
                  "evaluation episodes per seed (default: config)");
  cmd->add_flag("--raw-learner", r.raw_learner,
                "skip the per-learner step-size profile; run the config's learner "
                "section verbatim");
}

harness::ExperimentSpec spec_from_row(const SimConfig& cfg, const RowArgs& r) {
  harness::ExperimentSpec s;
  s.name = r.learner;
  s.learner = learn::learner_from_string(r.learner);
  s.agents = learn::agent_mode_from_string(r.agents);
  s.mode = env_mode_from_string(r.mode);
  s.scenario = scenario_from_string(r.scenario);
  s.episodes = r.episodes >= 0 ? r.episodes : cfg.experiment.episodes;
  s.eval_episodes = r.eval_episodes >= 0 ? r.eval_episodes : cfg.experiment.eval_episodes;
  s.seeds = cfg.experiment.seeds;
  s.tuned_learner = !r.raw_learner;
  return s;
}

int cmd_train(const GlobalArgs& g, const RowArgs& r) {
  const SimConfig base = load_base(g);
  auto spec = spec_from_row(base, r);
  harness::validate_spec(spec);
  const SimConfig cfg = harness::apply_spec(base, spec);
  for (std::uint64_t seed : spec.seeds) {
    auto tr = learn::train(cfg, spec.learner, spec.agents, seed);
    std::string body;
    for (const auto& row : tr.curve)
      body += nlohmann::json{{"episode", row.episode},
                             {"length", row.length},
                             {"reward", row.reward},
                             {"outcome", env::to_string(row.outcome)}}
                  .dump() +
              '\n';
    const auto path = std::filesystem::path(g.out_dir) /
                      ("train_" + spec.name + "_seed" + std::to_string(seed) + ".jsonl");
    harness::write_text_file(path, body);
    const size_t tail = std::min<size_t>(100, tr.curve.size());
    double len = 0.0, rew = 0.0;
    for (size_t i = tr.curve.size() - tail; i < tr.curve.size(); ++i) {
      len += tr.curve[i].length;
      rew += tr.curve[i].reward;
    }
    if (tail > 0) {
      len /= static_cast<double>(tail);
      rew /= static_cast<double>(tail);
    }
    std::printf("seed %llu: %zu episodes, last-%zu mean length %.2f, mean reward %.2f -> %s\n",
                static_cast<unsigned long long>(seed), tr.curve.size(), tail, len, rew,
                path.string().c_str());
  }
  return 0;
}

int cmd_eval(const GlobalArgs& g, const RowArgs& r, bool sampled) {
  const SimConfig base = load_base(g);
  auto spec = spec_from_row(base, r);
  spec.greedy_eval = !sampled;
  auto res = harness::run_experiment(base, spec);
  auto paths = harness::write_experiment(res, g.out_dir);
  print_table(res.table);
  std::printf("wrote %s and %s\n", paths.table_csv.string().c_str(),
              paths.traces_jsonl.string().c_str());
  return 0;
}

int cmd_table(const GlobalArgs& g, const std::string& preset) {
  const SimConfig base = load_base(g);
  auto rows = harness::preset_rows(preset, base);
  auto res = harness::run_experiment(base, rows, preset);
  auto paths = harness::write_experiment(res, g.out_dir);
  print_table(res.table);
  std::printf("wrote %s and %s\n", paths.table_csv.string().c_str(),
              paths.traces_jsonl.string().c_str());
  return 0;
}

int cmd_pdec_trace(const GlobalArgs& g) {
  const SimConfig base = load_base(g);
  auto spec = harness::pdec_trace_spec(base);
  auto pts = harness::run_pdec_trace(base, spec);
  const auto path = std::filesystem::path(g.out_dir) / "pdec_trace.jsonl";
  harness::write_text_file(path, harness::pdec_to_jsonl(pts));
  std::printf("%6s %12s %10s\n", "step", "score_input", "p_dec");
  for (const auto& p : pts) std::printf("%6d %12.4f %10.4f\n", p.step, p.score_input, p.p_dec);
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

int cmd_list_presets() {
  for (const auto& p : harness::list_presets())
    std::printf("%-12s %s\n", p.name.c_str(), p.summary.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seeded simulator of RL-driven rerouting deception on an OT network"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "JSON config document")
      ->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", g.seed, "run on this single seed");
  app.add_option("--out", g.out_dir, "output directory")->capture_default_str();

  auto* train = app.add_subcommand("train", "train a learner, write per-episode curves");
  RowArgs train_row;
  add_row_flags(train, train_row);
  train->fallthrough();

  auto* eval = app.add_subcommand("eval", "train, then evaluate; write table and traces");
  RowArgs eval_row;
  bool sampled = false;
  add_row_flags(eval, eval_row);
  eval->add_flag("--sampled", sampled, "evaluate the sampled policy instead of the mode");
  eval->fallthrough();

  auto* table = app.add_subcommand("table", "run a result-table preset");
  std::string preset;
  table->add_option("preset", preset, "preset name (see list-presets)")->required();
  table->fallthrough();

  auto* pdec = app.add_subcommand("pdec-trace",
                                  "deception-probability trace over one episode");
  pdec->fallthrough();

  auto* lp = app.add_subcommand("list-presets", "enumerate experiment presets");
  lp->fallthrough();

  CLI11_PARSE(app, argc, argv);
  g.seed_set = seed_opt->count() > 0;

  try {
    if (*train) return cmd_train(g, train_row);
    if (*eval) return cmd_eval(g, eval_row, sampled);
    if (*table) return cmd_table(g, preset);
    if (*pdec) return cmd_pdec_trace(g);
    if (*lp) return cmd_list_presets();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
