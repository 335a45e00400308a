#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "decoynet/personality.hpp"

using namespace decoynet;
using namespace decoynet::personality;
using dnp3::CrobCode;
using dnp3::Direction;
using dnp3::Dnp3Message;
using dnp3::FunctionCode;
using dnp3::PointKind;

namespace {

std::vector<std::string> toks(std::initializer_list<const char*> ts) {
  std::vector<std::string> out;
  for (const char* t : ts) out.emplace_back(t);
  return out;
}

Dnp3Message class0_poll(int seq) {
  Dnp3Message m;
  m.function = FunctionCode::read;
  m.seq = seq;
  return m;
}

}  // namespace

TEST_CASE("tokenizer splits on whitespace and punctuation", "[personality]") {
  CHECK(tokenize("BREAKER 3 OPEN") == toks({"BREAKER", "3", "OPEN"}));
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("volts=10450, ok? -5") == toks({"volts", "10450", "ok", "-5"}));
  CHECK(tokenize("  AI\t0\n10450 ") == toks({"AI", "0", "10450"}));
  CHECK(tokenize("a-b") == toks({"a", "b"}));  // '-' splits unless it signs a number
}

TEST_CASE("response rendering is canonical", "[personality]") {
  Dnp3Message m;
  m.direction = Direction::response;
  m.function = FunctionCode::response_fn;
  m.objects.push_back({PointKind::analog_input, 0, 7, 10450});
  m.objects.push_back({PointKind::binary_input, 1, 7, 1});
  // rendered sorted by (kind, index) regardless of wire order
  CHECK(render_response_tokens(m) == toks({"BI", "1", "1", "AI", "0", "10450"}));

  // rendering round-trips through text via the tokenizer
  std::string joined;
  for (const auto& t : render_response_tokens(m)) joined += t + " ";
  CHECK(tokenize(joined) == render_response_tokens(m));
}

TEST_CASE("n-gram training matches hand counts", "[personality]") {
  auto model = train_model({toks({"a", "b", "a", "b"})}, 2, 0.1);

  // contexts: [<s>]->a once; [a]->b twice; [b]->a once. V = {a,b,<unk>}.
  const double V = 3.0;
  CHECK(model.vocab_size() == 3);
  CHECK(model.prob({"a"}, "b") == Catch::Approx((2 + 0.1) / (2 + 0.1 * V)).epsilon(1e-12));
  CHECK(model.prob({"a"}, "a") == Catch::Approx(0.1 / (2 + 0.1 * V)).epsilon(1e-12));
  CHECK(model.prob({"a"}, "b") > model.prob({"a"}, "a"));
  CHECK(model.prob({kBos}, "a") == Catch::Approx((1 + 0.1) / (1 + 0.1 * V)).epsilon(1e-12));

  CHECK_THROWS_AS(train_model({}, 2, 0.1), ScoringError);
  CHECK_THROWS_AS(train_model({toks({"a"})}, 0, 0.1), ConfigError);
  CHECK_THROWS_AS(train_model({toks({"a"})}, 2, 0.0), ConfigError);
}

TEST_CASE("per-context distributions sum to one", "[personality]") {
  auto model = train_model({toks({"a", "b", "a", "c"}), toks({"c", "b"})}, 3, 0.1);
  std::vector<std::vector<std::string>> contexts = {
      {kBos, kBos}, {kBos, "a"}, {"a", "b"}, {"b", "a"}, {"z", "q"}, {"c", "c"}};
  for (const auto& ctx : contexts) {
    double sum = 0.0;
    for (const auto& [tok, n] : model.vocab_counts) {
      (void)n;
      sum += model.prob(ctx, tok);
    }
    sum += model.prob(ctx, kUnk);
    REQUIRE(sum == Catch::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("counts are additive and removable", "[personality]") {
  std::vector<std::vector<std::string>> c1 = {toks({"a", "b", "c"}), toks({"b", "b"})};
  std::vector<std::vector<std::string>> c2 = {toks({"c", "a"}), toks({"d"})};

  std::vector<std::vector<std::string>> merged = c1;
  merged.insert(merged.end(), c2.begin(), c2.end());
  auto batch = train_model(merged, 3, 0.1);

  auto incr = train_model(c1, 3, 0.1);
  for (const auto& s : c2) add_sequence(incr, s);
  CHECK(incr.counts == batch.counts);
  CHECK(incr.context_totals == batch.context_totals);
  CHECK(incr.vocab_counts == batch.vocab_counts);

  // removing what was added restores the original exactly
  auto only_c1 = train_model(c1, 3, 0.1);
  for (const auto& s : c2) remove_sequence(incr, s);
  CHECK(incr.counts == only_c1.counts);
  CHECK(incr.context_totals == only_c1.context_totals);
  CHECK(incr.vocab_counts == only_c1.vocab_counts);
}

TEST_CASE("perplexity limits", "[personality]") {
  SECTION("model trained on exactly the reference approaches 1") {
    auto seq = toks({"x", "x", "x", "x"});
    auto model = train_model({seq}, 1, 1e-9);
    auto rep = perplexity(model, seq);
    CHECK(rep.m_perp == Catch::Approx(1.0).margin(1e-6));
    CHECK(rep.cross_entropy_bits == Catch::Approx(0.0).margin(1e-6));
  }

  SECTION("unseen context yields uniform 1/|V| per token") {
    auto model = train_model({toks({"a", "b", "c", "d"})}, 2, 0.1);
    REQUIRE(model.vocab_size() == 5);
    for (const char* t : {"a", "b", "c", "d", "z"})
      CHECK(model.prob({"z"}, t) == Catch::Approx(0.2).epsilon(1e-12));
    // reference [z,z,z]: the first context <s> was seen in training (C=1),
    // the remaining contexts are unseen, so m_perp = cbrt(15 * 5 * 5)
    auto rep = perplexity(model, toks({"z", "z", "z"}));
    CHECK(rep.m_perp == Catch::Approx(std::cbrt(15.0 * 25.0)).epsilon(1e-9));
  }

  SECTION("empty reference is a scoring error") {
    auto model = train_model({toks({"a"})}, 2, 0.1);
    CHECK_THROWS_AS(perplexity(model, {}), ScoringError);
  }
}

TEST_CASE("perplexity matches an independent log-sum oracle", "[personality]") {
  auto model = train_model({toks({"a", "b", "a"}), toks({"b", "a", "b"})}, 2, 0.1);
  auto rep = perplexity(model, toks({"a", "b", "b"}));

  // hand counts: [<s>]: a:1 b:1 (C=2); [a]: b:2 (C=2); [b]: a:2 (C=2); V=3
  const double kV = 0.1 * 3;
  const double p1 = (1 + 0.1) / (2 + kV);  // a | <s>
  const double p2 = (2 + 0.1) / (2 + kV);  // b | a
  const double p3 = (0 + 0.1) / (2 + kV);  // b | b
  const double h = -(std::log2(p1) + std::log2(p2) + std::log2(p3)) / 3.0;
  CHECK(rep.cross_entropy_bits == Catch::Approx(h).epsilon(1e-9));
  CHECK(rep.m_perp == Catch::Approx(std::exp2(h)).epsilon(1e-9));
  CHECK(rep.m_tokens == 3);

  // identity between the two report fields
  CHECK(rep.m_perp == Catch::Approx(std::exp2(rep.cross_entropy_bits)).epsilon(1e-9));
}

TEST_CASE("deception probability reproduces the published mapping", "[personality]") {
  const double xs[] = {5.07, 4.34, 3.27, 2.1, 1.03, 0.12};
  const double expected[] = {0.06, 0.115, 0.275, 0.55, 0.78, 0.9};
  for (int i = 0; i < 6; ++i) {
    PerplexityReport rep;
    rep.m_perp = xs[i];
    rep.cross_entropy_bits = xs[i];
    for (auto sel : {ScoreInput::perplexity, ScoreInput::cross_entropy_bits}) {
      auto score = deception_probability(rep, sel);
      INFO("x=" << xs[i]);
      CHECK(score.p_dec == Catch::Approx(expected[i]).margin(0.01));
    }
  }
}

TEST_CASE("deception probability is strictly decreasing in the score", "[personality]") {
  double prev = 2.0;
  for (double x = -1.0; x <= 6.0; x += 0.05) {
    PerplexityReport rep;
    rep.cross_entropy_bits = x;
    const double p = deception_probability(rep, ScoreInput::cross_entropy_bits).p_dec;
    REQUIRE(p < prev);
    REQUIRE(p > 0.0);
    REQUIRE(p < 1.0);
    prev = p;
  }
}

TEST_CASE("generated responses are schema-complete and validator-clean", "[personality]") {
  HoneypotDevice dev;
  dnp3::SessionState observer;
  auto resp = dev.respond(class0_poll(3), 5, 77);

  REQUIRE(resp.objects.size() == dev.personality().point_table.size());
  for (size_t i = 0; i < resp.objects.size(); ++i) {
    const auto& pt = dev.personality().point_table[i];
    CHECK(resp.objects[i].kind == pt.kind);
    CHECK(resp.objects[i].index == pt.index);
    CHECK(resp.objects[i].value >= pt.range_min);
    CHECK(resp.objects[i].value <= pt.range_max);
    CHECK(resp.objects[i].timestamp == 5);
  }
  CHECK(resp.seq == 3);

  auto rep = dnp3::validate_response(class0_poll(3), resp, observer, dev.latency(5), dev.timing());
  CHECK(rep.compliant());
}

TEST_CASE("generation is deterministic in the seed", "[personality]") {
  NGramModel model = train_model({toks({"AI", "0", "10450"})}, 3, 0.1);
  Personality p = default_personality();
  auto a = generate_response(model, p, class0_poll(1), 99);
  auto b = generate_response(model, p, class0_poll(1), 99);
  CHECK(dnp3::encode(a) == dnp3::encode(b));
}

TEST_CASE("honeypot mirrors command validation behavior", "[personality]") {
  HoneypotDevice dev;

  SECTION("operate without select is refused with select_required") {
    Dnp3Message op;
    op.function = FunctionCode::operate;
    op.seq = 2;
    op.objects.push_back({PointKind::crob, 0, 0, static_cast<std::int32_t>(CrobCode::latch_off)});
    auto resp = dev.respond(op, 1, 5);
    CHECK((resp.iin & dnp3::iin::select_required) != 0);

    // the refused latch must not take effect
    auto poll = dev.respond(class0_poll(3), 2, 6);
    CHECK(poll.objects[0].value == 1);
  }

  SECTION("select then operate latches and follow-up polls stay consistent") {
    Dnp3Message sel;
    sel.function = FunctionCode::select;
    sel.seq = 4;
    sel.objects.push_back({PointKind::crob, 0, 0, static_cast<std::int32_t>(CrobCode::latch_off)});
    dev.respond(sel, 1, 7);
    Dnp3Message op = sel;
    op.function = FunctionCode::operate;
    auto resp = dev.respond(op, 2, 8);
    CHECK(resp.iin == 0);

    auto poll = dev.respond(class0_poll(5), 3, 9);
    CHECK(poll.objects[0].value == 0);  // breaker 0 reported open from now on
  }

  SECTION("unsupported function gets the function_not_supported flag") {
    Personality narrow = default_personality();
    narrow.security_profile = {FunctionCode::read};
    HoneypotDevice locked(narrow);
    Dnp3Message sel;
    sel.function = FunctionCode::select;
    sel.seq = 1;
    auto resp = locked.respond(sel, 1, 3);
    CHECK((resp.iin & dnp3::iin::function_not_supported) != 0);
  }
}

TEST_CASE("trained model concentrates generated values on observations", "[personality]") {
  Personality p = default_personality();
  p.point_table = {{PointKind::analog_input, 0, 10450, 10400, 10500}};

  NGramModel model = train_model({toks({"AI", "0", "10450"})}, 3, 0.1);
  for (int i = 0; i < 50; ++i) add_sequence(model, toks({"AI", "0", "10423"}));

  int hits = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto resp = generate_response(model, p, class0_poll(0), seed);
    REQUIRE(resp.objects.size() == 1);
    if (resp.objects[0].value == 10423) ++hits;
  }
  CHECK(hits >= 24);  // observed value dominates the plausible range
}

TEST_CASE("datastore evicts FIFO at the window bound", "[personality]") {
  Datastore d;
  d.window = 3;
  CHECK(update_datastore(d, toks({"a"})).empty());
  CHECK(update_datastore(d, toks({"b"})).empty());
  CHECK(update_datastore(d, toks({"c"})).empty());
  auto evicted = update_datastore(d, toks({"d"}));
  CHECK(evicted == toks({"a"}));
  CHECK(d.snapshots.size() == 3);
  CHECK(d.snapshots.front() == toks({"b"}));
  CHECK(d.snapshots.back() == toks({"d"}));
}

TEST_CASE("incremental model equals a batch rebuild over the datastore", "[personality]") {
  PersonalityConfig cfg;
  cfg.datastore_window = 5;
  HoneypotDevice dev(default_personality(), cfg);

  Rng rng(4242);
  for (int i = 0; i < 17; ++i) {
    std::vector<std::string> snap = {"AI", "0", std::to_string(10400 + rng.next_below(100)),
                                     "BI", "0", std::to_string(rng.next_below(2))};
    dev.observe_truth(snap);

    std::vector<std::vector<std::string>> corpus = {dev.baseline_tokens()};
    for (const auto& s : dev.datastore().snapshots) corpus.push_back(s);
    auto batch = train_model(corpus, cfg.order, cfg.smoothing_k);

    REQUIRE(dev.model().counts == batch.counts);
    REQUIRE(dev.model().context_totals == batch.context_totals);
    REQUIRE(dev.model().vocab_counts == batch.vocab_counts);
  }
  CHECK(dev.datastore().snapshots.size() == 5);
}

TEST_CASE("perplexity trend is non-increasing on a stationary query stream", "[personality]") {
  const int kSeeds = 20, kUpdates = 6;
  std::vector<std::vector<double>> h(kSeeds);

  for (int s = 0; s < kSeeds; ++s) {
    HoneypotDevice pot;
    dnp3::RtuDevice real;
    for (int i = 0; i < kUpdates; ++i) {
      const std::uint32_t step = static_cast<std::uint32_t>(s * 100 + i);
      auto truth = real.respond(class0_poll(i % 16), step);
      auto ref = render_response_tokens(truth);
      h[static_cast<size_t>(s)].push_back(pot.score(ref).cross_entropy_bits);
      pot.observe_truth(ref);
    }
  }

  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };

  for (int i = 0; i + 1 < kUpdates; ++i) {
    std::vector<double> diffs;
    for (int s = 0; s < kSeeds; ++s)
      diffs.push_back(h[static_cast<size_t>(s)][static_cast<size_t>(i)] -
                      h[static_cast<size_t>(s)][static_cast<size_t>(i + 1)]);
    INFO("update " << i << " -> " << i + 1);
    CHECK(median(diffs) >= -1e-9);
  }

  std::vector<double> first_to_last;
  for (int s = 0; s < kSeeds; ++s)
    first_to_last.push_back(h[static_cast<size_t>(s)].front() - h[static_cast<size_t>(s)].back());
  CHECK(median(first_to_last) > 0.0);
}

TEST_CASE("deception probability rises as the imitation matures", "[personality]") {
  HoneypotDevice pot;
  dnp3::RtuDevice real;
  std::vector<double> p_dec;
  for (int i = 0; i < 7; ++i) {
    auto truth = real.respond(class0_poll(i % 16), static_cast<std::uint32_t>(i));
    auto ref = render_response_tokens(truth);
    p_dec.push_back(
        deception_probability(pot.score(ref), ScoreInput::cross_entropy_bits).p_dec);
    pot.observe_truth(ref);
  }
  CHECK(p_dec.back() > p_dec.front());
}

TEST_CASE("personality json round-trips and validates", "[personality]") {
  Personality p = default_personality();
  p.vendor = "ACME";
  p.timing.jitter_ms = 3;
  json j = personality_to_json(p);
  Personality back = personality_from_json(j);
  CHECK(back.vendor == p.vendor);
  CHECK(back.timing.jitter_ms == 3);
  CHECK(back.point_table.size() == p.point_table.size());
  CHECK(back.security_profile == p.security_profile);

  json bad = j;
  bad["points"][0]["baseline"] = 999999;
  CHECK_THROWS_AS(personality_from_json(bad), ConfigError);

  json nofns = j;
  nofns["functions"] = json::array();
  CHECK_THROWS_AS(personality_from_json(nofns), ConfigError);
}
