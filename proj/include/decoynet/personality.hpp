#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "decoynet/config.hpp"
#include "decoynet/dnp3.hpp"
#include "decoynet/errors.hpp"
#include "decoynet/rng.hpp"

// Honeypot deception backend: a retrieval-conditioned n-gram generation model
// stands in for a hosted LLM behind a pluggable scoring interface. The RL
// coupling consumes only the deception probability, so the backend choice is
// orthogonal to the rest of the system.

namespace decoynet::personality {

using dnp3::Dnp3Message;
using dnp3::FunctionCode;
using dnp3::PointKind;
using dnp3::PointValue;
using dnp3::SessionState;
using dnp3::TimingProfile;

// ---------------------------------------------------------------------------
// Tokenization

// Splits on whitespace and punctuation; a '-' opens a token only when it
// prefixes a digit so negative fixed-point readings survive as one token.
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (size_t i = 0; i < text.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isalnum(c) || c == '_') {
      cur.push_back(text[i]);
    } else if (c == '-' && cur.empty() && i + 1 < text.size() &&
               std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
      cur.push_back('-');
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// Canonical token rendering of a reply's value-bearing content, ordered by
// (kind, index) so equal states render identically.
inline std::vector<std::string> render_response_tokens(const Dnp3Message& m) {
  std::vector<PointValue> objs = m.objects;
  std::sort(objs.begin(), objs.end(), [](const PointValue& a, const PointValue& b) {
    return std::pair(a.kind, a.index) < std::pair(b.kind, b.index);
  });
  std::vector<std::string> out;
  for (const auto& o : objs) {
    switch (o.kind) {
      case PointKind::binary_input: out.push_back("BI"); break;
      case PointKind::analog_input: out.push_back("AI"); break;
      case PointKind::crob: out.push_back("CROB"); break;
    }
    out.push_back(std::to_string(o.index));
    out.push_back(std::to_string(o.value));
  }
  return out;
}

// ---------------------------------------------------------------------------
// n-gram model

constexpr const char* kBos = "<s>";
constexpr const char* kUnk = "<unk>";

// Add-k smoothed n-gram counts. Contexts are keyed by raw training tokens;
// scoring maps out-of-vocabulary tokens to <unk>, which always carries
// probability mass k / (C + k|V|) > 0 so perplexity stays finite.
struct NGramModel {
  int order = 3;
  double k = 0.1;
  std::map<std::vector<std::string>, std::map<std::string, int>> counts;
  std::map<std::vector<std::string>, int> context_totals;
  std::map<std::string, int> vocab_counts;  // refcounts; erased at zero

  size_t vocab_size() const { return vocab_counts.size() + 1; }  // + <unk>

  std::vector<std::string> map_context(const std::vector<std::string>& raw) const {
    const size_t n = static_cast<size_t>(order - 1);
    std::vector<std::string> ctx;
    const size_t start = raw.size() > n ? raw.size() - n : 0;
    for (size_t i = 0; i < n; ++i) {
      if (i < n - (raw.size() - start)) {
        ctx.push_back(kBos);
      } else {
        const std::string& t = raw[start + i - (n - (raw.size() - start))];
        ctx.push_back(t == kBos || vocab_counts.count(t) ? t : kUnk);
      }
    }
    return ctx;
  }

  // P(token | context) = (c + k) / (C + k|V|); sums to 1 over the vocabulary.
  double prob(const std::vector<std::string>& raw_ctx, const std::string& raw_tok) const {
    const std::vector<std::string> ctx = map_context(raw_ctx);
    const std::string tok = vocab_counts.count(raw_tok) ? raw_tok : kUnk;
    int c = 0, total = 0;
    auto ti = context_totals.find(ctx);
    if (ti != context_totals.end()) {
      total = ti->second;
      auto ci = counts.find(ctx);
      if (ci != counts.end()) {
        auto cj = ci->second.find(tok);
        if (cj != ci->second.end()) c = cj->second;
      }
    }
    return (c + k) / (total + k * static_cast<double>(vocab_size()));
  }
};

namespace detail {

inline std::vector<std::string> context_at(const std::vector<std::string>& seq, size_t j,
                                           int order) {
  std::vector<std::string> ctx;
  const size_t n = static_cast<size_t>(order - 1);
  for (size_t i = 0; i < n; ++i) {
    const size_t back = n - i;
    if (j >= back)
      ctx.push_back(seq[j - back]);
    else
      ctx.push_back(kBos);
  }
  return ctx;
}

}  // namespace detail

inline void add_sequence(NGramModel& m, const std::vector<std::string>& seq) {
  for (const auto& t : seq) ++m.vocab_counts[t];
  for (size_t j = 0; j < seq.size(); ++j) {
    const auto ctx = detail::context_at(seq, j, m.order);
    ++m.counts[ctx][seq[j]];
    ++m.context_totals[ctx];
  }
}

inline void remove_sequence(NGramModel& m, const std::vector<std::string>& seq) {
  for (const auto& t : seq) {
    auto it = m.vocab_counts.find(t);
    if (it != m.vocab_counts.end() && --it->second == 0) m.vocab_counts.erase(it);
  }
  for (size_t j = 0; j < seq.size(); ++j) {
    const auto ctx = detail::context_at(seq, j, m.order);
    auto ci = m.counts.find(ctx);
    if (ci == m.counts.end()) continue;
    auto cj = ci->second.find(seq[j]);
    if (cj != ci->second.end() && --cj->second == 0) ci->second.erase(cj);
    if (ci->second.empty()) m.counts.erase(ci);
    auto ti = m.context_totals.find(ctx);
    if (ti != m.context_totals.end() && --ti->second == 0) m.context_totals.erase(ti);
  }
}

inline NGramModel train_model(const std::vector<std::vector<std::string>>& corpus, int order,
                              double k) {
  if (corpus.empty()) throw ScoringError("train_model: empty corpus");
  if (order < 1) throw ConfigError("train_model: order must be >= 1");
  if (k <= 0.0) throw ConfigError("train_model: smoothing k must be > 0");
  NGramModel m;
  m.order = order;
  m.k = k;
  for (const auto& seq : corpus) add_sequence(m, seq);
  return m;
}

// ---------------------------------------------------------------------------
// Perplexity and the deception probability

struct PerplexityReport {
  int m_tokens = 0;
  double cross_entropy_bits = 0.0;  // H = -(1/M) sum log2 P(y_j)
  double m_perp = 1.0;              // 2^H
};

inline PerplexityReport perplexity(const NGramModel& model,
                                   const std::vector<std::string>& reference) {
  if (reference.empty()) throw ScoringError("perplexity: empty reference");
  double h = 0.0;
  for (size_t j = 0; j < reference.size(); ++j) {
    const auto ctx = detail::context_at(reference, j, model.order);
    h -= std::log2(model.prob(ctx, reference[j]));
  }
  PerplexityReport rep;
  rep.m_tokens = static_cast<int>(reference.size());
  rep.cross_entropy_bits = h / static_cast<double>(reference.size());
  rep.m_perp = std::exp2(rep.cross_entropy_bits);
  return rep;
}

struct DeceptionScore {
  double p_dec = 0.0;
};

inline double score_input_value(const PerplexityReport& rep, ScoreInput sel) {
  return sel == ScoreInput::cross_entropy_bits ? rep.cross_entropy_bits : rep.m_perp;
}

// p_dec = 1 - 1 / (1 + 10 e^{-x}): low model surprise means the imitation is
// hard to tell from the real device, so deception probability climbs.
inline double deception_sigmoid(double x) {
  return 1.0 - 1.0 / (1.0 + 10.0 * std::exp(-x));
}

inline DeceptionScore deception_probability(const PerplexityReport& rep, ScoreInput sel) {
  return DeceptionScore{deception_sigmoid(score_input_value(rep, sel))};
}

// ---------------------------------------------------------------------------
// Personality

struct PersonalityPoint {
  PointKind kind = PointKind::binary_input;
  int index = 0;
  std::int32_t baseline = 0;
  std::int32_t range_min = 0;
  std::int32_t range_max = 1;
};

struct Personality {
  std::string vendor = "GE Harris";
  std::string model = "D20MX";
  std::string firmware = "v2.14 outstation";
  std::vector<PersonalityPoint> point_table;
  std::set<FunctionCode> security_profile;
  TimingProfile timing;
};

inline void validate(const Personality& p) {
  if (p.security_profile.empty()) throw ConfigError("personality: empty security_profile");
  if (p.point_table.empty()) throw ConfigError("personality: empty point_table");
  for (const auto& pt : p.point_table) {
    if (pt.range_min > pt.range_max) throw ConfigError("personality: inverted plausible range");
    if (pt.baseline < pt.range_min || pt.baseline > pt.range_max)
      throw ConfigError("personality: baseline outside plausible range");
    if (pt.range_max - pt.range_min > 20000)
      throw ConfigError("personality: plausible range too wide to enumerate");
    if (pt.kind == PointKind::binary_input && (pt.range_min < 0 || pt.range_max > 1))
      throw ConfigError("personality: binary range must stay within {0,1}");
  }
}

// Mirrors the real outstation's table so the imitation starts plausible.
inline Personality default_personality() {
  Personality p;
  for (const auto& rp : dnp3::default_point_table()) {
    PersonalityPoint pt;
    pt.kind = rp.kind;
    pt.index = rp.index;
    pt.baseline = rp.baseline;
    if (rp.kind == PointKind::binary_input) {
      pt.range_min = 0;
      pt.range_max = 1;
    } else {
      pt.range_min = rp.baseline - 50;
      pt.range_max = rp.baseline + 50;
    }
    p.point_table.push_back(pt);
  }
  p.security_profile = {FunctionCode::read, FunctionCode::write, FunctionCode::select,
                        FunctionCode::operate, FunctionCode::direct_operate};
  return p;
}

inline FunctionCode function_from_string(const std::string& s) {
  if (s == "read") return FunctionCode::read;
  if (s == "write") return FunctionCode::write;
  if (s == "select") return FunctionCode::select;
  if (s == "operate") return FunctionCode::operate;
  if (s == "direct_operate") return FunctionCode::direct_operate;
  throw ConfigError("personality: unknown function code '" + s + "'");
}

inline std::string kind_to_string(PointKind k) {
  switch (k) {
    case PointKind::binary_input: return "binary_input";
    case PointKind::analog_input: return "analog_input";
    case PointKind::crob: return "crob";
  }
  return "?";
}

inline PointKind kind_from_string(const std::string& s) {
  if (s == "binary_input") return PointKind::binary_input;
  if (s == "analog_input") return PointKind::analog_input;
  if (s == "crob") return PointKind::crob;
  throw ConfigError("personality: unknown point kind '" + s + "'");
}

inline json personality_to_json(const Personality& p) {
  json points = json::array();
  for (const auto& pt : p.point_table)
    points.push_back({{"kind", kind_to_string(pt.kind)},
                      {"index", pt.index},
                      {"baseline", pt.baseline},
                      {"range_min", pt.range_min},
                      {"range_max", pt.range_max}});
  json fns = json::array();
  for (auto f : p.security_profile) fns.push_back(dnp3::to_string(f));
  return json{{"vendor", p.vendor},
              {"model", p.model},
              {"firmware", p.firmware},
              {"points", points},
              {"functions", fns},
              {"timing", {{"base_latency_ms", p.timing.base_latency_ms},
                          {"jitter_ms", p.timing.jitter_ms}}}};
}

inline Personality personality_from_json(const json& j) {
  Personality p;
  if (j.contains("vendor")) p.vendor = j.at("vendor").get<std::string>();
  if (j.contains("model")) p.model = j.at("model").get<std::string>();
  if (j.contains("firmware")) p.firmware = j.at("firmware").get<std::string>();
  if (j.contains("points")) {
    p.point_table.clear();
    for (const auto& e : j.at("points")) {
      PersonalityPoint pt;
      pt.kind = kind_from_string(e.at("kind").get<std::string>());
      pt.index = e.at("index").get<int>();
      pt.baseline = e.at("baseline").get<std::int32_t>();
      pt.range_min = e.at("range_min").get<std::int32_t>();
      pt.range_max = e.at("range_max").get<std::int32_t>();
      p.point_table.push_back(pt);
    }
  }
  if (j.contains("functions")) {
    p.security_profile.clear();
    for (const auto& f : j.at("functions"))
      p.security_profile.insert(function_from_string(f.get<std::string>()));
  }
  if (j.contains("timing")) {
    const auto& t = j.at("timing");
    if (t.contains("base_latency_ms")) p.timing.base_latency_ms = t.at("base_latency_ms").get<int>();
    if (t.contains("jitter_ms")) p.timing.jitter_ms = t.at("jitter_ms").get<int>();
  }
  validate(p);
  return p;
}

// ---------------------------------------------------------------------------
// Schema-constrained generation

namespace detail {

// Sample a value from the model's conditional distribution restricted to the
// point's plausible range; add-k smoothing keeps unseen values reachable.
inline std::int32_t sample_point_value(const NGramModel& model, const std::string& kind_tag,
                                       const PersonalityPoint& pt, Rng& rng) {
  const std::vector<std::string> ctx{kind_tag, std::to_string(pt.index)};
  double total = 0.0;
  std::vector<double> w;
  w.reserve(static_cast<size_t>(pt.range_max - pt.range_min + 1));
  for (std::int32_t v = pt.range_min; v <= pt.range_max; ++v) {
    const double p = model.prob(ctx, std::to_string(v));
    w.push_back(p);
    total += p;
  }
  double u = rng.next_double() * total;
  for (size_t i = 0; i < w.size(); ++i) {
    u -= w[i];
    if (u <= 0.0) return pt.range_min + static_cast<std::int32_t>(i);
  }
  return pt.range_max;
}

}  // namespace detail

// Response construction is schema-driven, so structural validation passes by
// construction: seq copied, points complete, iin synthesized from the same
// rules the real device follows. Only point values come from the model.
inline Dnp3Message generate_response(const NGramModel& model, const Personality& personality,
                                     const std::vector<std::int32_t>& current_values,
                                     const Dnp3Message& request, const SessionState& session,
                                     std::uint32_t step, std::uint64_t rng_seed) {
  Rng rng(mix_seed(rng_seed, 0xdecabULL));
  Dnp3Message resp;
  resp.direction = dnp3::Direction::response;
  resp.function = FunctionCode::response_fn;
  resp.seq = request.seq;

  if (!personality.security_profile.count(request.function)) {
    resp.iin |= dnp3::iin::function_not_supported;
    return resp;
  }

  auto emit_point = [&](const PersonalityPoint& pt, size_t table_pos) {
    PointValue o;
    o.kind = pt.kind;
    o.index = pt.index;
    o.timestamp = step;
    if (pt.kind == PointKind::binary_input && table_pos < current_values.size()) {
      // latched state is authoritative; the model only shapes measurements
      o.value = current_values[table_pos];
    } else {
      const std::string tag = pt.kind == PointKind::binary_input ? "BI" : "AI";
      o.value = detail::sample_point_value(model, tag, pt, rng);
    }
    resp.objects.push_back(o);
  };

  switch (request.function) {
    case FunctionCode::read:
      if (request.objects.empty()) {
        for (size_t i = 0; i < personality.point_table.size(); ++i)
          emit_point(personality.point_table[i], i);
      } else {
        for (const auto& want : request.objects) {
          bool found = false;
          for (size_t i = 0; i < personality.point_table.size(); ++i) {
            const auto& pt = personality.point_table[i];
            if (pt.kind == want.kind && pt.index == want.index) {
              emit_point(pt, i);
              found = true;
              break;
            }
          }
          if (!found) resp.iin |= dnp3::iin::object_unknown;
        }
      }
      break;
    case FunctionCode::operate:
      if (session.sbo_enabled && !dnp3::select_matches(session, request)) {
        resp.iin |= dnp3::iin::select_required;
        break;
      }
      [[fallthrough]];
    case FunctionCode::write:
    case FunctionCode::select:
    case FunctionCode::direct_operate:
      resp.objects = request.objects;
      for (auto& o : resp.objects) o.timestamp = step;
      break;
    default: resp.iin |= dnp3::iin::function_not_supported; break;
  }
  return resp;
}

// Convenience overload: baseline state, fresh session.
inline Dnp3Message generate_response(const NGramModel& model, const Personality& personality,
                                     const Dnp3Message& request, std::uint64_t rng_seed) {
  std::vector<std::int32_t> baseline;
  for (const auto& pt : personality.point_table) baseline.push_back(pt.baseline);
  SessionState fresh;
  return generate_response(model, personality, baseline, request, fresh, 0, rng_seed);
}

// ---------------------------------------------------------------------------
// Datastore (Algorithm-1 retrieval memory)

struct Datastore {
  size_t window = 512;
  std::deque<std::vector<std::string>> snapshots;
};

// FIFO-bounded append; returns the evicted sequence when the window was full
// so the model's counts can be decremented to match.
inline std::vector<std::string> update_datastore(Datastore& d,
                                                 const std::vector<std::string>& snapshot) {
  std::vector<std::string> evicted;
  if (d.snapshots.size() == d.window) {
    evicted = std::move(d.snapshots.front());
    d.snapshots.pop_front();
  }
  d.snapshots.push_back(snapshot);
  return evicted;
}

// ---------------------------------------------------------------------------
// Honeypot device: personality + model + datastore behind one poll interface.

class HoneypotDevice {
 public:
  explicit HoneypotDevice(Personality p = default_personality(),
                          PersonalityConfig cfg = PersonalityConfig{})
      : personality_(std::move(p)), cfg_(cfg) {
    validate(personality_);
    session_.sbo_enabled = true;
    for (const auto& pt : personality_.point_table) current_values_.push_back(pt.baseline);
    datastore_.window = static_cast<size_t>(cfg_.datastore_window);
    // context injection: the personality's own baseline seeds the model
    model_ = train_model({baseline_tokens()}, cfg_.order, cfg_.smoothing_k);
  }

  const Personality& personality() const { return personality_; }
  const NGramModel& model() const { return model_; }
  const Datastore& datastore() const { return datastore_; }
  const TimingProfile& timing() const { return personality_.timing; }
  void set_sbo(bool enabled) { session_.sbo_enabled = enabled; }

  // New engagement: protocol session and pretend-latched points start clean,
  // but the learned model and datastore survive (the decoy keeps maturing).
  void reset_episode() {
    const bool sbo = session_.sbo_enabled;
    session_ = SessionState{};
    session_.sbo_enabled = sbo;
    current_values_.clear();
    for (const auto& pt : personality_.point_table) current_values_.push_back(pt.baseline);
  }

  int latency(std::uint64_t rng_seed) const {
    Rng rng(mix_seed(rng_seed, 0x1a7eULL));
    const auto& t = personality_.timing;
    return t.base_latency_ms +
           static_cast<int>(rng.next_below(static_cast<std::uint64_t>(2 * t.jitter_ms + 1))) -
           t.jitter_ms;
  }

  Dnp3Message respond(const Dnp3Message& request, std::uint32_t step, std::uint64_t rng_seed) {
    const bool sbo_ok = !session_.sbo_enabled ||
                        request.function != FunctionCode::operate ||
                        dnp3::select_matches(session_, request);
    Dnp3Message resp =
        generate_response(model_, personality_, current_values_, request, session_, step, rng_seed);
    dnp3::session_note_request(session_, request);
    // pretend commands take effect so follow-up polls stay consistent
    if ((request.function == FunctionCode::direct_operate ||
         (request.function == FunctionCode::operate && sbo_ok)) &&
        personality_.security_profile.count(request.function)) {
      for (const auto& cmd : request.objects) {
        if (cmd.kind != PointKind::crob) continue;
        for (size_t i = 0; i < personality_.point_table.size(); ++i) {
          const auto& pt = personality_.point_table[i];
          if (pt.kind != PointKind::binary_input || pt.index != cmd.index) continue;
          if (cmd.value == static_cast<std::int32_t>(dnp3::CrobCode::latch_on))
            current_values_[i] = 1;
          if (cmd.value == static_cast<std::int32_t>(dnp3::CrobCode::latch_off))
            current_values_[i] = 0;
        }
      }
    }
    return resp;
  }

  // Algorithm-1 update: a ground-truth snapshot enters the datastore and the
  // model's counts incrementally (evictions are subtracted), keeping the
  // model equal to a batch rebuild over the datastore plus the baseline seed.
  void observe_truth(const std::vector<std::string>& snapshot_tokens) {
    auto evicted = update_datastore(datastore_, snapshot_tokens);
    if (!evicted.empty()) remove_sequence(model_, evicted);
    add_sequence(model_, snapshot_tokens);
  }

  PerplexityReport score(const std::vector<std::string>& reference) const {
    return perplexity(model_, reference);
  }

  std::vector<std::string> baseline_tokens() const {
    std::vector<std::string> out;
    for (const auto& pt : personality_.point_table) {
      out.push_back(pt.kind == PointKind::binary_input ? "BI" : "AI");
      out.push_back(std::to_string(pt.index));
      out.push_back(std::to_string(pt.baseline));
    }
    return out;
  }

 private:
  Personality personality_;
  PersonalityConfig cfg_;
  NGramModel model_;
  Datastore datastore_;
  SessionState session_;
  std::vector<std::int32_t> current_values_;
};

}  // namespace decoynet::personality
