#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "decoynet/config.hpp"
#include "decoynet/errors.hpp"
#include "decoynet/rng.hpp"

// Application-layer DNP3 subset. Only request/response semantics are modeled;
// link/transport fragmentation and CRCs are out of scope. Byte layout is
// documented in docs/wire-format.md and frozen by hex fixtures in the tests.

namespace decoynet::dnp3 {

enum class Direction : std::uint8_t { request = 0, response = 1, unsolicited = 2 };

enum class FunctionCode : std::uint8_t {
  read = 0x01,
  write = 0x02,
  select = 0x03,
  operate = 0x04,
  direct_operate = 0x05,
  response_fn = 0x81,
  unsolicited_fn = 0x82,
};

enum class PointKind : std::uint8_t { binary_input = 0, analog_input = 1, crob = 2 };

// Control relay output block command codes.
enum class CrobCode : std::uint8_t { latch_on = 0, latch_off = 1, pulse_on = 2, pulse_off = 3 };

namespace iin {
// Internal indication bitflags carried by responses.
constexpr std::uint16_t device_restart = 0x0001;
constexpr std::uint16_t need_time = 0x0002;
constexpr std::uint16_t class1_events = 0x0004;
constexpr std::uint16_t function_not_supported = 0x0100;
constexpr std::uint16_t object_unknown = 0x0200;
constexpr std::uint16_t select_required = 0x0400;
constexpr std::uint16_t parameter_error = 0x0800;
}  // namespace iin

// Analog values are fixed-point integers so the codec is bit-exact: bus
// voltage p.u. x 10^4, power MW x 100. For crob points `value` holds the
// CrobCode; for binary inputs it is 0 or 1.
struct PointValue {
  PointKind kind = PointKind::binary_input;
  int index = 0;
  std::uint32_t timestamp = 0;
  std::int32_t value = 0;

  bool operator==(const PointValue&) const = default;
};

struct Dnp3Message {
  Direction direction = Direction::request;
  int seq = 0;  // 0..15, wraps modulo 16 across a session
  FunctionCode function = FunctionCode::read;
  std::uint16_t iin = 0;  // requests carry none; enforced at encode
  std::vector<PointValue> objects;

  bool operator==(const Dnp3Message&) const = default;
};

inline bool is_request_function(FunctionCode f) {
  switch (f) {
    case FunctionCode::read:
    case FunctionCode::write:
    case FunctionCode::select:
    case FunctionCode::operate:
    case FunctionCode::direct_operate: return true;
    default: return false;
  }
}

inline std::string to_string(FunctionCode f) {
  switch (f) {
    case FunctionCode::read: return "read";
    case FunctionCode::write: return "write";
    case FunctionCode::select: return "select";
    case FunctionCode::operate: return "operate";
    case FunctionCode::direct_operate: return "direct_operate";
    case FunctionCode::response_fn: return "response";
    case FunctionCode::unsolicited_fn: return "unsolicited";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Codec

namespace detail {

inline void check_invariants(const Dnp3Message& m) {
  if (m.seq < 0 || m.seq > 15) throw EncodeError("seq_range");
  switch (m.direction) {
    case Direction::request:
      if (!is_request_function(m.function)) throw EncodeError("direction_function");
      if (m.iin != 0) throw EncodeError("request_iin");
      break;
    case Direction::response:
      if (m.function != FunctionCode::response_fn) throw EncodeError("direction_function");
      break;
    case Direction::unsolicited:
      if (m.function != FunctionCode::unsolicited_fn) throw EncodeError("direction_function");
      break;
  }
  for (const auto& o : m.objects) {
    if (o.index < 0 || o.index > 0xFFFF) throw EncodeError("index_range");
    if (o.kind == PointKind::binary_input && o.value != 0 && o.value != 1)
      throw EncodeError("binary_value");
    if (o.kind == PointKind::crob && (o.value < 0 || o.value > 3)) throw EncodeError("crob_code");
  }
  if (m.objects.size() > 0xFFFF) throw EncodeError("object_count");
}

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

struct Cursor {
  const std::vector<std::uint8_t>& buf;
  size_t pos = 0;

  std::uint8_t u8() {
    if (pos + 1 > buf.size()) throw DecodeError(DecodeError::Kind::truncated, "truncated payload");
    return buf[pos++];
  }
  std::uint16_t u16() {
    std::uint16_t lo = u8(), hi = u8();
    return static_cast<std::uint16_t>(lo | (hi << 8));
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
};

}  // namespace detail

inline std::vector<std::uint8_t> encode(const Dnp3Message& m) {
  detail::check_invariants(m);
  std::vector<std::uint8_t> out{0x05, 0x64, 0x00, 0x00};  // length patched below

  const std::uint8_t control = static_cast<std::uint8_t>(
      0xC0 | (static_cast<std::uint8_t>(m.direction) << 4) | static_cast<std::uint8_t>(m.seq));
  out.push_back(control);
  out.push_back(static_cast<std::uint8_t>(m.function));
  if (m.direction != Direction::request) detail::put_u16(out, m.iin);
  detail::put_u16(out, static_cast<std::uint16_t>(m.objects.size()));
  for (const auto& o : m.objects) {
    out.push_back(static_cast<std::uint8_t>(o.kind));
    detail::put_u16(out, static_cast<std::uint16_t>(o.index));
    detail::put_u32(out, o.timestamp);
    switch (o.kind) {
      case PointKind::binary_input:
      case PointKind::crob: out.push_back(static_cast<std::uint8_t>(o.value)); break;
      case PointKind::analog_input: detail::put_u32(out, static_cast<std::uint32_t>(o.value)); break;
    }
  }
  const std::uint16_t length = static_cast<std::uint16_t>(out.size() - 4);
  out[2] = static_cast<std::uint8_t>(length & 0xFF);
  out[3] = static_cast<std::uint8_t>(length >> 8);
  return out;
}

inline Dnp3Message decode(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 2) throw DecodeError(DecodeError::Kind::truncated, "short frame");
  if (bytes[0] != 0x05 || bytes[1] != 0x64)
    throw DecodeError(DecodeError::Kind::bad_preamble, "bad preamble");
  detail::Cursor cur{bytes, 2};
  const std::uint16_t length = cur.u16();
  if (bytes.size() - 4 < length) throw DecodeError(DecodeError::Kind::truncated, "declared length exceeds frame");
  if (bytes.size() - 4 > length)
    throw DecodeError(DecodeError::Kind::bad_object, "trailing bytes after declared length");

  Dnp3Message m;
  const std::uint8_t control = cur.u8();
  if ((control & 0xC0) != 0xC0)
    throw DecodeError(DecodeError::Kind::bad_control, "control marker bits missing");
  const std::uint8_t dir_bits = (control >> 4) & 0x03;
  if (dir_bits > 2) throw DecodeError(DecodeError::Kind::bad_control, "bad direction bits");
  m.direction = static_cast<Direction>(dir_bits);
  m.seq = control & 0x0F;

  const std::uint8_t fn = cur.u8();
  switch (fn) {
    case 0x01: m.function = FunctionCode::read; break;
    case 0x02: m.function = FunctionCode::write; break;
    case 0x03: m.function = FunctionCode::select; break;
    case 0x04: m.function = FunctionCode::operate; break;
    case 0x05: m.function = FunctionCode::direct_operate; break;
    case 0x81: m.function = FunctionCode::response_fn; break;
    case 0x82: m.function = FunctionCode::unsolicited_fn; break;
    default: throw DecodeError(DecodeError::Kind::unknown_function, "unknown function code");
  }
  if (m.direction == Direction::request && !is_request_function(m.function))
    throw DecodeError(DecodeError::Kind::bad_control, "request direction with reply function");
  if (m.direction == Direction::response && m.function != FunctionCode::response_fn)
    throw DecodeError(DecodeError::Kind::bad_control, "response direction with request function");
  if (m.direction == Direction::unsolicited && m.function != FunctionCode::unsolicited_fn)
    throw DecodeError(DecodeError::Kind::bad_control, "unsolicited direction with request function");

  if (m.direction != Direction::request) m.iin = cur.u16();
  const std::uint16_t count = cur.u16();
  for (std::uint16_t i = 0; i < count; ++i) {
    PointValue o;
    const std::uint8_t kind = cur.u8();
    if (kind > 2) throw DecodeError(DecodeError::Kind::bad_object, "unknown point kind");
    o.kind = static_cast<PointKind>(kind);
    o.index = cur.u16();
    o.timestamp = cur.u32();
    switch (o.kind) {
      case PointKind::binary_input: {
        const std::uint8_t v = cur.u8();
        if (v > 1) throw DecodeError(DecodeError::Kind::bad_object, "binary value out of range");
        o.value = v;
        break;
      }
      case PointKind::crob: {
        const std::uint8_t v = cur.u8();
        if (v > 3) throw DecodeError(DecodeError::Kind::bad_object, "crob code out of range");
        o.value = v;
        break;
      }
      case PointKind::analog_input: o.value = static_cast<std::int32_t>(cur.u32()); break;
    }
    m.objects.push_back(o);
  }
  if (cur.pos != bytes.size())
    throw DecodeError(DecodeError::Kind::bad_object, "unconsumed object bytes");
  return m;
}

// ---------------------------------------------------------------------------
// Session tracking and response validation

struct TimingProfile {
  int base_latency_ms = 20;
  int jitter_ms = 5;
};

inline TimingProfile timing_from(const Dnp3Config& cfg) {
  return TimingProfile{cfg.base_latency_ms, cfg.jitter_ms};
}

// One master/attacker <-> outstation conversation. The validator takes the
// state as it stood BEFORE the request under test was issued; callers advance
// it afterwards with session_note_request.
struct SessionState {
  bool sbo_enabled = true;
  bool armed = false;  // an un-consumed select
  int armed_seq = -1;
  std::vector<std::pair<PointKind, int>> armed_points;
};

inline std::vector<std::pair<PointKind, int>> point_signature(const Dnp3Message& m) {
  std::vector<std::pair<PointKind, int>> sig;
  for (const auto& o : m.objects) sig.emplace_back(o.kind, o.index);
  std::sort(sig.begin(), sig.end());
  return sig;
}

// operate pairs with the armed select iff same seq and same object set.
inline bool select_matches(const SessionState& s, const Dnp3Message& operate_req) {
  return s.armed && s.armed_seq == operate_req.seq && s.armed_points == point_signature(operate_req);
}

// Any request other than select consumes/cancels a pending select.
inline void session_note_request(SessionState& s, const Dnp3Message& req) {
  if (req.function == FunctionCode::select) {
    s.armed = true;
    s.armed_seq = req.seq;
    s.armed_points = point_signature(req);
  } else {
    s.armed = false;
    s.armed_seq = -1;
    s.armed_points.clear();
  }
}

enum class Violation {
  seq_mismatch,
  missing_points,
  type_mismatch,
  timing_out_of_bounds,
  iin_inconsistent,
};

inline std::string to_string(Violation v) {
  switch (v) {
    case Violation::seq_mismatch: return "seq_mismatch";
    case Violation::missing_points: return "missing_points";
    case Violation::type_mismatch: return "type_mismatch";
    case Violation::timing_out_of_bounds: return "timing_out_of_bounds";
    case Violation::iin_inconsistent: return "iin_inconsistent";
  }
  return "?";
}

struct ValidationReport {
  std::vector<Violation> violations;
  bool compliant() const { return violations.empty(); }
  bool has(Violation v) const {
    return std::find(violations.begin(), violations.end(), v) != violations.end();
  }
};

// Structural + stateful compliance check. All problems are report entries,
// never exceptions. `session` is the state before the request was issued.
inline ValidationReport validate_response(const Dnp3Message& request, const Dnp3Message& response,
                                          const SessionState& session, int latency_ms,
                                          const TimingProfile& timing) {
  ValidationReport rep;
  auto add = [&rep](Violation v) {
    if (!rep.has(v)) rep.violations.push_back(v);
  };

  if (response.seq != request.seq) add(Violation::seq_mismatch);

  if (latency_ms < timing.base_latency_ms - timing.jitter_ms ||
      latency_ms > timing.base_latency_ms + timing.jitter_ms)
    add(Violation::timing_out_of_bounds);

  const bool rejected =
      (response.iin & (iin::select_required | iin::function_not_supported | iin::object_unknown |
                       iin::parameter_error)) != 0;

  // Requested points must come back with the kinds asked for. A legitimately
  // rejected command is exempt from echo checks.
  if (!rejected && !request.objects.empty()) {
    for (const auto& want : request.objects) {
      const PointKind want_kind = want.kind;
      bool found = false, kind_clash = false;
      for (const auto& got : response.objects) {
        if (got.index != want.index) continue;
        if (got.kind == want_kind) {
          found = true;
          break;
        }
        kind_clash = true;
      }
      if (found) continue;
      if (kind_clash)
        add(Violation::type_mismatch);
      else
        add(Violation::missing_points);
    }
  }
  for (const auto& got : response.objects) {
    if (got.kind == PointKind::binary_input && got.value != 0 && got.value != 1)
      add(Violation::type_mismatch);
    if (got.kind == PointKind::crob && (got.value < 0 || got.value > 3))
      add(Violation::type_mismatch);
  }

  // select-before-operate: the select_required flag must appear exactly when
  // the operate lacked a matching select.
  const bool flag_present = (response.iin & iin::select_required) != 0;
  if (session.sbo_enabled && request.function == FunctionCode::operate) {
    const bool flag_expected = !select_matches(session, request);
    if (flag_expected != flag_present) add(Violation::iin_inconsistent);
  } else if (flag_present) {
    add(Violation::iin_inconsistent);
  }

  return rep;
}

// ---------------------------------------------------------------------------
// Real outstation simulator: the ground truth a honeypot tries to imitate.

struct RtuPoint {
  PointKind kind = PointKind::binary_input;
  int index = 0;
  std::int32_t baseline = 0;
  std::int32_t value = 0;
};

// Two breakers (closed), bus voltages around 1 p.u., one feeder flow.
inline std::vector<RtuPoint> default_point_table() {
  return {
      {PointKind::binary_input, 0, 1, 1},
      {PointKind::binary_input, 1, 1, 1},
      {PointKind::analog_input, 0, 10450, 10450},
      {PointKind::analog_input, 1, 9980, 9980},
      {PointKind::analog_input, 2, 3250, 3250},
  };
}

// Deterministic measurement wobble in [-5, +5] fixed-point units. Telemetry
// drifts slowly rather than white-noising: the value is constant over 12-step
// plateaus and jumps between them, a pure function of (step, index) so ground
// truth is reproducible.
inline std::int32_t analog_wobble(std::uint32_t step, int index) {
  return static_cast<std::int32_t>(
             mix_seed(step / 12, static_cast<std::uint64_t>(index), 0xa11a) % 11) -
         5;
}

class RtuDevice {
 public:
  RtuDevice() : RtuDevice(default_point_table(), TimingProfile{}, true) {}
  RtuDevice(std::vector<RtuPoint> table, TimingProfile timing, bool sbo_enabled)
      : points_(std::move(table)), timing_(timing) {
    session_.sbo_enabled = sbo_enabled;
  }

  const std::vector<RtuPoint>& points() const { return points_; }
  const TimingProfile& timing() const { return timing_; }

  // A breaker moved off its baseline means the process was disrupted.
  bool disrupted() const {
    for (const auto& p : points_)
      if (p.kind == PointKind::binary_input && p.value != p.baseline) return true;
    return false;
  }

  int latency(std::uint64_t rng_seed) const {
    Rng rng(mix_seed(rng_seed, 0x1a7eULL));
    return timing_.base_latency_ms +
           static_cast<int>(rng.next_below(static_cast<std::uint64_t>(2 * timing_.jitter_ms + 1))) -
           timing_.jitter_ms;
  }

  // Ground-truth reply; executes commands. `step` drives measurement wobble
  // and response timestamps.
  Dnp3Message respond(const Dnp3Message& request, std::uint32_t step) {
    const bool sbo_ok = !session_.sbo_enabled ||
                        request.function != FunctionCode::operate ||
                        select_matches(session_, request);
    session_note_request(session_, request);

    Dnp3Message resp;
    resp.direction = Direction::response;
    resp.function = FunctionCode::response_fn;
    resp.seq = request.seq;

    switch (request.function) {
      case FunctionCode::read:
        if (request.objects.empty()) {
          for (const auto& p : points_) resp.objects.push_back(read_point(p, step));
        } else {
          for (const auto& want : request.objects) {
            const RtuPoint* p = find_point(want.kind, want.index);
            if (p == nullptr)
              resp.iin |= iin::object_unknown;
            else
              resp.objects.push_back(read_point(*p, step));
          }
        }
        break;
      case FunctionCode::write:
        resp.objects = echo_objects(request, step);
        break;
      case FunctionCode::select:
        resp.objects = echo_objects(request, step);
        break;
      case FunctionCode::operate:
        if (!sbo_ok) {
          resp.iin |= iin::select_required;
        } else {
          execute_crobs(request, resp, step);
        }
        break;
      case FunctionCode::direct_operate: execute_crobs(request, resp, step); break;
      default: resp.iin |= iin::function_not_supported; break;
    }
    return resp;
  }

 private:
  const RtuPoint* find_point(PointKind kind, int index) const {
    for (const auto& p : points_)
      if (p.kind == kind && p.index == index) return &p;
    return nullptr;
  }

  PointValue read_point(const RtuPoint& p, std::uint32_t step) const {
    PointValue o;
    o.kind = p.kind;
    o.index = p.index;
    o.timestamp = step;
    o.value = p.kind == PointKind::analog_input ? p.value + analog_wobble(step, p.index) : p.value;
    return o;
  }

  std::vector<PointValue> echo_objects(const Dnp3Message& request, std::uint32_t step) const {
    std::vector<PointValue> out = request.objects;
    for (auto& o : out) o.timestamp = step;
    return out;
  }

  void execute_crobs(const Dnp3Message& request, Dnp3Message& resp, std::uint32_t step) {
    for (const auto& cmd : request.objects) {
      if (cmd.kind != PointKind::crob) {
        resp.iin |= iin::parameter_error;
        continue;
      }
      bool hit = false;
      for (auto& p : points_) {
        if (p.kind != PointKind::binary_input || p.index != cmd.index) continue;
        hit = true;
        switch (static_cast<CrobCode>(cmd.value)) {
          case CrobCode::latch_on: p.value = 1; break;
          case CrobCode::latch_off: p.value = 0; break;
          case CrobCode::pulse_on:
          case CrobCode::pulse_off: break;  // momentary; steady state unchanged
        }
      }
      if (!hit) resp.iin |= iin::object_unknown;
    }
    resp.objects = echo_objects(request, step);
  }

  std::vector<RtuPoint> points_;
  TimingProfile timing_;
  SessionState session_;
};

}  // namespace decoynet::dnp3
