#pragma once

#include <stdexcept>
#include <string>

namespace decoynet {

// Invalid configuration (bad topology spec, out-of-range parameters, ...).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Message violates a codec invariant; `rule` names the violated rule.
struct EncodeError : std::runtime_error {
  explicit EncodeError(const std::string& rule_name)
      : std::runtime_error("encode error: " + rule_name), rule(rule_name) {}
  std::string rule;
};

struct DecodeError : std::runtime_error {
  enum class Kind { bad_preamble, truncated, unknown_function, bad_control, bad_object };

  DecodeError(Kind k, const std::string& what)
      : std::runtime_error("decode error: " + what), kind(k) {}
  Kind kind;
};

// Perplexity scoring asked for something ill-posed (empty reference, ...).
struct ScoringError : std::runtime_error {
  explicit ScoringError(const std::string& what) : std::runtime_error(what) {}
};

// A learner update produced non-finite numbers; carries batch diagnostics.
struct UpdateError : std::runtime_error {
  explicit UpdateError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace decoynet
