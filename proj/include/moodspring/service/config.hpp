#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "moodspring/control.hpp"
#include "moodspring/valence.hpp"

namespace moodspring::service {

struct EngineConfig {
  control::ControlConfig control;
  valence::ValenceMapping mapping;
  double window_s = 3.0;
  double hop_s = 1.0;
  std::string asr_endpoint;  // empty: no recognizer
  int asr_timeout_ms = 400;

  /// Throws ConfigError.
  void validate() const;
};

/// TOML with the sections [control], [valence], [audio] and [asr]; missing keys
/// keep their defaults, unknown keys are rejected with ConfigError.
EngineConfig parse_config(std::string_view toml_text);
EngineConfig load_config(const std::string& path);

/// Applies the optional "control" object and "pleasant" list of a config frame.
void apply_overrides(EngineConfig& cfg, const nlohmann::json& frame);

}  // namespace moodspring::service
