#pragma once

#include <cstdint>
#include <optional>

#include <nlohmann/json_fwd.hpp>

#include "moodspring/emotion.hpp"

namespace moodspring::control {

struct ControlConfig {
  double ema_alpha = 0.2;
  double base_tempo = 1.0;  // season cycles per minute
  double tempo_floor = 0.05;
  double brightness_floor = 0.3;
  int tick_interval_ms = 500;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

struct ControlSignal {
  Valence valence = Valence::Pleasant;
  double p_smoothed = 0.5;
  double confidence = 0.0;
  double tempo = 0.0;
  double brightness = 0.3;
  double season_phase = 0.0;
  std::uint64_t seq = 0;
  std::int64_t timestamp = 0;  // ms

  /// Flat object with snake_case field names.
  nlohmann::json to_json() const;
  static ControlSignal from_json(const nlohmann::json& j);

  friend bool operator==(const ControlSignal&, const ControlSignal&) = default;
};

/// EMA update; a missing previous value starts from 0.5.
double step(std::optional<double> prev, double new_p, const ControlConfig& cfg);

/// 1 - H2(p)/ln 2, with H2 the natural-log binary entropy.
double confidence(double p);

/// Builds the next signal from the smoothed probability. The first signal
/// (no prev) has seq 1 and starts its phase from 0.
ControlSignal make_control(double p_smoothed, const ControlConfig& cfg,
                           const std::optional<ControlSignal>& prev, std::int64_t timestamp_ms);

// Per-session smoothing state; feed fused probabilities in arrival order.
class ControlState {
 public:
  explicit ControlState(ControlConfig cfg = {});

  ControlSignal update(double fused_p, std::int64_t timestamp_ms);

  const ControlConfig& config() const { return cfg_; }
  void set_config(const ControlConfig& cfg);
  const std::optional<ControlSignal>& last() const { return last_; }

 private:
  ControlConfig cfg_;
  std::optional<double> smoothed_;
  std::optional<ControlSignal> last_;
};

}  // namespace moodspring::control
