#include "moodspring/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "moodspring/error.hpp"
#include "moodspring/valence.hpp"

namespace moodspring::control {

void ControlConfig::validate() const {
  const auto bad = [](const char* what) { fail(ErrorCode::ConfigError, std::string("control config: ") + what); };
  if (!(ema_alpha > 0.0 && ema_alpha <= 1.0)) bad("ema_alpha must lie in (0,1]");
  if (!(base_tempo > 0.0) || !std::isfinite(base_tempo)) bad("base_tempo must be positive");
  if (!(tempo_floor >= 0.0 && tempo_floor <= 1.0)) bad("tempo_floor must lie in [0,1]");
  if (!(brightness_floor >= 0.0 && brightness_floor <= 1.0)) bad("brightness_floor must lie in [0,1]");
  if (tick_interval_ms <= 0) bad("tick_interval must be positive");
}

nlohmann::json ControlSignal::to_json() const {
  return {{"valence", moodspring::to_string(valence)},
          {"p_smoothed", p_smoothed},
          {"confidence", confidence},
          {"tempo", tempo},
          {"brightness", brightness},
          {"season_phase", season_phase},
          {"seq", seq},
          {"timestamp", timestamp}};
}

ControlSignal ControlSignal::from_json(const nlohmann::json& j) {
  try {
    ControlSignal s;
    const auto v = parse_valence(j.at("valence").get<std::string>());
    if (!v) fail(ErrorCode::FormatError, "control signal: bad valence");
    s.valence = *v;
    s.p_smoothed = j.at("p_smoothed").get<double>();
    s.confidence = j.at("confidence").get<double>();
    s.tempo = j.at("tempo").get<double>();
    s.brightness = j.at("brightness").get<double>();
    s.season_phase = j.at("season_phase").get<double>();
    s.seq = j.at("seq").get<std::uint64_t>();
    s.timestamp = j.at("timestamp").get<std::int64_t>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, std::string("control signal: ") + e.what());
  }
}

double step(std::optional<double> prev, double new_p, const ControlConfig& cfg) {
  const double base = prev.value_or(0.5);
  return (1.0 - cfg.ema_alpha) * base + cfg.ema_alpha * new_p;
}

double confidence(double p) {
  const auto plogp = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
  const double entropy = -(plogp(p) + plogp(1.0 - p));
  return std::clamp(1.0 - entropy / std::numbers::ln2, 0.0, 1.0);
}

ControlSignal make_control(double p_smoothed, const ControlConfig& cfg,
                           const std::optional<ControlSignal>& prev, std::int64_t timestamp_ms) {
  const double p = std::clamp(p_smoothed, 0.0, 1.0);
  ControlSignal s;
  s.valence = valence::valence_class(p);
  s.p_smoothed = p;
  s.confidence = confidence(p);
  s.brightness = cfg.brightness_floor + (1.0 - cfg.brightness_floor) * s.confidence;
  const double intensity = s.valence == Valence::Pleasant ? p : 1.0 - p;
  s.tempo = cfg.base_tempo * std::max(intensity, cfg.tempo_floor);

  const double advance = s.tempo * static_cast<double>(cfg.tick_interval_ms) / 60000.0;
  double phase = (prev ? prev->season_phase : 0.0) + advance;
  phase -= std::floor(phase);
  if (phase >= 1.0) phase = 0.0;
  s.season_phase = phase;
  s.seq = prev ? prev->seq + 1 : 1;
  s.timestamp = timestamp_ms;
  return s;
}

ControlState::ControlState(ControlConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void ControlState::set_config(const ControlConfig& cfg) {
  cfg.validate();
  cfg_ = cfg;
}

ControlSignal ControlState::update(double fused_p, std::int64_t timestamp_ms) {
  smoothed_ = step(smoothed_, std::clamp(fused_p, 0.0, 1.0), cfg_);
  last_ = make_control(*smoothed_, cfg_, last_, timestamp_ms);
  return *last_;
}

}  // namespace moodspring::control
