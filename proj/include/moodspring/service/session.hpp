#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "moodspring/control.hpp"
#include "moodspring/error.hpp"
#include "moodspring/service/asr.hpp"
#include "moodspring/service/config.hpp"
#include "moodspring/service/pipeline.hpp"

namespace moodspring::service {

/// Milliseconds for the timestamp field of control signals.
using Clock = std::function<std::int64_t()>;
Clock system_clock_ms();

nlohmann::json control_frame(const control::ControlSignal& signal);
nlohmann::json error_frame(std::string_view code, std::string_view message);
nlohmann::json warning_frame(std::string_view code, std::string_view message);

/// snake_case wire name of an error code ("session_not_found", ...).
std::string wire_code(ErrorCode code);

/// Strict RFC 4648 decoding; nullopt on bad length, alphabet or padding.
std::optional<std::string> decode_base64(std::string_view text);
std::string encode_base64(std::string_view bytes);

// One client stream. Frames must be fed in arrival order from one thread; the
// ASR worker is the only concurrency and is bounded by the timeout.
class Session {
 public:
  Session(std::shared_ptr<const pipeline::ModelSet> models, EngineConfig cfg,
          std::shared_ptr<AsrClient> asr = nullptr, Clock clock = system_clock_ms());

  /// Parses one client frame and returns the resulting server frames in order.
  /// Never throws for bad input; problems become error frames.
  std::vector<nlohmann::json> handle_frame(std::string_view raw);

  // Direct entry points. Before the first config frame they throw
  // SessionNotFound.
  void configure(const nlohmann::json& frame);
  control::ControlSignal handle_text(std::string_view text);
  std::vector<nlohmann::json> handle_audio(std::span<const double> samples, int rate);

  bool initialized() const { return initialized_; }
  const std::string& id() const { return id_; }
  const EngineConfig& config() const { return cfg_; }
  /// Freshest p_pleasant per classifier, in model-set order.
  const std::vector<double>& slots() const { return slots_; }
  int audio_rate() const { return audio_rate_; }
  std::size_t window_samples() const { return window_; }
  std::size_t hop_samples() const { return hop_; }

 private:
  void require_initialized() const;
  void update_text_slots(std::string_view text);
  double fused_p() const;
  std::vector<nlohmann::json> run_tick();

  std::shared_ptr<const pipeline::ModelSet> models_;
  EngineConfig cfg_;
  std::shared_ptr<AsrClient> asr_;
  Clock clock_;

  bool initialized_ = false;
  std::string id_;
  control::ControlState control_;
  std::vector<double> slots_;
  std::vector<std::size_t> text_idx_;
  std::vector<std::size_t> audio_idx_;

  int audio_rate_ = dsp::kPipelineRate;
  std::size_t window_ = 0;
  std::size_t hop_ = 0;
  std::deque<double> buffer_;
  std::uint64_t received_ = 0;
};

}  // namespace moodspring::service
