#include "moodspring/service/session.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>

#include <boost/beast/core/detail/base64.hpp>

#include "moodspring/data/wav.hpp"

namespace moodspring::service {
namespace {

namespace b64 = boost::beast::detail::base64;
using nlohmann::json;

// Thrown for frames that parse as JSON but break the schema.
struct FrameError {
  std::string code;
  std::string message;
};

const json& member(const json& frame, const char* key) {
  if (!frame.contains(key)) throw FrameError{"invalid_frame", std::string("missing field '") + key + "'"};
  return frame.at(key);
}

}  // namespace

Clock system_clock_ms() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

json control_frame(const control::ControlSignal& signal) {
  json frame = signal.to_json();
  frame["type"] = "control";
  return frame;
}

json error_frame(std::string_view code, std::string_view message) {
  return {{"type", "error"}, {"code", code}, {"message", message}};
}

json warning_frame(std::string_view code, std::string_view message) {
  return {{"type", "warning"}, {"code", code}, {"message", message}};
}

std::string wire_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid_input";
    case ErrorCode::TooShort: return "too_short";
    case ErrorCode::InsufficientData: return "insufficient_data";
    case ErrorCode::InsufficientGroups: return "insufficient_groups";
    case ErrorCode::FormatError: return "format_error";
    case ErrorCode::NumericalError: return "numerical_error";
    case ErrorCode::ConfigError: return "config_error";
    case ErrorCode::SessionNotFound: return "session_not_found";
  }
  return "internal_error";
}

std::optional<std::string> decode_base64(std::string_view text) {
  if (text.size() % 4 != 0) return std::nullopt;
  std::size_t padding = 0;
  while (padding < 2 && padding < text.size() && text[text.size() - 1 - padding] == '=') ++padding;
  std::string out(b64::decoded_size(text.size()), '\0');
  const auto [written, read] = b64::decode(out.data(), text.data(), text.size());
  if (read != text.size() - padding) return std::nullopt;
  out.resize(written);
  return out;
}

std::string encode_base64(std::string_view bytes) {
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

Session::Session(std::shared_ptr<const pipeline::ModelSet> models, EngineConfig cfg, std::shared_ptr<AsrClient> asr,
                 Clock clock)
    : models_(std::move(models)), cfg_(std::move(cfg)), asr_(std::move(asr)), clock_(std::move(clock)) {
  if (!models_) fail(ErrorCode::ConfigError, "session needs a model set");
  cfg_.validate();
  control_.set_config(cfg_.control);
  slots_.assign(models_->classifiers.size(), 0.5);
  text_idx_ = models_->indices_of(data::Modality::Text);
  audio_idx_ = models_->indices_of(data::Modality::Audio);
  if (!audio_idx_.empty()) {
    audio_rate_ = std::get<pipeline::AudioFeatures>(models_->classifiers[audio_idx_.front()].features).sample_rate;
  }
  window_ = static_cast<std::size_t>(std::llround(cfg_.window_s * audio_rate_));
  hop_ = static_cast<std::size_t>(std::llround(cfg_.hop_s * audio_rate_));
  if (window_ == 0 || hop_ == 0) fail(ErrorCode::ConfigError, "audio window and hop must be at least one sample");
}

void Session::require_initialized() const {
  if (!initialized_) fail(ErrorCode::SessionNotFound, "no session: send a config frame first");
}

void Session::configure(const json& frame) {
  apply_overrides(cfg_, frame);
  control_.set_config(cfg_.control);
  if (frame.contains("session_id")) {
    if (!frame.at("session_id").is_string()) fail(ErrorCode::ConfigError, "session_id must be a string");
    id_ = frame.at("session_id").get<std::string>();
  } else if (!initialized_) {
    static std::atomic<std::uint64_t> counter{0};
    id_ = "session-" + std::to_string(++counter);
  }
  initialized_ = true;
}

void Session::update_text_slots(std::string_view text) {
  for (std::size_t i : text_idx_) {
    const auto& c = models_->classifiers[i];
    const auto x = pipeline::text_features(std::get<pipeline::TextFeatures>(c.features), text);
    slots_[i] = c.p_pleasant(c.model.predict_proba(x), cfg_.mapping);
  }
}

double Session::fused_p() const {
  if (models_->fusion) return fusion::fuse(*models_->fusion, slots_);
  double sum = 0.0;
  for (double p : slots_) sum += p;
  return slots_.empty() ? 0.5 : sum / static_cast<double>(slots_.size());
}

control::ControlSignal Session::handle_text(std::string_view text) {
  require_initialized();
  if (text_idx_.empty()) fail(ErrorCode::ConfigError, "model set has no text classifiers");
  update_text_slots(text);
  return control_.update(fused_p(), clock_());
}

std::vector<json> Session::run_tick() {
  std::vector<json> frames;
  const auto started = std::chrono::steady_clock::now();
  dsp::AudioClip clip{std::vector<double>(buffer_.begin(), buffer_.end()), audio_rate_};

  std::optional<PendingTranscript> pending;
  if (asr_ && !text_idx_.empty()) pending = PendingTranscript::start(asr_, clip);

  for (std::size_t i : audio_idx_) {
    const auto& c = models_->classifiers[i];
    const auto x = pipeline::audio_features(std::get<pipeline::AudioFeatures>(c.features), clip);
    slots_[i] = c.p_pleasant(c.model.predict_proba(x), cfg_.mapping);
  }

  if (pending) {
    const auto outcome = pending->wait_until(started + std::chrono::milliseconds(cfg_.asr_timeout_ms));
    switch (outcome.status) {
      case AsrOutcome::Status::Ok:
        // Silence transcribes to nothing; keep the last text reading then.
        if (!text::tokenize(outcome.text).empty()) update_text_slots(outcome.text);
        break;
      case AsrOutcome::Status::Timeout:
        frames.push_back(warning_frame("asr_timeout", outcome.error + "; audio-only fusion for this tick"));
        break;
      case AsrOutcome::Status::Failed:
        frames.push_back(warning_frame("asr_error", outcome.error));
        break;
    }
  }
  frames.push_back(control_frame(control_.update(fused_p(), clock_())));
  return frames;
}

std::vector<json> Session::handle_audio(std::span<const double> samples, int rate) {
  require_initialized();
  if (audio_idx_.empty() && !(asr_ && !text_idx_.empty())) {
    fail(ErrorCode::ConfigError, "model set has no audio classifiers and no speech recognizer is configured");
  }
  if (rate <= 0) fail(ErrorCode::InvalidInput, "audio rate must be positive");
  std::vector<double> chunk;
  if (rate == audio_rate_) {
    chunk.assign(samples.begin(), samples.end());
  } else {
    chunk = dsp::resample({std::vector<double>(samples.begin(), samples.end()), rate}, audio_rate_).samples;
  }

  std::vector<json> frames;
  for (double s : chunk) {
    buffer_.push_back(s);
    if (buffer_.size() > window_) buffer_.pop_front();
    ++received_;
    if (received_ >= window_ && (received_ - window_) % hop_ == 0) {
      auto tick = run_tick();
      frames.insert(frames.end(), std::make_move_iterator(tick.begin()), std::make_move_iterator(tick.end()));
    }
  }
  return frames;
}

std::vector<json> Session::handle_frame(std::string_view raw) {
  json frame;
  try {
    frame = json::parse(raw);
  } catch (const json::exception&) {
    return {error_frame("malformed_frame", "frame is not valid JSON")};
  }
  if (!frame.is_object() || !frame.contains("type") || !frame.at("type").is_string()) {
    return {error_frame("malformed_frame", "frame must be an object with a string 'type'")};
  }
  const auto type = frame.at("type").get<std::string>();
  try {
    if (type == "config") {
      configure(frame);
      return {};
    }
    if (type == "text") {
      const auto& text = member(frame, "text");
      if (!text.is_string()) throw FrameError{"invalid_frame", "'text' must be a string"};
      return {control_frame(handle_text(text.get_ref<const std::string&>()))};
    }
    if (type == "audio") {
      const auto& rate = member(frame, "rate");
      const auto& payload = member(frame, "pcm16_b64");
      if (!rate.is_number_integer() || rate.get<std::int64_t>() <= 0 || rate.get<std::int64_t>() > 384000) {
        throw FrameError{"invalid_frame", "'rate' must be a positive integer sample rate"};
      }
      if (!payload.is_string()) throw FrameError{"invalid_frame", "'pcm16_b64' must be a string"};
      const auto bytes = decode_base64(payload.get_ref<const std::string&>());
      if (!bytes) throw FrameError{"invalid_frame", "'pcm16_b64' is not valid base64"};
      if (bytes->size() % 2 != 0) throw FrameError{"invalid_frame", "PCM-16 payload has an odd byte count"};
      std::vector<std::int16_t> pcm(bytes->size() / 2);
      for (std::size_t i = 0; i < pcm.size(); ++i) {
        const auto lo = static_cast<std::uint8_t>((*bytes)[2 * i]);
        const auto hi = static_cast<std::uint8_t>((*bytes)[2 * i + 1]);
        pcm[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
      }
      const auto samples = data::pcm16_to_samples(pcm);
      return handle_audio(samples, static_cast<int>(rate.get<std::int64_t>()));
    }
    return {error_frame("unknown_type", "unknown frame type '" + type + "'")};
  } catch (const FrameError& e) {
    return {error_frame(e.code, e.message)};
  } catch (const Error& e) {
    return {error_frame(wire_code(e.code()), e.what())};
  }
}

}  // namespace moodspring::service
