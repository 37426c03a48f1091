#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "moodspring/dsp/audio.hpp"

namespace moodspring::service {

// Blocking speech recognizer. Implementations throw on failure.
class AsrClient {
 public:
  virtual ~AsrClient() = default;
  virtual std::string transcribe(const dsp::AudioClip& clip) = 0;
};

/// Runs `command` through /bin/sh, writes the path of a temporary WAV file and
/// a newline to its stdin and reads {"text": ...} from its stdout.
class SubprocessAsr : public AsrClient {
 public:
  explicit SubprocessAsr(std::string command, std::chrono::milliseconds kill_after = std::chrono::seconds(30));
  std::string transcribe(const dsp::AudioClip& clip) override;

 private:
  std::string command_;
  std::chrono::milliseconds kill_after_;
};

/// POSTs the WAV bytes (Content-Type audio/wav) to an http:// URL and reads
/// {"text": ...} from the response body.
class HttpAsr : public AsrClient {
 public:
  explicit HttpAsr(std::string url, std::chrono::milliseconds io_timeout = std::chrono::seconds(30));
  std::string transcribe(const dsp::AudioClip& clip) override;

 private:
  std::string origin_;
  std::string path_;
  std::chrono::milliseconds io_timeout_;
};

// Adapter for tests and embedding applications.
class FunctionAsr : public AsrClient {
 public:
  explicit FunctionAsr(std::function<std::string(const dsp::AudioClip&)> fn) : fn_(std::move(fn)) {}
  std::string transcribe(const dsp::AudioClip& clip) override { return fn_(clip); }

 private:
  std::function<std::string(const dsp::AudioClip&)> fn_;
};

/// "http://..." selects HttpAsr; anything else is a shell command for
/// SubprocessAsr. An empty descriptor gives nullptr.
std::shared_ptr<AsrClient> make_asr_client(std::string_view descriptor);

/// Extracts the "text" member; throws FormatError otherwise.
std::string parse_asr_response(std::string_view body);

struct AsrOutcome {
  enum class Status { Ok, Timeout, Failed };
  Status status = Status::Failed;
  std::string text;
  std::string error;
};

// One in-flight recognition on a detached worker. If the caller stops waiting,
// the worker finishes in the background and its result is dropped.
class PendingTranscript {
 public:
  static PendingTranscript start(std::shared_ptr<AsrClient> client, dsp::AudioClip clip);
  AsrOutcome wait_until(std::chrono::steady_clock::time_point deadline) const;

 private:
  struct State;
  std::shared_ptr<State> state_;
};

AsrOutcome transcribe_with_timeout(const std::shared_ptr<AsrClient>& client, dsp::AudioClip clip,
                                   std::chrono::milliseconds timeout);

}  // namespace moodspring::service
