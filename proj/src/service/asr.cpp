#include "moodspring/service/asr.hpp"

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <mutex>
#include <thread>

#include <boost/process.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <unistd.h>

#include "moodspring/data/csv.hpp"
#include "moodspring/data/wav.hpp"
#include "moodspring/error.hpp"

namespace bp = boost::process;

namespace moodspring::service {
namespace {

std::filesystem::path temp_path(std::string_view ext) {
  static std::atomic<std::uint64_t> counter{0};
  return std::filesystem::temp_directory_path() /
         ("moodspring-asr-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + std::string(ext));
}

}  // namespace

std::string parse_asr_response(std::string_view body) {
  try {
    const auto j = nlohmann::json::parse(body);
    if (!j.is_object() || !j.contains("text") || !j.at("text").is_string()) {
      fail(ErrorCode::FormatError, "ASR response lacks a string \"text\" member");
    }
    return j.at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, std::string("ASR response is not JSON: ") + e.what());
  }
}

SubprocessAsr::SubprocessAsr(std::string command, std::chrono::milliseconds kill_after)
    : command_(std::move(command)), kill_after_(kill_after) {}

std::string SubprocessAsr::transcribe(const dsp::AudioClip& clip) {
  const auto wav = temp_path(".wav");
  const auto reply = temp_path(".json");
  data::write_wav(wav.string(), clip);
  struct Cleanup {
    std::filesystem::path a, b;
    ~Cleanup() {
      std::error_code ec;
      std::filesystem::remove(a, ec);
      std::filesystem::remove(b, ec);
    }
  } cleanup{wav, reply};

  // stdout goes to a file so a hung recognizer can be bounded and killed
  bp::opstream in;
  bp::child child("/bin/sh", "-c", command_, bp::std_in < in, bp::std_out > reply, bp::std_err > bp::null);
  in << wav.string() << '\n';
  in.flush();
  in.pipe().close();
  // child::wait_for spins in Boost 1.74; poll running() instead
  const auto deadline = std::chrono::steady_clock::now() + kill_after_;
  while (child.running()) {
    if (std::chrono::steady_clock::now() >= deadline) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  if (child.running()) {
    child.terminate();
    fail(ErrorCode::InvalidInput, "ASR command did not exit within " + std::to_string(kill_after_.count()) + " ms");
  }
  if (child.exit_code() != 0) {
    fail(ErrorCode::InvalidInput, "ASR command exited with status " + std::to_string(child.exit_code()));
  }
  return parse_asr_response(data::read_file(reply.string()));
}

HttpAsr::HttpAsr(std::string url, std::chrono::milliseconds io_timeout) : io_timeout_(io_timeout) {
  constexpr std::string_view scheme = "http://";
  if (url.rfind(scheme, 0) != 0) fail(ErrorCode::ConfigError, "ASR URL must start with http://");
  const auto slash = url.find('/', scheme.size());
  origin_ = url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url.substr(slash);
}

std::string HttpAsr::transcribe(const dsp::AudioClip& clip) {
  httplib::Client client(origin_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(io_timeout_);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(io_timeout_ - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  const auto res = client.Post(path_, data::encode_wav(clip), "audio/wav");
  if (!res) fail(ErrorCode::InvalidInput, "ASR request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) fail(ErrorCode::InvalidInput, "ASR endpoint returned HTTP " + std::to_string(res->status));
  return parse_asr_response(res->body);
}

std::shared_ptr<AsrClient> make_asr_client(std::string_view descriptor) {
  if (descriptor.empty()) return nullptr;
  if (descriptor.rfind("http://", 0) == 0) return std::make_shared<HttpAsr>(std::string(descriptor));
  return std::make_shared<SubprocessAsr>(std::string(descriptor));
}

struct PendingTranscript::State {
  std::mutex mu;
  std::condition_variable cv;
  bool done = false;
  AsrOutcome outcome;
};

PendingTranscript PendingTranscript::start(std::shared_ptr<AsrClient> client, dsp::AudioClip clip) {
  PendingTranscript pending;
  pending.state_ = std::make_shared<State>();
  std::thread([state = pending.state_, client = std::move(client), clip = std::move(clip)] {
    AsrOutcome result;
    try {
      result.text = client->transcribe(clip);
      result.status = AsrOutcome::Status::Ok;
    } catch (const std::exception& e) {
      result.status = AsrOutcome::Status::Failed;
      result.error = e.what();
    }
    std::lock_guard lock(state->mu);
    state->outcome = std::move(result);
    state->done = true;
    state->cv.notify_all();
  }).detach();
  return pending;
}

AsrOutcome PendingTranscript::wait_until(std::chrono::steady_clock::time_point deadline) const {
  std::unique_lock lock(state_->mu);
  if (!state_->cv.wait_until(lock, deadline, [&] { return state_->done; })) {
    return {AsrOutcome::Status::Timeout, "", "no transcript before the tick deadline"};
  }
  return state_->outcome;
}

AsrOutcome transcribe_with_timeout(const std::shared_ptr<AsrClient>& client, dsp::AudioClip clip,
                                   std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  return PendingTranscript::start(client, std::move(clip)).wait_until(deadline);
}

}  // namespace moodspring::service
