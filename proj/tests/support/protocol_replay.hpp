#pragma once

// Replays the recorded protocol fixture and compares the server frames with
// the frozen expectation. Error and warning messages are free text and not
// compared; codes are. Floats must agree to 1e-12 (the expectation comes from
// an independent implementation, so the last bit may differ).

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace moodspring::testing {

struct ReplayResult {
  bool ok = true;
  std::size_t client_frames = 0;
  std::size_t server_frames = 0;
  std::string detail;
};

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

inline bool frame_matches(const nlohmann::json& want, const nlohmann::json& got, std::string& why) {
  for (const auto& [key, value] : want.items()) {
    if (!got.contains(key)) {
      why = "missing '" + key + "'";
      return false;
    }
    const auto& g = got.at(key);
    if (value.is_number_float()) {
      if (!g.is_number()) {
        why = "'" + key + "' is not a number";
        return false;
      }
      const double a = value.get<double>();
      const double b = g.get<double>();
      if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a))) {
        std::ostringstream s;
        s.precision(17);
        s << "'" << key << "': want " << a << " got " << b;
        why = s.str();
        return false;
      }
    } else if (value != g) {
      why = "'" + key + "': want " + value.dump() + " got " + g.dump();
      return false;
    }
  }
  if (got.at("type") == "control" && got.size() != want.size()) {
    why = "unexpected extra fields in " + got.dump();
    return false;
  }
  return true;
}

/// `send` delivers one raw client frame and returns every server frame it caused.
inline ReplayResult replay_fixture(const std::string& dir,
                                   const std::function<std::vector<nlohmann::json>(const std::string&)>& send) {
  const auto session = read_lines(dir + "/session.jsonl");
  const auto expected = read_lines(dir + "/expected.jsonl");
  ReplayResult r;
  if (session.size() != expected.size()) {
    r.ok = false;
    r.detail = "fixture files disagree in length";
    return r;
  }
  for (std::size_t i = 0; i < session.size(); ++i) {
    const auto want = nlohmann::json::parse(expected[i]);
    const auto got = send(session[i]);
    ++r.client_frames;
    r.server_frames += got.size();
    if (got.size() != want.size()) {
      r.ok = false;
      r.detail = "client frame " + std::to_string(i + 1) + ": want " + std::to_string(want.size()) + " frames, got " +
                 std::to_string(got.size());
      return r;
    }
    for (std::size_t k = 0; k < got.size(); ++k) {
      std::string why;
      if (!frame_matches(want[k], got[k], why)) {
        r.ok = false;
        r.detail = "client frame " + std::to_string(i + 1) + ", reply " + std::to_string(k + 1) + ": " + why;
        return r;
      }
    }
  }
  return r;
}

}  // namespace moodspring::testing
