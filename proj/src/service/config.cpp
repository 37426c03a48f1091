#include "moodspring/service/config.hpp"

#include <set>

#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "moodspring/data/csv.hpp"
#include "moodspring/error.hpp"

namespace moodspring::service {
namespace {

void reject_unknown(const toml::table& table, const std::string& where, const std::set<std::string>& known) {
  for (const auto& [key, _] : table) {
    if (!known.count(std::string(key.str()))) {
      fail(ErrorCode::ConfigError, "unknown key '" + std::string(key.str()) + "' in " + where);
    }
  }
}

double number(const toml::table& t, const char* key, double fallback) {
  const auto* node = t.get(key);
  if (node == nullptr) return fallback;
  if (const auto v = node->value<double>()) return *v;
  fail(ErrorCode::ConfigError, std::string("'") + key + "' must be a number");
}

int integer(const toml::table& t, const char* key, int fallback) {
  const auto* node = t.get(key);
  if (node == nullptr) return fallback;
  if (const auto v = node->value_exact<std::int64_t>()) return static_cast<int>(*v);
  fail(ErrorCode::ConfigError, std::string("'") + key + "' must be an integer");
}

const toml::table* section(const toml::table& root, const char* name) {
  const auto* node = root.get(name);
  if (node == nullptr) return nullptr;
  if (!node->is_table()) fail(ErrorCode::ConfigError, std::string("[") + name + "] must be a table");
  return node->as_table();
}

}  // namespace

void EngineConfig::validate() const {
  control.validate();
  if (!(window_s > 0.0)) fail(ErrorCode::ConfigError, "audio.window_s must be > 0");
  if (!(hop_s > 0.0 && hop_s <= window_s)) fail(ErrorCode::ConfigError, "audio.hop_s must lie in (0, window_s]");
  if (asr_timeout_ms <= 0) fail(ErrorCode::ConfigError, "asr.timeout_ms must be > 0");
}

EngineConfig parse_config(std::string_view toml_text) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    fail(ErrorCode::ConfigError, "config line " + std::to_string(e.source().begin.line) + ": " +
                                     std::string(e.description()));
  }
  reject_unknown(root, "the top level", {"control", "valence", "audio", "asr"});

  EngineConfig cfg;
  if (const auto* t = section(root, "control")) {
    reject_unknown(*t, "[control]", {"ema_alpha", "base_tempo", "tempo_floor", "brightness_floor", "tick_interval_ms"});
    cfg.control.ema_alpha = number(*t, "ema_alpha", cfg.control.ema_alpha);
    cfg.control.base_tempo = number(*t, "base_tempo", cfg.control.base_tempo);
    cfg.control.tempo_floor = number(*t, "tempo_floor", cfg.control.tempo_floor);
    cfg.control.brightness_floor = number(*t, "brightness_floor", cfg.control.brightness_floor);
    cfg.control.tick_interval_ms = integer(*t, "tick_interval_ms", cfg.control.tick_interval_ms);
  }
  if (const auto* t = section(root, "valence")) {
    reject_unknown(*t, "[valence]", {"pleasant"});
    if (const auto* node = t->get("pleasant")) {
      const auto* arr = node->as_array();
      if (arr == nullptr) fail(ErrorCode::ConfigError, "valence.pleasant must be an array of emotion names");
      std::vector<std::string> names;
      for (const auto& item : *arr) {
        const auto s = item.value<std::string>();
        if (!s) fail(ErrorCode::ConfigError, "valence.pleasant must be an array of emotion names");
        names.push_back(*s);
      }
      cfg.mapping = valence::ValenceMapping::from_names(names);
    }
  }
  if (const auto* t = section(root, "audio")) {
    reject_unknown(*t, "[audio]", {"window_s", "hop_s"});
    cfg.window_s = number(*t, "window_s", cfg.window_s);
    cfg.hop_s = number(*t, "hop_s", cfg.hop_s);
  }
  if (const auto* t = section(root, "asr")) {
    reject_unknown(*t, "[asr]", {"endpoint", "timeout_ms"});
    if (const auto* node = t->get("endpoint")) {
      const auto s = node->value<std::string>();
      if (!s) fail(ErrorCode::ConfigError, "asr.endpoint must be a string");
      cfg.asr_endpoint = *s;
    }
    cfg.asr_timeout_ms = integer(*t, "timeout_ms", cfg.asr_timeout_ms);
  }
  cfg.validate();
  return cfg;
}

EngineConfig load_config(const std::string& path) { return parse_config(data::read_file(path)); }

void apply_overrides(EngineConfig& cfg, const nlohmann::json& frame) {
  EngineConfig next = cfg;
  try {
    if (frame.contains("control")) {
      const auto& c = frame.at("control");
      if (!c.is_object()) fail(ErrorCode::ConfigError, "'control' must be an object");
      for (const auto& [key, value] : c.items()) {
        if (key == "ema_alpha") {
          next.control.ema_alpha = value.get<double>();
        } else if (key == "base_tempo") {
          next.control.base_tempo = value.get<double>();
        } else if (key == "tempo_floor") {
          next.control.tempo_floor = value.get<double>();
        } else if (key == "brightness_floor") {
          next.control.brightness_floor = value.get<double>();
        } else if (key == "tick_interval_ms") {
          next.control.tick_interval_ms = value.get<int>();
        } else {
          fail(ErrorCode::ConfigError, "unknown control field '" + key + "'");
        }
      }
    }
    if (frame.contains("pleasant")) {
      next.mapping = valence::ValenceMapping::from_names(frame.at("pleasant").get<std::vector<std::string>>());
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("config frame: ") + e.what());
  }
  next.validate();
  cfg = std::move(next);
}

}  // namespace moodspring::service
