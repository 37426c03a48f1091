#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "moodspring/control.hpp"
#include "moodspring/error.hpp"
#include "moodspring/rng.hpp"

using namespace moodspring;
using namespace moodspring::control;

TEST_CASE("ema step") {
  ControlConfig cfg;
  CHECK(step(0.5, 1.0, cfg) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(step(std::nullopt, 1.0, cfg) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(step(0.37, 0.37, cfg) == doctest::Approx(0.37).epsilon(1e-15));
  cfg.ema_alpha = 1.0;
  CHECK(step(0.1, 0.83, cfg) == 0.83);
}

TEST_CASE("make_control examples") {
  ControlConfig cfg;
  const auto half = make_control(0.5, cfg, std::nullopt, 0);
  CHECK(half.confidence == 0.0);
  CHECK(half.brightness == doctest::Approx(0.3));
  CHECK(half.valence == Valence::Pleasant);
  CHECK(half.seq == 1);

  const auto certain = make_control(1.0, cfg, std::nullopt, 0);
  CHECK(certain.confidence == 1.0);
  CHECK(certain.brightness == 1.0);
  CHECK(certain.tempo == cfg.base_tempo);
  CHECK(make_control(0.0, cfg, std::nullopt, 0).confidence == 1.0);

  // 1 - H2(0.9)/ln 2; brightness 0.3 + 0.7 c
  const auto c9 = make_control(0.9, cfg, std::nullopt, 0);
  CHECK(std::abs(c9.confidence - 0.5310044) <= 1e-6);
  CHECK(std::abs(c9.brightness - 0.6717) <= 1e-4);
  CHECK(c9.tempo == doctest::Approx(0.9));

  const auto u = make_control(0.2, cfg, std::nullopt, 0);
  CHECK(u.valence == Valence::Unpleasant);
  CHECK(u.tempo == doctest::Approx(0.8));
  CHECK(u.confidence == doctest::Approx(make_control(0.8, cfg, std::nullopt, 0).confidence).epsilon(1e-12));

  // tempo floor; cycles per minute over a 500 ms tick
  cfg.tempo_floor = 0.6;
  const auto first = make_control(0.55, cfg, std::nullopt, 1000);
  CHECK(first.tempo == doctest::Approx(0.6));
  const auto second = make_control(0.55, cfg, first, 1500);
  CHECK(second.seq == 2);
  CHECK(second.season_phase - first.season_phase == doctest::Approx(0.6 * 500.0 / 60000.0));
  CHECK(second.timestamp == 1500);
}

TEST_CASE("brightness grows with distance from 0.5") {
  ControlConfig cfg;
  double prev = -1.0;
  for (int i = 0; i <= 50; ++i) {
    const double p = 0.5 + i / 100.0;
    const double b = make_control(p, cfg, std::nullopt, 0).brightness;
    CHECK(b > prev);
    CHECK(make_control(1.0 - p, cfg, std::nullopt, 0).brightness == doctest::Approx(b).epsilon(1e-12));
    prev = b;
  }
}

TEST_CASE("phase stays in [0,1) and streams are deterministic") {
  ControlConfig cfg;
  cfg.base_tempo = 120.0;  // several wraps over the run
  ControlState a(cfg);
  ControlState b(cfg);
  Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    const double p = rng.uniform();
    const auto sa = a.update(p, i * 500);
    const auto sb = b.update(p, i * 500);
    CHECK(sa == sb);
    CHECK(sa.season_phase >= 0.0);
    CHECK(sa.season_phase < 1.0);
    CHECK(sa.seq == static_cast<std::uint64_t>(i + 1));
    CHECK(sa.brightness >= 0.3);
    CHECK(sa.brightness <= 1.0);
  }
}

TEST_CASE("a single outlier does not flip valence") {
  ControlConfig cfg;
  for (int i = 0; i <= 100; ++i) {
    const double outlier = i / 100.0;
    const double next = step(0.7, outlier, cfg);
    CHECK(next >= 0.56 - 1e-15);
    CHECK(make_control(next, cfg, std::nullopt, 0).valence == Valence::Pleasant);
  }
}

TEST_CASE("config validation and json") {
  ControlConfig cfg;
  cfg.ema_alpha = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.brightness_floor = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.tick_interval_ms = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);

  const auto s = make_control(0.8, ControlConfig{}, std::nullopt, 42);
  const auto j = s.to_json();
  for (const char* key : {"valence", "p_smoothed", "confidence", "tempo", "brightness", "season_phase", "seq", "timestamp"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["valence"] == "pleasant");
  CHECK(ControlSignal::from_json(j) == s);
}
