#include <doctest.h>

#include <cmath>
#include <numbers>

#include "moodspring/dsp/mfcc.hpp"
#include "moodspring/error.hpp"
#include "moodspring/rng.hpp"
#include "support/oracles.hpp"

using namespace moodspring;
using namespace moodspring::dsp;

namespace {

AudioClip sine(double freq, std::size_t n, int rate = 16000, double amp = 0.5) {
  AudioClip c{std::vector<double>(n), rate};
  for (std::size_t i = 0; i < n; ++i) c.samples[i] = amp * std::sin(2.0 * std::numbers::pi * freq * i / rate);
  return c;
}

AudioClip noise(std::uint64_t seed, std::size_t n, int rate = 16000) {
  Rng rng(seed);
  AudioClip c{std::vector<double>(n), rate};
  for (auto& s : c.samples) s = rng.uniform() * 1.6 - 0.8;
  return c;
}

}  // namespace

TEST_CASE("resample: identity, constants and length arithmetic") {
  const AudioClip clip = noise(1, 1234, 22050);
  CHECK(resample(clip, 22050).samples == clip.samples);

  for (auto [src, dst] : {std::pair{8000, 16000}, std::pair{44100, 16000}, std::pair{16000, 22050}}) {
    AudioClip constant{std::vector<double>(999, 0.5), src};
    const auto out = resample(constant, dst);
    CHECK(out.sample_rate == dst);
    for (double s : out.samples) CHECK(s == 0.5);
  }

  AudioClip eight{std::vector<double>(8000, 0.1), 8000};
  CHECK(resample(eight, 16000).samples.size() == 16000);
  CHECK(resample(AudioClip{std::vector<double>(10, 0.0), 3}, 7).samples.size() == 23);  // round(23.33)

  CHECK_THROWS_AS(resample(AudioClip{{}, 16000}, 8000), Error);
  CHECK_THROWS_AS(resample(eight, 0), Error);
}

TEST_CASE("resample: upsampling by two interleaves midpoints") {
  AudioClip c{{0.0, 1.0, 0.0, -1.0}, 8000};
  const auto out = resample(c, 16000);
  REQUIRE(out.samples.size() == 8);
  CHECK(out.samples[1] == doctest::Approx(0.5));
  CHECK(out.samples[2] == doctest::Approx(1.0));
  CHECK(out.samples[5] == doctest::Approx(-0.5));
  CHECK(out.samples[7] == doctest::Approx(-1.0));  // held past the end
}

TEST_CASE("fft: magnitudes match the direct DFT on random frames") {
  FftPlan plan(512);
  std::vector<std::complex<double>> scratch;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    std::vector<double> frame(512);
    for (auto& v : frame) v = rng.uniform() * 2.0 - 1.0;
    std::vector<double> fast(257);
    plan.magnitude(frame, fast, scratch);
    const auto slow = testing::direct_dft_magnitude(frame, 512);
    for (std::size_t k = 0; k < fast.size(); ++k) {
      CHECK(std::abs(fast[k] - slow[k]) <= 1e-6 * std::max(slow[k], 1e-9));
    }
  }
  CHECK_THROWS_AS(FftPlan(500), Error);
}

TEST_CASE("framing count") {
  CHECK(frame_count(16000, 400, 160) == 98);
  CHECK(frame_count(400, 400, 160) == 1);
  CHECK(frame_count(399, 400, 160) == 0);
  for (std::size_t len = 400; len < 2000; len += 37) {
    for (int hop : {1, 80, 160, 400}) {
      // brute force: count start offsets whose frame fits entirely
      std::size_t expected = 0;
      for (std::size_t start = 0; start + 400 <= len; start += static_cast<std::size_t>(hop)) ++expected;
      CHECK(frame_count(len, 400, hop) == expected);
    }
  }
}

TEST_CASE("mfcc: shape and too-short clips") {
  const auto frames = compute_mfcc(noise(3, 16000));
  CHECK(frames.rows() == 98);
  CHECK(frames.cols() == 13);
  for (double v : frames.data()) CHECK(std::isfinite(v));

  try {
    compute_mfcc(noise(3, 399));
    FAIL("expected TooShort");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooShort);
  }
}

TEST_CASE("mfcc: config validation") {
  MfccConfig cfg;
  cfg.hop = 0;
  CHECK_THROWS_AS(cfg.validate(16000), Error);
  cfg = {};
  cfg.n_mfcc = 27;
  CHECK_THROWS_AS(cfg.validate(16000), Error);
  cfg = {};
  cfg.frame_len = 600;
  CHECK_THROWS_AS(cfg.validate(16000), Error);
  cfg = {};
  cfg.fmin = 9000;
  CHECK_THROWS_AS(cfg.validate(16000), Error);
  CHECK_NOTHROW(MfccConfig{}.validate(16000));
}

TEST_CASE("mfcc: digital silence gives identical frames with c1..c12 exactly zero") {
  const AudioClip silence{std::vector<double>(8000, 0.0), 16000};
  const MfccExtractor ex(MfccConfig{}, 16000);
  const auto frames = ex.compute(silence);

  const std::vector<double> floor_vec(26, std::log(1e-10));
  std::vector<double> expected(13);
  ex.dct(floor_vec, expected);
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    CHECK(frames(t, 0) == expected[0]);
    for (std::size_t k = 1; k < 13; ++k) CHECK(frames(t, k) == 0.0);
  }
  // c0 of a constant vector L under the orthonormal DCT is sqrt(N) * L.
  CHECK(expected[0] == doctest::Approx(std::sqrt(26.0) * std::log(1e-10)).epsilon(1e-12));
}

TEST_CASE("mfcc: 1 kHz sine peaks in the filter centred nearest 1 kHz") {
  const AudioClip tone = sine(1000.0, 16000);
  const MfccExtractor ex(MfccConfig{}, 16000);
  const auto energies = ex.mel_energies(tone);
  const auto centers = testing::textbook_centers(26, 0.0, 8000.0);
  std::size_t nearest = 0;
  for (std::size_t m = 1; m < centers.size(); ++m) {
    if (std::abs(centers[m] - 1000.0) < std::abs(centers[nearest] - 1000.0)) nearest = m;
  }
  CHECK(nearest == 8);  // 921.5 Hz; neighbours 777 Hz and 1080 Hz

  for (std::size_t t = 0; t < energies.rows(); ++t) {
    const auto row = energies.row(t);
    CHECK(static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()) == nearest);
  }

  // Oracle route on the first frame: emphasis, Hamming, direct DFT, textbook filterbank.
  std::vector<double> frame(400);
  for (std::size_t n = 0; n < 400; ++n) {
    const double prev = n == 0 ? 0.0 : tone.samples[n - 1];
    const double y = n == 0 ? tone.samples[0] : tone.samples[n] - 0.97 * prev;
    frame[n] = y * (0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / 399.0));
  }
  const auto mag = testing::direct_dft_magnitude(frame, 512);
  const auto fb = testing::textbook_filterbank(26, 512, 16000, 0.0, 8000.0);
  for (std::size_t m = 0; m < fb.size(); ++m) {
    double e = 0.0;
    for (std::size_t k = 0; k < mag.size(); ++k) e += fb[m][k] * mag[k];
    CHECK(energies(0, m) == doctest::Approx(e).epsilon(1e-9));
  }
}

TEST_CASE("mfcc: amplitude scaling changes only c0") {
  const AudioClip base = noise(11, 4000);
  AudioClip loud = base;
  for (auto& s : loud.samples) s *= 0.25;
  const auto a = compute_mfcc(base);
  const auto b = compute_mfcc(loud);
  for (std::size_t t = 0; t < a.rows(); ++t) {
    CHECK(b(t, 0) == doctest::Approx(a(t, 0) + std::sqrt(26.0) * std::log(0.25)).epsilon(1e-9));
    for (std::size_t k = 1; k < 13; ++k) CHECK(std::abs(a(t, k) - b(t, k)) <= 1e-6);
  }
}

TEST_CASE("mfcc: parallel and serial paths agree bitwise") {
  const MfccExtractor ex(MfccConfig{}, 16000);
  for (std::uint64_t seed = 20; seed < 24; ++seed) {
    const auto clip = noise(seed, 48000);
    CHECK(ex.compute(clip) == ex.compute_serial(clip));
  }
}

TEST_CASE("pool: fixed examples") {
  Matrix one(1, 3);
  one(0, 0) = 1.0;
  one(0, 1) = -2.0;
  one(0, 2) = 5.0;
  const auto p1 = pool(one);
  CHECK(p1.dim() == 12);
  CHECK(p1.kind == FeatureKind::MfccPooled);
  for (std::size_t j = 3; j < 12; ++j) CHECK(p1.values[j] == 0.0);

  Matrix same(5, 2);
  for (std::size_t t = 0; t < 5; ++t) {
    same(t, 0) = 3.0;
    same(t, 1) = -1.5;
  }
  const auto ps = pool(same);
  CHECK(ps.values == std::vector<double>{3.0, -1.5, 0, 0, 0, 0, 0, 0});

  Matrix two(2, 1);
  two(1, 0) = 2.0;
  CHECK(pool(two).values == std::vector<double>{1.0, 1.0, 1.0, 1.0});

  CHECK(pool(compute_mfcc(noise(4, 16000))).dim() == 52);
  CHECK_THROWS_AS(pool(Matrix{}), Error);
}

TEST_CASE("pool: without deltas the result ignores frame order") {
  Rng rng(9);
  Matrix m(17, 4);
  for (std::size_t t = 0; t < 17; ++t) {
    for (std::size_t c = 0; c < 4; ++c) m(t, c) = rng.uniform();
  }
  Matrix reversed(17, 4);
  for (std::size_t t = 0; t < 17; ++t) {
    for (std::size_t c = 0; c < 4; ++c) reversed(t, c) = m(16 - t, c);
  }
  const auto a = pool(m, false).values;
  const auto b = pool(reversed, false).values;
  REQUIRE(a.size() == 8);
  for (std::size_t j = 0; j < a.size(); ++j) CHECK(a[j] == doctest::Approx(b[j]).epsilon(1e-12));
  CHECK(pool(m).values != pool(reversed).values);
}
