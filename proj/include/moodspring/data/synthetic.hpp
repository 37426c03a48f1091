#pragma once

#include <cstdint>
#include <string>

#include "moodspring/data/dataset.hpp"

namespace moodspring::data {

struct SyntheticOptions {
  std::size_t samples = 160;
  std::uint64_t seed = 0;
  double clip_seconds = 1.5;
  int sample_rate = 16000;
  /// Extra noise on group B recordings, so audio models are less accurate there.
  double group_b_noise = 0.25;
};

/// Writes <dir>/clips/*.wav and <dir>/manifest.csv: every sample has an audio
/// row ("<key>:audio") and a text row ("<key>:text") sharing emotion and group.
/// Audio pitch and loudness follow arousal and valence; text draws from
/// emotion word lists with filler words.
Manifest write_synthetic_corpus(const std::string& dir, const SyntheticOptions& opts);

}  // namespace moodspring::data
