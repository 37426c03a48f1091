#pragma once

#include <vector>

namespace moodspring::dsp {

inline constexpr int kPipelineRate = 16000;

/// Mono PCM, samples nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kPipelineRate;
};

/// Linear-interpolation resampler. Output length is
/// round(len * dst_rate / src_rate); the last source sample is held past the end.
AudioClip resample(const AudioClip& clip, int dst_rate);

}  // namespace moodspring::dsp
