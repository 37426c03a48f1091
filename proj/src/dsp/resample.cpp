#include <cmath>

#include "moodspring/dsp/audio.hpp"
#include "moodspring/error.hpp"

namespace moodspring::dsp {

AudioClip resample(const AudioClip& clip, int dst_rate) {
  if (clip.samples.empty()) fail(ErrorCode::InvalidInput, "resample: empty clip");
  if (clip.sample_rate <= 0 || dst_rate <= 0) {
    fail(ErrorCode::InvalidInput, "resample: sample rates must be positive");
  }
  if (clip.sample_rate == dst_rate) return clip;

  const auto& src = clip.samples;
  const double ratio = static_cast<double>(clip.sample_rate) / dst_rate;
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(src.size()) * dst_rate / clip.sample_rate));

  AudioClip out{std::vector<double>(out_len), dst_rate};
  const std::size_t last = src.size() - 1;
  for (std::size_t i = 0; i < out_len; ++i) {
    const double pos = static_cast<double>(i) * ratio;
    const auto left = static_cast<std::size_t>(pos);
    if (left >= last) {
      out.samples[i] = src[last];
      continue;
    }
    const double frac = pos - static_cast<double>(left);
    out.samples[i] = frac == 0.0 ? src[left] : src[left] + frac * (src[left + 1] - src[left]);
  }
  return out;
}

}  // namespace moodspring::dsp
