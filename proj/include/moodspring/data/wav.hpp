#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "moodspring/dsp/audio.hpp"

namespace moodspring::data {

/// PCM-16 little-endian WAV; the first channel is kept and samples are scaled by 1/32768.
/// Any other encoding is rejected with FormatError.
dsp::AudioClip decode_wav(std::string_view bytes);
dsp::AudioClip read_wav(const std::string& path);

/// Mono PCM-16 WAV; samples are clipped to [-1, 1).
std::string encode_wav(const dsp::AudioClip& clip);
void write_wav(const std::string& path, const dsp::AudioClip& clip);

std::vector<double> pcm16_to_samples(std::span<const std::int16_t> pcm);
std::int16_t sample_to_pcm16(double sample);

}  // namespace moodspring::data
