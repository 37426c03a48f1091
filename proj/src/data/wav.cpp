#include "moodspring/data/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "moodspring/data/csv.hpp"
#include "moodspring/error.hpp"

namespace moodspring::data {
namespace {

std::uint32_t read_u32(std::string_view b, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

std::uint16_t read_u16(std::string_view b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    static_cast<unsigned char>(b[at + 1]) << 8);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

}  // namespace

std::vector<double> pcm16_to_samples(std::span<const std::int16_t> pcm) {
  std::vector<double> out(pcm.size());
  for (std::size_t i = 0; i < pcm.size(); ++i) out[i] = pcm[i] / 32768.0;
  return out;
}

std::int16_t sample_to_pcm16(double sample) {
  const double scaled = std::round(sample * 32768.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

dsp::AudioClip decode_wav(std::string_view bytes) {
  const auto bad = [](const std::string& what) { fail(ErrorCode::FormatError, "WAV: " + what); };
  if (bytes.size() < 12 || bytes.substr(0, 4) != "RIFF" || bytes.substr(8, 4) != "WAVE") {
    bad("missing RIFF/WAVE header");
  }

  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string_view id = bytes.substr(pos, 4);
    const std::uint32_t size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (size < 16 || body + 16 > bytes.size()) bad("truncated fmt chunk");
      const std::uint16_t format = read_u16(bytes, body);
      channels = read_u16(bytes, body + 2);
      rate = read_u32(bytes, body + 4);
      const std::uint16_t bits = read_u16(bytes, body + 14);
      bool pcm = format == 1;
      if (format == 0xFFFE && size >= 40 && body + 26 <= bytes.size()) {
        pcm = read_u16(bytes, body + 24) == 1;  // WAVE_FORMAT_EXTENSIBLE sub-format
      }
      if (!pcm || bits != 16) {
        bad("only PCM 16-bit is supported (format " + std::to_string(format) + ", " +
            std::to_string(bits) + " bits)");
      }
      if (channels == 0 || rate == 0) bad("zero channels or sample rate");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) bad("data chunk before fmt chunk");
      const std::size_t available = std::min<std::size_t>(size, bytes.size() - body);
      const std::size_t frame_bytes = 2u * channels;
      const std::size_t frames = available / frame_bytes;
      dsp::AudioClip clip;
      clip.sample_rate = static_cast<int>(rate);
      clip.samples.resize(frames);
      for (std::size_t f = 0; f < frames; ++f) {
        const auto v = static_cast<std::int16_t>(read_u16(bytes, body + f * frame_bytes));
        clip.samples[f] = v / 32768.0;
      }
      return clip;
    }
    pos = body + size + (size & 1u);
  }
  fail(ErrorCode::FormatError, "WAV: no data chunk");
}

dsp::AudioClip read_wav(const std::string& path) { return decode_wav(read_file(path)); }

std::string encode_wav(const dsp::AudioClip& clip) {
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (double s : clip.samples) put_u16(out, static_cast<std::uint16_t>(sample_to_pcm16(s)));
  return out;
}

void write_wav(const std::string& path, const dsp::AudioClip& clip) { write_file(path, encode_wav(clip)); }

}  // namespace moodspring::data
