#include "moodspring/data/synthetic.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

#include "moodspring/data/wav.hpp"
#include "moodspring/rng.hpp"

namespace moodspring::data {
namespace {

struct Profile {
  double pitch_hz;
  double loudness;
  std::vector<const char*> words;
};

const Profile& profile(EmotionLabel e) {
  static const std::array<Profile, kEmotionCount> table = {{
      {180.0, 0.20, {"fine", "okay", "usual", "plain", "ordinary"}},
      {150.0, 0.15, {"calm", "peaceful", "quiet", "gentle", "relaxed"}},
      {320.0, 0.45, {"happy", "lovely", "wonderful", "joy", "delighted"}},
      {130.0, 0.12, {"sad", "lonely", "tears", "miss", "gloomy"}},
      {260.0, 0.60, {"angry", "furious", "hate", "unfair", "awful"}},
      {380.0, 0.35, {"afraid", "scared", "nervous", "danger", "panic"}},
      {210.0, 0.40, {"gross", "disgusting", "nasty", "rotten", "sick"}},
      {420.0, 0.50, {"wow", "surprise", "unexpected", "amazing", "sudden"}},
  }};
  return table[static_cast<std::size_t>(e)];
}

constexpr const char* kFiller[] = {"the", "a", "today", "really", "it", "was", "so", "and", "this", "feels"};

}  // namespace

Manifest write_synthetic_corpus(const std::string& dir, const SyntheticOptions& opts) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "clips");
  Rng rng(opts.seed);
  Manifest manifest;
  manifest.base_dir = dir;
  const auto n = static_cast<std::size_t>(std::lround(opts.clip_seconds * opts.sample_rate));

  for (std::size_t i = 0; i < opts.samples; ++i) {
    const auto emotion = kAllEmotions[i % kEmotionCount];
    const Group group = (i / kEmotionCount) % 2 == 0 ? Group::A : Group::B;
    const auto& p = profile(emotion);
    const std::string key = "s" + std::to_string(1000 + i);

    dsp::AudioClip clip{std::vector<double>(n), opts.sample_rate};
    const double pitch = p.pitch_hz * (0.9 + 0.2 * rng.uniform());
    const double loud = p.loudness * (0.8 + 0.4 * rng.uniform());
    const double noise = 0.02 + (group == Group::B ? opts.group_b_noise : 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const double time = static_cast<double>(t) / opts.sample_rate;
      const double tone = std::sin(2 * std::numbers::pi * pitch * time) +
                          0.5 * std::sin(2 * std::numbers::pi * 2.0 * pitch * time);
      clip.samples[t] = std::clamp(loud * tone / 1.5 + noise * (rng.uniform() * 2.0 - 1.0), -1.0, 0.999);
    }
    const std::string wav = "clips/" + key + ".wav";
    write_wav((fs::path(dir) / wav).string(), clip);

    std::string sentence;
    const std::size_t words = 4 + rng.below(5);
    for (std::size_t w = 0; w < words; ++w) {
      if (!sentence.empty()) sentence += ' ';
      // two in three words carry emotion
      sentence += rng.below(3) == 0 ? kFiller[rng.below(std::size(kFiller))] : p.words[rng.below(p.words.size())];
    }

    manifest.rows.push_back({key + ":audio", wav, emotion, group, Modality::Audio});
    manifest.rows.push_back({key + ":text", sentence, emotion, group, Modality::Text});
  }
  save_manifest((fs::path(dir) / "manifest.csv").string(), manifest);
  return manifest;
}

}  // namespace moodspring::data
