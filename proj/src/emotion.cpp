#include "moodspring/emotion.hpp"

namespace moodspring {
namespace {
constexpr std::array<std::string_view, kEmotionCount> kEmotionNames = {
    "neutral", "calm", "happy", "sad", "angry", "fearful", "disgust", "surprised"};
}

std::string_view to_string(EmotionLabel label) { return kEmotionNames[index_of(label)]; }

std::optional<EmotionLabel> parse_emotion(std::string_view name) {
  for (std::size_t i = 0; i < kEmotionNames.size(); ++i) {
    if (kEmotionNames[i] == name) return kAllEmotions[i];
  }
  return std::nullopt;
}

std::string_view to_string(Valence valence) {
  return valence == Valence::Pleasant ? "pleasant" : "unpleasant";
}

std::optional<Valence> parse_valence(std::string_view name) {
  if (name == "pleasant") return Valence::Pleasant;
  if (name == "unpleasant") return Valence::Unpleasant;
  return std::nullopt;
}

std::string_view to_string(Group group) { return group == Group::A ? "A" : "B"; }

std::optional<Group> parse_group(std::string_view name) {
  if (name == "A") return Group::A;
  if (name == "B") return Group::B;
  return std::nullopt;
}

}  // namespace moodspring
