#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace moodspring {

// Ordinals match the RAVDESS emotion codes minus one.
enum class EmotionLabel { Neutral, Calm, Happy, Sad, Angry, Fearful, Disgust, Surprised };

inline constexpr std::size_t kEmotionCount = 8;

inline constexpr std::array<EmotionLabel, kEmotionCount> kAllEmotions = {
    EmotionLabel::Neutral, EmotionLabel::Calm,    EmotionLabel::Happy,   EmotionLabel::Sad,
    EmotionLabel::Angry,   EmotionLabel::Fearful, EmotionLabel::Disgust, EmotionLabel::Surprised};

std::string_view to_string(EmotionLabel label);
std::optional<EmotionLabel> parse_emotion(std::string_view name);

inline constexpr std::size_t index_of(EmotionLabel label) { return static_cast<std::size_t>(label); }

enum class Valence { Pleasant, Unpleasant };

std::string_view to_string(Valence valence);
std::optional<Valence> parse_valence(std::string_view name);

enum class Group { A, B };

std::string_view to_string(Group group);
std::optional<Group> parse_group(std::string_view name);

}  // namespace moodspring
