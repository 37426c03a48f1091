#include "moodspring/valence.hpp"

#include <algorithm>

#include "moodspring/error.hpp"

namespace moodspring::valence {

ValenceMapping::ValenceMapping() {
  for (auto label : {EmotionLabel::Neutral, EmotionLabel::Calm, EmotionLabel::Happy, EmotionLabel::Surprised}) {
    pleasant_[index_of(label)] = true;
  }
}

ValenceMapping::ValenceMapping(std::span<const EmotionLabel> pleasant) {
  for (auto label : pleasant) pleasant_[index_of(label)] = true;
  std::size_t count = 0;
  for (bool p : pleasant_) count += p ? 1 : 0;
  if (count == 0 || count == kEmotionCount) {
    fail(ErrorCode::ConfigError, "valence mapping must leave both pleasant and unpleasant sets non-empty");
  }
}

ValenceMapping ValenceMapping::from_names(const std::vector<std::string>& pleasant_names) {
  std::vector<EmotionLabel> labels;
  for (const auto& name : pleasant_names) {
    const auto label = parse_emotion(name);
    if (!label) fail(ErrorCode::ConfigError, "unknown emotion '" + name + "' in valence mapping");
    labels.push_back(*label);
  }
  return ValenceMapping(labels);
}

std::vector<EmotionLabel> ValenceMapping::pleasant_labels() const {
  std::vector<EmotionLabel> out;
  for (auto label : kAllEmotions) {
    if (is_pleasant(label)) out.push_back(label);
  }
  return out;
}

std::vector<EmotionLabel> ValenceMapping::unpleasant_labels() const {
  std::vector<EmotionLabel> out;
  for (auto label : kAllEmotions) {
    if (!is_pleasant(label)) out.push_back(label);
  }
  return out;
}

ValenceMapping ValenceMapping::swapped() const {
  const auto labels = unpleasant_labels();
  return ValenceMapping(labels);
}

double to_valence(std::span<const double> dist, const ValenceMapping& mapping) {
  if (dist.size() != kEmotionCount) {
    fail(ErrorCode::InvalidInput, "to_valence expects a distribution over all 8 emotion labels");
  }
  double p = 0.0;
  for (auto label : kAllEmotions) {
    if (mapping.is_pleasant(label)) p += dist[index_of(label)];
  }
  return std::clamp(p, 0.0, 1.0);
}

Valence valence_class(double p_pleasant) {
  return p_pleasant >= 0.5 ? Valence::Pleasant : Valence::Unpleasant;
}

}  // namespace moodspring::valence
