#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "moodspring/emotion.hpp"

namespace moodspring::valence {

// Partition of the emotion taxonomy into pleasant / unpleasant halves.
class ValenceMapping {
 public:
  /// neutral, calm, happy, surprised are pleasant; the rest unpleasant.
  ValenceMapping();

  /// Throws ConfigError if either side of the partition would be empty.
  explicit ValenceMapping(std::span<const EmotionLabel> pleasant);
  static ValenceMapping from_names(const std::vector<std::string>& pleasant_names);

  bool is_pleasant(EmotionLabel label) const { return pleasant_[index_of(label)]; }
  std::vector<EmotionLabel> pleasant_labels() const;
  std::vector<EmotionLabel> unpleasant_labels() const;

  /// The same partition with sides exchanged.
  ValenceMapping swapped() const;

 private:
  std::array<bool, kEmotionCount> pleasant_{};
};

/// Sum of probability over the pleasant side; dist is indexed by EmotionLabel.
double to_valence(std::span<const double> dist, const ValenceMapping& mapping);

/// Ties at exactly 0.5 resolve to pleasant.
Valence valence_class(double p_pleasant);

}  // namespace moodspring::valence
