#pragma once

#include <string_view>
#include <vector>

namespace moodspring {

enum class FeatureKind { MfccPooled, Tfidf, ExternalEmbedding };

std::string_view to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view name);

struct FeatureVector {
  std::vector<double> values;
  FeatureKind kind = FeatureKind::MfccPooled;

  std::size_t dim() const { return values.size(); }
};

}  // namespace moodspring
