#include "moodspring/error.hpp"
#include "moodspring/features.hpp"

namespace moodspring {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::InsufficientGroups: return "InsufficientGroups";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::NumericalError: return "NumericalError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::SessionNotFound: return "SessionNotFound";
  }
  return "Unknown";
}

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::MfccPooled: return "mfcc-pooled";
    case FeatureKind::Tfidf: return "tfidf";
    case FeatureKind::ExternalEmbedding: return "external-embedding";
  }
  return "unknown";
}

FeatureKind parse_feature_kind(std::string_view name) {
  if (name == "mfcc-pooled") return FeatureKind::MfccPooled;
  if (name == "tfidf") return FeatureKind::Tfidf;
  if (name == "external-embedding") return FeatureKind::ExternalEmbedding;
  fail(ErrorCode::FormatError, "unknown feature kind '" + std::string(name) + "'");
}

}  // namespace moodspring
