#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "moodspring/features.hpp"

namespace moodspring::text {

using TokenList = std::vector<std::string>;

/// Lowercased maximal runs of Unicode letters/digits from UTF-8 input.
/// Invalid UTF-8 bytes act as separators.
TokenList tokenize(std::string_view text);

/// Sorted term list with document frequencies. The index of a term is its
/// coordinate in every vector produced against this vocabulary.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> df, std::size_t n_docs);

  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<std::size_t>& df() const { return df_; }
  std::size_t n_docs() const { return n_docs_; }
  std::size_t size() const { return terms_.size(); }

  std::optional<std::size_t> index_of(std::string_view term) const;
  double idf(std::size_t index) const;

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

 private:
  std::vector<std::string> terms_;
  std::vector<std::size_t> df_;
  std::size_t n_docs_ = 0;
};

Vocabulary build_vocab(const std::vector<TokenList>& corpus, std::size_t min_df = 1);

enum class WeightMode { Tf, Tfidf };

std::string_view to_string(WeightMode mode);
WeightMode parse_weight_mode(std::string_view name);

/// tf: raw counts. tfidf: count * (ln((1+N)/(1+df)) + 1), then L2-normalized.
/// Out-of-vocabulary tokens are ignored.
FeatureVector vectorize(const TokenList& tokens, const Vocabulary& vocab, WeightMode mode);

}  // namespace moodspring::text
