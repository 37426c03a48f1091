#include "moodspring/text.hpp"

#include <algorithm>
#include <clocale>
#include <cmath>
#include <cwctype>
#include <locale.h>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "moodspring/error.hpp"

namespace moodspring::text {
namespace {

// glibc classifies the full Unicode range under C.UTF-8.
locale_t unicode_locale() {
  static const locale_t loc = [] {
    locale_t l = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(nullptr));
    if (l == static_cast<locale_t>(nullptr)) {
      l = newlocale(LC_CTYPE_MASK, "C", static_cast<locale_t>(nullptr));
    }
    return l;
  }();
  return loc;
}

constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes one code point starting at text[pos]; advances pos.
char32_t decode_utf8(std::string_view text, std::size_t& pos) {
  const auto lead = static_cast<unsigned char>(text[pos]);
  std::size_t extra = 0;
  char32_t cp = 0;
  if (lead < 0x80) {
    ++pos;
    return lead;
  } else if ((lead & 0xE0) == 0xC0) {
    extra = 1;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    extra = 2;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    extra = 3;
    cp = lead & 0x07;
  } else {
    ++pos;
    return kInvalid;
  }
  if (pos + extra >= text.size()) {
    ++pos;
    return kInvalid;
  }
  for (std::size_t i = 1; i <= extra; ++i) {
    const auto b = static_cast<unsigned char>(text[pos + i]);
    if ((b & 0xC0) != 0x80) {
      ++pos;
      return kInvalid;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  pos += extra + 1;
  return cp;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

}  // namespace

TokenList tokenize(std::string_view text) {
  const locale_t loc = unicode_locale();
  TokenList tokens;
  std::string current;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t cp = decode_utf8(text, pos);
    const auto wc = static_cast<wint_t>(cp);
    if (cp != kInvalid && iswalnum_l(wc, loc)) {
      encode_utf8(static_cast<char32_t>(towlower_l(wc, loc)), current);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Vocabulary::Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> df, std::size_t n_docs)
    : terms_(std::move(terms)), df_(std::move(df)), n_docs_(n_docs) {
  if (terms_.size() != df_.size()) fail(ErrorCode::InvalidInput, "vocabulary: terms/df length mismatch");
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (i > 0 && !(terms_[i - 1] < terms_[i])) {
      fail(ErrorCode::InvalidInput, "vocabulary terms must be unique and sorted");
    }
    if (df_[i] < 1 || df_[i] > n_docs_) {
      fail(ErrorCode::InvalidInput, "vocabulary df out of range for term '" + terms_[i] + "'");
    }
  }
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view term) const {
  const auto it = std::lower_bound(terms_.begin(), terms_.end(), term,
                                   [](const std::string& a, std::string_view b) { return a < b; });
  if (it == terms_.end() || *it != term) return std::nullopt;
  return static_cast<std::size_t>(it - terms_.begin());
}

double Vocabulary::idf(std::size_t index) const {
  return std::log((1.0 + static_cast<double>(n_docs_)) / (1.0 + static_cast<double>(df_[index]))) + 1.0;
}

nlohmann::json Vocabulary::to_json() const {
  return {{"terms", terms_}, {"df", df_}, {"n_docs", n_docs_}};
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  try {
    return Vocabulary(j.at("terms").get<std::vector<std::string>>(),
                      j.at("df").get<std::vector<std::size_t>>(), j.at("n_docs").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, std::string("vocabulary: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorCode::FormatError, e.what());
  }
}

Vocabulary build_vocab(const std::vector<TokenList>& corpus, std::size_t min_df) {
  if (corpus.empty()) fail(ErrorCode::InvalidInput, "build_vocab: empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& doc : corpus) {
    const std::set<std::string> unique(doc.begin(), doc.end());
    for (const auto& term : unique) ++counts[term];
  }
  std::vector<std::string> terms;
  std::vector<std::size_t> df;
  for (const auto& [term, count] : counts) {
    if (count >= min_df) {
      terms.push_back(term);
      df.push_back(count);
    }
  }
  return Vocabulary(std::move(terms), std::move(df), corpus.size());
}

std::string_view to_string(WeightMode mode) { return mode == WeightMode::Tf ? "tf" : "tfidf"; }

WeightMode parse_weight_mode(std::string_view name) {
  if (name == "tf") return WeightMode::Tf;
  if (name == "tfidf") return WeightMode::Tfidf;
  fail(ErrorCode::InvalidInput, "unknown weighting mode '" + std::string(name) + "'");
}

FeatureVector vectorize(const TokenList& tokens, const Vocabulary& vocab, WeightMode mode) {
  FeatureVector fv;
  fv.kind = FeatureKind::Tfidf;
  fv.values.assign(vocab.size(), 0.0);
  for (const auto& token : tokens) {
    if (const auto idx = vocab.index_of(token)) fv.values[*idx] += 1.0;
  }
  if (mode == WeightMode::Tfidf) {
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < fv.values.size(); ++i) {
      if (fv.values[i] != 0.0) {
        fv.values[i] *= vocab.idf(i);
        norm_sq += fv.values[i] * fv.values[i];
      }
    }
    if (norm_sq > 0.0) {
      const double inv = 1.0 / std::sqrt(norm_sq);
      for (double& v : fv.values) v *= inv;
    }
  }
  return fv;
}

}  // namespace moodspring::text
