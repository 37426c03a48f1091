#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "moodspring/emotion.hpp"
#include "moodspring/features.hpp"

namespace moodspring::data {

enum class Modality { Audio, Text, Embedding };

std::string_view to_string(Modality modality);
std::optional<Modality> parse_modality(std::string_view name);

struct ManifestRow {
  std::string id;
  std::string source;  // audio: path relative to the manifest; text: the text; embedding: table row id
  EmotionLabel emotion = EmotionLabel::Neutral;
  Group group = Group::A;
  Modality modality = Modality::Text;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

struct Manifest {
  std::vector<ManifestRow> rows;
  std::string base_dir;  // directory that relative audio paths resolve against

  std::string resolve(const ManifestRow& row) const;

  friend bool operator==(const Manifest& a, const Manifest& b) { return a.rows == b.rows; }
};

/// Header must contain id,source,emotion,group,modality (any order, extra columns ignored).
/// Audio rows must reference existing files when check_files is set.
Manifest parse_manifest(std::string_view csv, const std::string& base_dir, bool check_files = true);
Manifest load_manifest(const std::string& path);
std::string format_manifest(const Manifest& manifest);
void save_manifest(const std::string& path, const Manifest& manifest);

/// Rows sharing the id prefix before the first ':' describe one sample seen
/// through several modalities ("clip07:audio", "clip07:text").
std::string sample_key(std::string_view id);

struct RavdessInfo {
  EmotionLabel emotion;
  int actor = 0;
  Group group = Group::A;  // odd actors are male (A), even actors female (B)
};

/// "MM-VV-EE-II-SS-RR-AA.wav"; field 3 is the emotion code, field 7 the actor.
RavdessInfo parse_ravdess_filename(std::string_view name);

struct EmbeddingTable {
  std::size_t dim = 0;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> vectors;
  std::unordered_map<std::string, std::size_t> index;

  /// Throws InvalidInput when the id is unknown.
  FeatureVector feature(std::string_view id) const;
};

/// Header "id,dim,v0,...,v{dim-1}"; every row repeats dim and carries exactly dim finite values.
EmbeddingTable parse_embedding_table(std::string_view csv);
EmbeddingTable load_embedding_table(const std::string& path);

struct Split {
  Manifest train;
  Manifest test;
};

/// Stratified by (emotion, group) over samples (see sample_key). Per-stratum test counts are round-half-up of
/// n * fraction, kept within [1, n-1] for strata of two or more rows, then
/// nudged one row at a time toward the global round-half-up target.
Split split(const Manifest& manifest, double test_fraction, std::uint64_t seed);

}  // namespace moodspring::data
