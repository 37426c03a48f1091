#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "moodspring/data/dataset.hpp"
#include "moodspring/dsp/mfcc.hpp"
#include "moodspring/fusion.hpp"
#include "moodspring/models.hpp"
#include "moodspring/text.hpp"
#include "moodspring/valence.hpp"

namespace moodspring::pipeline {

inline constexpr int kModelSetVersion = 1;

struct TextFeatures {
  text::Vocabulary vocab;
  text::WeightMode mode = text::WeightMode::Tfidf;
};

struct AudioFeatures {
  dsp::MfccConfig mfcc;
  int sample_rate = dsp::kPipelineRate;
  bool deltas = true;
  std::shared_ptr<const dsp::MfccExtractor> extractor;  // built from the two fields above
};

AudioFeatures make_audio_features(const dsp::MfccConfig& cfg, int sample_rate, bool deltas = true);

struct EmbeddingFeatures {
  std::size_t dim = 0;
};

using Features = std::variant<TextFeatures, AudioFeatures, EmbeddingFeatures>;

/// Emotion classifiers predict over taxonomy labels; valence classifiers over
/// {"pleasant", "unpleasant"}.
enum class Target { Emotion, Valence };

std::string_view to_string(Target target);
Target parse_target(std::string_view name);

struct Classifier {
  std::string name;
  data::Modality modality = data::Modality::Text;
  Features features;
  models::TrainedModel model;

  Target target() const;
  double p_pleasant(const models::ClassDistribution& dist, const valence::ValenceMapping& mapping) const;
};

// Everything a session or an evaluation run needs. Fusion inputs follow the
// order of `classifiers`.
struct ModelSet {
  std::vector<Classifier> classifiers;
  std::optional<fusion::FusionModel> fusion;
  std::optional<fusion::FusionModel> fusion_baseline;  // lambda = 0 reference

  std::vector<std::size_t> indices_of(data::Modality modality) const;
  const Classifier* find(std::string_view name) const;

  /// Adds the classifier or replaces one with the same name. Any stored
  /// fusion layer no longer matches and is dropped.
  void upsert(Classifier classifier);

  nlohmann::json to_json() const;
  static ModelSet from_json(const nlohmann::json& j);
};

std::string save_model_set(const ModelSet& set);
/// Throws FormatError on corrupt payloads, unknown versions or a fusion layer
/// whose width differs from the classifier count.
ModelSet load_model_set(std::string_view bytes);
ModelSet read_model_set(const std::string& path);
void write_model_set(const std::string& path, const ModelSet& set);

FeatureVector text_features(const TextFeatures& f, std::string_view text);
/// Resamples to the feature rate, then pooled MFCC. Throws TooShort.
FeatureVector audio_features(const AudioFeatures& f, const dsp::AudioClip& clip);

struct TrainRequest {
  std::string name;  // empty: "<modality>-<model>"
  data::Modality modality = data::Modality::Text;
  models::ModelKind kind = models::ModelKind::MultinomialNb;
  Target target = Target::Emotion;
  text::WeightMode weight = text::WeightMode::Tfidf;
  std::size_t min_df = 1;
  dsp::MfccConfig mfcc;
  int sample_rate = dsp::kPipelineRate;
  models::Hyperparams hp;
  std::uint64_t seed = 0;
};

/// Trains on the manifest rows of the requested modality. Embedding rows need
/// the table.
Classifier train_classifier(const data::Manifest& manifest, const TrainRequest& req,
                            const valence::ValenceMapping& mapping,
                            const data::EmbeddingTable* embeddings = nullptr);

/// One fusion sample: all manifest rows that share a sample key.
struct SampleOutputs {
  std::string key;
  Group group = Group::A;
  bool pleasant = true;
  std::vector<double> p;       // per classifier; 0.5 where the modality is absent
  std::vector<char> present;   // 1 where the classifier saw an input
};

/// Throws FormatError when rows of one sample disagree on emotion or group.
std::vector<SampleOutputs> collect_outputs(const data::Manifest& manifest, const ModelSet& set,
                                           const valence::ValenceMapping& mapping,
                                           const data::EmbeddingTable* embeddings = nullptr);

std::vector<fusion::FusionInput> fusion_inputs(const std::vector<SampleOutputs>& outputs);

}  // namespace moodspring::pipeline
