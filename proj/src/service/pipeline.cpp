#include "moodspring/service/pipeline.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "moodspring/data/csv.hpp"
#include "moodspring/data/wav.hpp"
#include "moodspring/error.hpp"

namespace moodspring::pipeline {
namespace {

using nlohmann::json;

json mfcc_to_json(const dsp::MfccConfig& c) {
  return {{"frame_len", c.frame_len}, {"hop", c.hop},     {"n_fft", c.n_fft},
          {"n_mels", c.n_mels},       {"n_mfcc", c.n_mfcc}, {"pre_emphasis", c.pre_emphasis},
          {"fmin", c.fmin},           {"fmax", c.fmax ? json(*c.fmax) : json(nullptr)},
          {"log_floor", c.log_floor}};
}

dsp::MfccConfig mfcc_from_json(const json& j) {
  dsp::MfccConfig c;
  c.frame_len = j.at("frame_len").get<int>();
  c.hop = j.at("hop").get<int>();
  c.n_fft = j.at("n_fft").get<int>();
  c.n_mels = j.at("n_mels").get<int>();
  c.n_mfcc = j.at("n_mfcc").get<int>();
  c.pre_emphasis = j.at("pre_emphasis").get<double>();
  c.fmin = j.at("fmin").get<double>();
  if (!j.at("fmax").is_null()) c.fmax = j.at("fmax").get<double>();
  c.log_floor = j.at("log_floor").get<double>();
  return c;
}

json features_to_json(const Features& f) {
  if (const auto* t = std::get_if<TextFeatures>(&f)) {
    return {{"type", "text"}, {"weighting", text::to_string(t->mode)}, {"vocab", t->vocab.to_json()}};
  }
  if (const auto* a = std::get_if<AudioFeatures>(&f)) {
    return {{"type", "audio"}, {"sample_rate", a->sample_rate}, {"deltas", a->deltas}, {"mfcc", mfcc_to_json(a->mfcc)}};
  }
  return {{"type", "embedding"}, {"dim", std::get<EmbeddingFeatures>(f).dim}};
}

Features features_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "text") {
    return TextFeatures{text::Vocabulary::from_json(j.at("vocab")),
                        text::parse_weight_mode(j.at("weighting").get<std::string>())};
  }
  if (type == "audio") {
    return make_audio_features(mfcc_from_json(j.at("mfcc")), j.at("sample_rate").get<int>(),
                               j.at("deltas").get<bool>());
  }
  if (type == "embedding") return EmbeddingFeatures{j.at("dim").get<std::size_t>()};
  fail(ErrorCode::FormatError, "unknown feature type '" + type + "'");
}

data::Modality modality_of(const Features& f) {
  if (std::holds_alternative<TextFeatures>(f)) return data::Modality::Text;
  if (std::holds_alternative<AudioFeatures>(f)) return data::Modality::Audio;
  return data::Modality::Embedding;
}

std::pair<std::size_t, FeatureKind> expected_shape(const Features& f) {
  if (const auto* t = std::get_if<TextFeatures>(&f)) return {t->vocab.size(), FeatureKind::Tfidf};
  if (const auto* a = std::get_if<AudioFeatures>(&f)) {
    return {static_cast<std::size_t>(a->mfcc.n_mfcc) * (a->deltas ? 4 : 2), FeatureKind::MfccPooled};
  }
  return {std::get<EmbeddingFeatures>(f).dim, FeatureKind::ExternalEmbedding};
}

bool is_valence_classes(const std::vector<std::string>& classes) {
  if (classes.size() != 2) return false;
  std::set<std::string> s(classes.begin(), classes.end());
  return s == std::set<std::string>{"pleasant", "unpleasant"};
}

void validate_classifier(const Classifier& c) {
  if (c.name.empty()) fail(ErrorCode::FormatError, "classifier without a name");
  if (modality_of(c.features) != c.modality) {
    fail(ErrorCode::FormatError, "classifier '" + c.name + "': features do not match modality");
  }
  const auto [dim, kind] = expected_shape(c.features);
  if (c.model.dim() != dim || c.model.feature_kind() != kind) {
    fail(ErrorCode::FormatError, "classifier '" + c.name + "': model expects " + std::to_string(c.model.dim()) +
                                     " " + std::string(to_string(c.model.feature_kind())) + " features, extractor gives " +
                                     std::to_string(dim) + " " + std::string(to_string(kind)));
  }
  if (!is_valence_classes(c.model.classes())) {
    for (const auto& name : c.model.classes()) {
      if (!parse_emotion(name)) fail(ErrorCode::FormatError, "classifier '" + c.name + "': unknown class '" + name + "'");
    }
  }
}

FeatureVector row_features(const Features& features, const data::Manifest& manifest, const data::ManifestRow& row,
                           const data::EmbeddingTable* embeddings) {
  switch (modality_of(features)) {
    case data::Modality::Text:
      return text_features(std::get<TextFeatures>(features), row.source);
    case data::Modality::Audio:
      return audio_features(std::get<AudioFeatures>(features), data::read_wav(manifest.resolve(row)));
    case data::Modality::Embedding:
      if (embeddings == nullptr) fail(ErrorCode::InvalidInput, "embedding rows need an embedding table");
      return embeddings->feature(row.source);
  }
  fail(ErrorCode::InvalidInput, "unknown modality");
}

}  // namespace

AudioFeatures make_audio_features(const dsp::MfccConfig& cfg, int sample_rate, bool deltas) {
  AudioFeatures f;
  f.mfcc = cfg;
  f.sample_rate = sample_rate;
  f.deltas = deltas;
  f.extractor = std::make_shared<const dsp::MfccExtractor>(cfg, sample_rate);
  return f;
}

std::string_view to_string(Target target) { return target == Target::Emotion ? "emotion" : "valence"; }

Target parse_target(std::string_view name) {
  if (name == "emotion") return Target::Emotion;
  if (name == "valence") return Target::Valence;
  fail(ErrorCode::InvalidInput, "unknown target '" + std::string(name) + "'");
}

Target Classifier::target() const { return is_valence_classes(model.classes()) ? Target::Valence : Target::Emotion; }

double Classifier::p_pleasant(const models::ClassDistribution& dist, const valence::ValenceMapping& mapping) const {
  const auto& classes = model.classes();
  if (target() == Target::Valence) {
    return classes[0] == "pleasant" ? dist.probs[0] : dist.probs[1];
  }
  std::array<double, kEmotionCount> full{};
  for (std::size_t c = 0; c < classes.size(); ++c) {
    full[static_cast<std::size_t>(*parse_emotion(classes[c]))] = dist.probs[c];
  }
  return valence::to_valence(full, mapping);
}

std::vector<std::size_t> ModelSet::indices_of(data::Modality modality) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < classifiers.size(); ++i) {
    if (classifiers[i].modality == modality) out.push_back(i);
  }
  return out;
}

const Classifier* ModelSet::find(std::string_view name) const {
  for (const auto& c : classifiers) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

void ModelSet::upsert(Classifier classifier) {
  validate_classifier(classifier);
  const auto it = std::find_if(classifiers.begin(), classifiers.end(),
                               [&](const Classifier& c) { return c.name == classifier.name; });
  if (it != classifiers.end()) {
    *it = std::move(classifier);
  } else {
    classifiers.push_back(std::move(classifier));
  }
  fusion.reset();
  fusion_baseline.reset();
}

json ModelSet::to_json() const {
  json list = json::array();
  for (const auto& c : classifiers) {
    list.push_back({{"name", c.name},
                    {"modality", data::to_string(c.modality)},
                    {"features", features_to_json(c.features)},
                    {"classifier", c.model.to_json()}});
  }
  return {{"schema_version", kModelSetVersion},
          {"artifact", "model-set"},
          {"classifiers", list},
          {"fusion", fusion ? fusion->to_json() : json(nullptr)},
          {"fusion_baseline", fusion_baseline ? fusion_baseline->to_json() : json(nullptr)}};
}

ModelSet ModelSet::from_json(const json& j) {
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kModelSetVersion) {
      fail(ErrorCode::FormatError, "unsupported model-set schema_version " + std::to_string(version) +
                                       " (this build reads version " + std::to_string(kModelSetVersion) + ")");
    }
    if (j.at("artifact").get<std::string>() != "model-set") fail(ErrorCode::FormatError, "artifact is not a model set");
    ModelSet set;
    std::set<std::string> names;
    for (const auto& entry : j.at("classifiers")) {
      const auto modality = data::parse_modality(entry.at("modality").get<std::string>());
      if (!modality) fail(ErrorCode::FormatError, "unknown modality " + entry.at("modality").dump());
      Classifier c{entry.at("name").get<std::string>(), *modality, features_from_json(entry.at("features")),
                   models::TrainedModel::from_json(entry.at("classifier"))};
      validate_classifier(c);
      if (!names.insert(c.name).second) fail(ErrorCode::FormatError, "duplicate classifier name '" + c.name + "'");
      set.classifiers.push_back(std::move(c));
    }
    for (const char* key : {"fusion", "fusion_baseline"}) {
      if (!j.contains(key) || j.at(key).is_null()) continue;
      auto model = fusion::FusionModel::from_json(j.at(key));
      if (model.inputs() != set.classifiers.size()) {
        fail(ErrorCode::FormatError, std::string(key) + " expects " + std::to_string(model.inputs()) +
                                         " inputs but the set has " + std::to_string(set.classifiers.size()) +
                                         " classifiers");
      }
      (std::string_view(key) == "fusion" ? set.fusion : set.fusion_baseline) = std::move(model);
    }
    return set;
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, std::string("model set: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::FormatError) throw;
    fail(ErrorCode::FormatError, std::string("model set: ") + e.what());
  }
}

std::string save_model_set(const ModelSet& set) { return set.to_json().dump(2) + "\n"; }

ModelSet load_model_set(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, std::string("model set is not valid JSON: ") + e.what());
  }
  return ModelSet::from_json(j);
}

ModelSet read_model_set(const std::string& path) { return load_model_set(data::read_file(path)); }

void write_model_set(const std::string& path, const ModelSet& set) { data::write_file(path, save_model_set(set)); }

FeatureVector text_features(const TextFeatures& f, std::string_view text) {
  return text::vectorize(text::tokenize(text), f.vocab, f.mode);
}

FeatureVector audio_features(const AudioFeatures& f, const dsp::AudioClip& clip) {
  const dsp::AudioClip at_rate = clip.sample_rate == f.sample_rate ? clip : dsp::resample(clip, f.sample_rate);
  if (dsp::frame_count(at_rate.samples.size(), f.mfcc.frame_len, f.mfcc.hop) == 0) {
    fail(ErrorCode::TooShort, "clip shorter than one MFCC frame");
  }
  return dsp::pool(f.extractor->compute(at_rate), f.deltas);
}

Classifier train_classifier(const data::Manifest& manifest, const TrainRequest& req,
                            const valence::ValenceMapping& mapping, const data::EmbeddingTable* embeddings) {
  std::vector<const data::ManifestRow*> rows;
  for (const auto& row : manifest.rows) {
    if (row.modality == req.modality) rows.push_back(&row);
  }
  if (rows.empty()) {
    fail(ErrorCode::InsufficientData, "manifest has no " + std::string(data::to_string(req.modality)) + " rows");
  }

  Features features;
  switch (req.modality) {
    case data::Modality::Text: {
      std::vector<text::TokenList> corpus;
      for (const auto* row : rows) corpus.push_back(text::tokenize(row->source));
      features = TextFeatures{text::build_vocab(corpus, req.min_df), req.weight};
      break;
    }
    case data::Modality::Audio:
      features = make_audio_features(req.mfcc, req.sample_rate);
      break;
    case data::Modality::Embedding:
      if (embeddings == nullptr) fail(ErrorCode::InvalidInput, "embedding training needs an embedding table");
      features = EmbeddingFeatures{embeddings->dim};
      break;
  }

  std::vector<FeatureVector> xs;
  xs.reserve(rows.size());
  for (const auto* row : rows) xs.push_back(row_features(features, manifest, *row, embeddings));

  std::vector<std::string> classes;
  std::vector<std::size_t> labels;
  if (req.target == Target::Valence) {
    classes = {"pleasant", "unpleasant"};
    for (const auto* row : rows) labels.push_back(mapping.is_pleasant(row->emotion) ? 0 : 1);
  } else {
    std::array<bool, kEmotionCount> seen{};
    for (const auto* row : rows) seen[static_cast<std::size_t>(row->emotion)] = true;
    std::array<std::size_t, kEmotionCount> slot{};
    for (auto e : kAllEmotions) {
      if (seen[static_cast<std::size_t>(e)]) {
        slot[static_cast<std::size_t>(e)] = classes.size();
        classes.emplace_back(to_string(e));
      }
    }
    for (const auto* row : rows) labels.push_back(slot[static_cast<std::size_t>(row->emotion)]);
  }
  Classifier c{req.name.empty() ? std::string(data::to_string(req.modality)) + "-" + std::string(models::to_string(req.kind))
                                : req.name,
               req.modality, std::move(features), models::train(req.kind, xs, labels, classes, req.hp, req.seed)};
  validate_classifier(c);
  return c;
}

std::vector<SampleOutputs> collect_outputs(const data::Manifest& manifest, const ModelSet& set,
                                           const valence::ValenceMapping& mapping,
                                           const data::EmbeddingTable* embeddings) {
  std::vector<SampleOutputs> out;
  std::map<std::string, std::size_t> slot;
  const std::size_t m = set.classifiers.size();
  for (const auto& row : manifest.rows) {
    const auto key = data::sample_key(row.id);
    auto [it, fresh] = slot.emplace(key, out.size());
    if (fresh) {
      out.push_back({key, row.group, mapping.is_pleasant(row.emotion), std::vector<double>(m, 0.5),
                     std::vector<char>(m, 0)});
    }
    auto& s = out[it->second];
    if (s.group != row.group || s.pleasant != mapping.is_pleasant(row.emotion)) {
      fail(ErrorCode::FormatError, "sample '" + key + "': rows disagree on group or valence (row " + row.id + ")");
    }
    for (std::size_t i = 0; i < m; ++i) {
      const auto& c = set.classifiers[i];
      if (c.modality != row.modality) continue;
      const auto dist = c.model.predict_proba(row_features(c.features, manifest, row, embeddings));
      s.p[i] = c.p_pleasant(dist, mapping);
      s.present[i] = 1;
    }
  }
  return out;
}

std::vector<fusion::FusionInput> fusion_inputs(const std::vector<SampleOutputs>& outputs) {
  std::vector<fusion::FusionInput> in;
  in.reserve(outputs.size());
  for (const auto& s : outputs) in.push_back({s.p, s.group, s.pleasant});
  return in;
}

}  // namespace moodspring::pipeline
