#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "moodspring/fusion.hpp"
#include "moodspring/service/pipeline.hpp"

namespace moodspring::pipeline {

inline constexpr int kReportVersion = 1;

/// One decision source: a single classifier, the majority vote or a fusion layer.
struct SourceReport {
  std::string name;
  std::string kind;  // "classifier" | "majority_vote" | "fusion_lambda0" | "fusion_fair"
  std::size_t n = 0;
  double accuracy = 0.0;
  std::optional<fusion::DisparityReport> disparity;  // absent if a group has < 2 samples
};

struct EvaluationReport {
  double delta = 0.05;
  std::size_t n_samples = 0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  std::vector<SourceReport> sources;

  const SourceReport* find(std::string_view name) const;
  nlohmann::json to_json() const;
};

/// Classifier rows count only samples that carry the classifier's modality;
/// vote and fusion rows use every sample. Throws InvalidInput when empty.
EvaluationReport evaluate_outputs(const std::vector<SampleOutputs>& outputs, const ModelSet& set, double delta);

EvaluationReport evaluate(const data::Manifest& manifest, const ModelSet& set, const valence::ValenceMapping& mapping,
                          double delta, const data::EmbeddingTable* embeddings = nullptr);

}  // namespace moodspring::pipeline
