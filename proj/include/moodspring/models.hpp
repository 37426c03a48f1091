#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "moodspring/features.hpp"
#include "moodspring/matrix.hpp"

namespace moodspring::models {

inline constexpr int kSchemaVersion = 1;

enum class ModelKind { GaussianNb, MultinomialNb, Knn, LinearSvm };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

/// Probabilities aligned with a model's class list.
struct ClassDistribution {
  std::vector<double> probs;

  /// Lowest index wins ties.
  std::size_t argmax() const;
};

struct Hyperparams {
  std::size_t k = 5;
  double svm_lambda = 1e-4;
  int svm_epochs = 20;
  double nb_alpha = 1.0;
  double var_smoothing = 1e-9;
};

/// Per-feature z-scoring fitted on training data; zero-variance features keep scale 1.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(std::span<const FeatureVector> xs);
  void apply(std::span<const double> in, std::span<double> out) const;
  std::vector<double> apply(std::span<const double> in) const;

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

struct GaussianNbParams {
  std::vector<double> priors;
  Matrix means;      // classes x dim, standardized units
  Matrix variances;  // classes x dim, smoothed
};

struct MultinomialNbParams {
  std::vector<double> priors;
  Matrix log_likelihoods;  // classes x dim
  double alpha = 1.0;
};

struct KnnParams {
  Matrix points;  // standardized training set, rows in training order
  std::vector<std::size_t> labels;
  std::size_t k = 5;
};

struct LinearSvmParams {
  Matrix weights;  // classes x dim
  std::vector<double> bias;
  double lambda = 1e-4;
  int epochs = 20;
};

using Parameters = std::variant<GaussianNbParams, MultinomialNbParams, KnnParams, LinearSvmParams>;

class TrainedModel {
 public:
  TrainedModel(ModelKind kind, std::vector<std::string> classes, std::size_t dim,
               FeatureKind feature_kind, std::optional<Standardizer> standardizer,
               Parameters parameters, std::uint64_t seed);

  ModelKind kind() const { return kind_; }
  const std::vector<std::string>& classes() const { return classes_; }
  std::size_t dim() const { return dim_; }
  FeatureKind feature_kind() const { return feature_kind_; }
  const std::optional<Standardizer>& standardizer() const { return standardizer_; }
  const Parameters& parameters() const { return parameters_; }
  std::uint64_t seed() const { return seed_; }

  /// Throws InvalidInput on a dimension or feature-kind mismatch.
  ClassDistribution predict_proba(const FeatureVector& x) const;
  ClassDistribution predict_proba(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& j);

 private:
  void validate_shapes() const;

  ModelKind kind_;
  std::vector<std::string> classes_;
  std::size_t dim_;
  FeatureKind feature_kind_;
  std::optional<Standardizer> standardizer_;
  Parameters parameters_;
  std::uint64_t seed_;
};

/// labels[i] indexes into classes. Every class needs at least one example.
TrainedModel train(ModelKind kind, std::span<const FeatureVector> xs,
                   std::span<const std::size_t> labels, std::vector<std::string> classes,
                   const Hyperparams& hp = {}, std::uint64_t seed = 0);

std::string save(const TrainedModel& model);
/// Throws FormatError on corrupt payloads or unsupported schema versions.
TrainedModel load(std::string_view bytes);

/// Squared Euclidean distance from query to every row of points (OpenMP).
std::vector<double> squared_distances(const Matrix& points, std::span<const double> query);
/// Serial reference for squared_distances.
std::vector<double> squared_distances_serial(const Matrix& points, std::span<const double> query);

/// Indices of the k smallest distances; equal distances resolve to the lower index.
std::vector<std::size_t> nearest(std::span<const double> distances, std::size_t k);

}  // namespace moodspring::models
