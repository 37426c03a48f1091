#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "moodspring/emotion.hpp"

namespace moodspring::fusion {

inline constexpr int kSchemaVersion = 1;

/// Per-classifier p_pleasant values for one sample.
struct FusionInput {
  std::vector<double> p;
  Group group = Group::A;
  std::optional<bool> label;  // true = pleasant; required for training
};

struct FusionModel {
  std::vector<double> w;
  double b = 0.0;
  double lambda = 1.0;
  double delta = 0.05;
  double lr = 0.1;
  int epochs = 500;
  std::uint64_t seed = 0;

  std::size_t inputs() const { return w.size(); }

  nlohmann::json to_json() const;
  static FusionModel from_json(const nlohmann::json& j);

  friend bool operator==(const FusionModel&, const FusionModel&) = default;
};

/// Strict majority wins; a tie goes to valence_class(mean(probs)).
Valence majority_vote(std::span<const Valence> decisions, std::span<const double> probs);

/// sigmoid(w . p + b)
double fuse(const FusionModel& model, std::span<const double> p);

struct TrainOptions {
  double lambda = 1.0;
  double delta = 0.05;
  double lr = 0.1;
  int epochs = 500;
  std::uint64_t seed = 0;
};

/// Decomposition of the training objective L = CE + lambda * U.
struct LossTerms {
  double cross_entropy = 0.0;
  double gap = 0.0;            // mean CE of group A minus group B
  double variance_a = 0.0;     // biased variance of per-example CE in A
  double variance_b = 0.0;
  double disparity = 0.0;      // U
  double variance_floor = 0.0; // U evaluated at gap = 0
  double total = 0.0;
};

struct Gradient {
  std::vector<double> dw;
  double db = 0.0;
};

/// Evaluates the loss. U uses softabs(x) = sqrt(x^2 + 1e-8) for the group gap
/// plus sqrt(2 V_g ln(2/delta) / n_g) per group.
LossTerms loss(std::span<const double> w, double b, std::span<const FusionInput> batch,
               double lambda, double delta);

/// Analytic gradient of loss().total. Where V_g = 0 the subgradient 0 is used
/// for that group's variance term.
Gradient gradient(std::span<const double> w, double b, std::span<const FusionInput> batch,
                  double lambda, double delta);

struct TrainingTrace {
  FusionModel model;
  std::vector<double> loss_history;  // loss at each visited parameter vector
};

/// Full-batch gradient descent from w = 0, b = 0; returns the parameters with
/// the lowest observed loss.
TrainingTrace train_fusion_traced(std::span<const FusionInput> data, const TrainOptions& opts);
FusionModel train_fusion(std::span<const FusionInput> data, const TrainOptions& opts);

struct DisparityReport {
  double acc_a = 0.0;
  double acc_b = 0.0;
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double radius_a = 0.0;
  double radius_b = 0.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  double delta = 0.05;

  nlohmann::json to_json() const;
};

/// Empirical Bernstein deviation for a [0,1] variable:
/// sqrt(2 V ln(2/delta) / n) + 7 ln(2/delta) / (3 (n - 1)).
double bernstein_radius(double sample_variance, std::size_t n, double delta);

/// Accuracy-gap certificate from per-example 0/1 correctness of each group.
DisparityReport bernstein_disparity(std::span<const int> correct_a, std::span<const int> correct_b,
                                    double delta);

}  // namespace moodspring::fusion
