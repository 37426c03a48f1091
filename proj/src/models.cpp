#include "moodspring/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <nlohmann/json.hpp>

#include "moodspring/error.hpp"
#include "moodspring/rng.hpp"

namespace moodspring::models {
namespace {

using nlohmann::json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void normalize_log(std::vector<double>& logp) {
  const double top = *std::max_element(logp.begin(), logp.end());
  double total = 0.0;
  for (double& v : logp) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : logp) v /= total;
}

std::vector<double> flatten(const Matrix& m) { return m.data(); }

Matrix unflatten(const std::vector<double>& flat, std::size_t rows, std::size_t cols,
                 std::string_view what) {
  if (flat.size() != rows * cols) {
    fail(ErrorCode::FormatError, std::string(what) + ": expected " + std::to_string(rows * cols) +
                                     " values, found " + std::to_string(flat.size()));
  }
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = flat[r * cols + c];
  }
  return m;
}

std::vector<std::size_t> class_counts(std::span<const std::size_t> labels, std::size_t n_classes) {
  std::vector<std::size_t> counts(n_classes, 0);
  for (std::size_t y : labels) ++counts[y];
  return counts;
}

std::vector<double> priors_from(const std::vector<std::size_t>& counts, std::size_t n) {
  std::vector<double> priors(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    priors[c] = static_cast<double>(counts[c]) / static_cast<double>(n);
  }
  return priors;
}

GaussianNbParams fit_gaussian(const std::vector<std::vector<double>>& zs,
                              std::span<const std::size_t> labels, std::size_t n_classes,
                              std::size_t dim, const Hyperparams& hp) {
  const auto counts = class_counts(labels, n_classes);
  GaussianNbParams p{priors_from(counts, labels.size()), Matrix(n_classes, dim),
                     Matrix(n_classes, dim)};

  for (std::size_t i = 0; i < zs.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) p.means(labels[i], j) += zs[i][j];
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t j = 0; j < dim; ++j) p.means(c, j) /= static_cast<double>(counts[c]);
  }
  for (std::size_t i = 0; i < zs.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = zs[i][j] - p.means(labels[i], j);
      p.variances(labels[i], j) += d * d;
    }
  }

  // Smoothing is relative to the largest per-feature variance over all data.
  double max_var = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    double mean = 0.0;
    for (const auto& z : zs) mean += z[j];
    mean /= static_cast<double>(zs.size());
    double var = 0.0;
    for (const auto& z : zs) var += (z[j] - mean) * (z[j] - mean);
    max_var = std::max(max_var, var / static_cast<double>(zs.size()));
  }
  const double epsilon = hp.var_smoothing * (max_var > 0.0 ? max_var : 1.0);

  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t j = 0; j < dim; ++j) {
      p.variances(c, j) = p.variances(c, j) / static_cast<double>(counts[c]) + epsilon;
    }
  }
  return p;
}

MultinomialNbParams fit_multinomial(std::span<const FeatureVector> xs,
                                    std::span<const std::size_t> labels, std::size_t n_classes,
                                    std::size_t dim, const Hyperparams& hp) {
  const auto counts = class_counts(labels, n_classes);
  MultinomialNbParams p{priors_from(counts, labels.size()), Matrix(n_classes, dim), hp.nb_alpha};
  Matrix totals(n_classes, dim);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) totals(labels[i], j) += xs[i].values[j];
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    double class_total = 0.0;
    for (std::size_t j = 0; j < dim; ++j) class_total += totals(c, j);
    const double denom = class_total + hp.nb_alpha * static_cast<double>(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      p.log_likelihoods(c, j) = std::log((totals(c, j) + hp.nb_alpha) / denom);
    }
  }
  return p;
}

// One-vs-rest Pegasos on standardized features; the bias is a weight on a
// constant 1 feature and is regularized with the rest.
LinearSvmParams fit_svm(const std::vector<std::vector<double>>& zs,
                        std::span<const std::size_t> labels, std::size_t n_classes,
                        std::size_t dim, const Hyperparams& hp, std::uint64_t seed) {
  const double lambda = hp.svm_lambda;
  const std::size_t aug = dim + 1;
  std::vector<std::vector<double>> w(n_classes, std::vector<double>(aug, 0.0));
  std::vector<std::size_t> order(zs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  const double radius = 1.0 / std::sqrt(lambda);

  std::size_t t = 0;
  for (int epoch = 0; epoch < hp.svm_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const auto& x = zs[i];
      for (std::size_t c = 0; c < n_classes; ++c) {
        auto& wc = w[c];
        const double y = labels[i] == c ? 1.0 : -1.0;
        double margin = wc[dim];
        for (std::size_t j = 0; j < dim; ++j) margin += wc[j] * x[j];
        const double shrink = 1.0 - eta * lambda;
        for (double& v : wc) v *= shrink;
        if (y * margin < 1.0) {
          for (std::size_t j = 0; j < dim; ++j) wc[j] += eta * y * x[j];
          wc[dim] += eta * y;
        }
        double norm_sq = 0.0;
        for (double v : wc) norm_sq += v * v;
        if (norm_sq > radius * radius) {
          const double s = radius / std::sqrt(norm_sq);
          for (double& v : wc) v *= s;
        }
      }
    }
  }

  LinearSvmParams p{Matrix(n_classes, dim), std::vector<double>(n_classes), lambda, hp.svm_epochs};
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t j = 0; j < dim; ++j) p.weights(c, j) = w[c][j];
    p.bias[c] = w[c][dim];
  }
  return p;
}

json standardizer_json(const std::optional<Standardizer>& s) {
  if (!s) return nullptr;
  return {{"mean", s->mean}, {"scale", s->scale}};
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::GaussianNb: return "gaussian-nb";
    case ModelKind::MultinomialNb: return "multinomial-nb";
    case ModelKind::Knn: return "knn";
    case ModelKind::LinearSvm: return "linear-svm";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto kind : {ModelKind::GaussianNb, ModelKind::MultinomialNb, ModelKind::Knn, ModelKind::LinearSvm}) {
    if (to_string(kind) == name) return kind;
  }
  fail(ErrorCode::InvalidInput, "unknown model kind '" + std::string(name) + "'");
}

std::size_t ClassDistribution::argmax() const {
  return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

Standardizer Standardizer::fit(std::span<const FeatureVector> xs) {
  const std::size_t dim = xs.front().dim();
  const auto n = static_cast<double>(xs.size());
  Standardizer s{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
  for (const auto& x : xs) {
    for (std::size_t j = 0; j < dim; ++j) s.mean[j] += x.values[j];
  }
  for (double& m : s.mean) m /= n;
  for (std::size_t j = 0; j < dim; ++j) {
    double var = 0.0;
    for (const auto& x : xs) var += (x.values[j] - s.mean[j]) * (x.values[j] - s.mean[j]);
    const double sd = std::sqrt(var / n);
    s.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

void Standardizer::apply(std::span<const double> in, std::span<double> out) const {
  for (std::size_t j = 0; j < in.size(); ++j) out[j] = (in[j] - mean[j]) / scale[j];
}

std::vector<double> Standardizer::apply(std::span<const double> in) const {
  std::vector<double> out(in.size());
  apply(in, out);
  return out;
}

std::vector<double> squared_distances_serial(const Matrix& points, std::span<const double> query) {
  std::vector<double> out(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto row = points.row(i);
    double sum = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double d = row[j] - query[j];
      sum += d * d;
    }
    out[i] = sum;
  }
  return out;
}

std::vector<double> squared_distances(const Matrix& points, std::span<const double> query) {
  const auto n = static_cast<std::ptrdiff_t>(points.rows());
  std::vector<double> out(points.rows());
#pragma omp parallel for schedule(static) if (n > 256)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto row = points.row(static_cast<std::size_t>(i));
    double sum = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double d = row[j] - query[j];
      sum += d * d;
    }
    out[static_cast<std::size_t>(i)] = sum;
  }
  return out;
}

std::vector<std::size_t> nearest(std::span<const double> distances, std::size_t k) {
  std::vector<std::size_t> idx(distances.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return distances[a] < distances[b] || (distances[a] == distances[b] && a < b);
                    });
  idx.resize(k);
  return idx;
}

TrainedModel::TrainedModel(ModelKind kind, std::vector<std::string> classes, std::size_t dim,
                           FeatureKind feature_kind, std::optional<Standardizer> standardizer,
                           Parameters parameters, std::uint64_t seed)
    : kind_(kind),
      classes_(std::move(classes)),
      dim_(dim),
      feature_kind_(feature_kind),
      standardizer_(std::move(standardizer)),
      parameters_(std::move(parameters)),
      seed_(seed) {
  validate_shapes();
}

void TrainedModel::validate_shapes() const {
  const std::size_t C = classes_.size();
  const auto bad = [](const std::string& what) { fail(ErrorCode::FormatError, "model: " + what); };
  if (C < 2) bad("need at least two classes");
  if (dim_ == 0) bad("dimension must be positive");
  if (standardizer_ && (standardizer_->mean.size() != dim_ || standardizer_->scale.size() != dim_)) {
    bad("standardizer length does not match dimension");
  }
  const bool wants_standardizer = kind_ != ModelKind::MultinomialNb;
  if (wants_standardizer != standardizer_.has_value()) bad("standardizer presence does not match kind");

  std::visit(Overloaded{
                 [&](const GaussianNbParams& p) {
                   if (kind_ != ModelKind::GaussianNb) bad("parameters do not match kind");
                   if (p.priors.size() != C || p.means.rows() != C || p.means.cols() != dim_ ||
                       p.variances.rows() != C || p.variances.cols() != dim_) {
                     bad("gaussian-nb parameter shapes");
                   }
                   for (double v : p.variances.data()) {
                     if (!(v > 0.0)) bad("gaussian-nb variances must be positive");
                   }
                 },
                 [&](const MultinomialNbParams& p) {
                   if (kind_ != ModelKind::MultinomialNb) bad("parameters do not match kind");
                   if (p.priors.size() != C || p.log_likelihoods.rows() != C ||
                       p.log_likelihoods.cols() != dim_) {
                     bad("multinomial-nb parameter shapes");
                   }
                 },
                 [&](const KnnParams& p) {
                   if (kind_ != ModelKind::Knn) bad("parameters do not match kind");
                   if (p.points.cols() != dim_ || p.points.rows() != p.labels.size() ||
                       p.points.rows() == 0 || p.k == 0) {
                     bad("knn parameter shapes");
                   }
                   for (std::size_t y : p.labels) {
                     if (y >= C) bad("knn label out of range");
                   }
                 },
                 [&](const LinearSvmParams& p) {
                   if (kind_ != ModelKind::LinearSvm) bad("parameters do not match kind");
                   if (p.weights.rows() != C || p.weights.cols() != dim_ || p.bias.size() != C) {
                     bad("linear-svm parameter shapes");
                   }
                 },
             },
             parameters_);
  if (standardizer_) {
    for (std::size_t j = 0; j < dim_; ++j) {
      if (!std::isfinite(standardizer_->mean[j]) || !(standardizer_->scale[j] > 0.0)) {
        bad("invalid standardizer entry");
      }
    }
  }
}

ClassDistribution TrainedModel::predict_proba(const FeatureVector& x) const {
  if (x.kind != feature_kind_) {
    fail(ErrorCode::InvalidInput, "model expects " + std::string(moodspring::to_string(feature_kind_)) +
                                      " features, got " + std::string(moodspring::to_string(x.kind)));
  }
  return predict_proba(x.values);
}

ClassDistribution TrainedModel::predict_proba(std::span<const double> raw) const {
  if (raw.size() != dim_) {
    fail(ErrorCode::InvalidInput, "feature dimension " + std::to_string(raw.size()) +
                                      " does not match model dimension " + std::to_string(dim_));
  }
  const std::size_t C = classes_.size();
  std::vector<double> x(raw.begin(), raw.end());
  if (standardizer_) standardizer_->apply(raw, x);

  ClassDistribution out;
  out.probs.assign(C, 0.0);
  std::visit(Overloaded{
                 [&](const GaussianNbParams& p) {
                   for (std::size_t c = 0; c < C; ++c) {
                     double lp = std::log(p.priors[c]);
                     for (std::size_t j = 0; j < dim_; ++j) {
                       const double var = p.variances(c, j);
                       const double d = x[j] - p.means(c, j);
                       lp -= 0.5 * std::log(2.0 * std::numbers::pi * var) + d * d / (2.0 * var);
                     }
                     out.probs[c] = lp;
                   }
                   normalize_log(out.probs);
                 },
                 [&](const MultinomialNbParams& p) {
                   for (std::size_t c = 0; c < C; ++c) {
                     double lp = std::log(p.priors[c]);
                     for (std::size_t j = 0; j < dim_; ++j) {
                       if (x[j] != 0.0) lp += x[j] * p.log_likelihoods(c, j);
                     }
                     out.probs[c] = lp;
                   }
                   normalize_log(out.probs);
                 },
                 [&](const KnnParams& p) {
                   const auto dist = squared_distances(p.points, x);
                   const auto neighbors = nearest(dist, p.k);
                   std::vector<double> votes(C, 0.0);
                   for (std::size_t i : neighbors) votes[p.labels[i]] += 1.0;
                   const double denom = static_cast<double>(neighbors.size() + C);
                   for (std::size_t c = 0; c < C; ++c) out.probs[c] = (votes[c] + 1.0) / denom;
                 },
                 [&](const LinearSvmParams& p) {
                   for (std::size_t c = 0; c < C; ++c) {
                     double margin = p.bias[c];
                     for (std::size_t j = 0; j < dim_; ++j) margin += p.weights(c, j) * x[j];
                     out.probs[c] = margin;
                   }
                   normalize_log(out.probs);
                 },
             },
             parameters_);
  return out;
}

json TrainedModel::to_json() const {
  json params = std::visit(
      Overloaded{
          [](const GaussianNbParams& p) -> json {
            return {{"priors", p.priors}, {"means", flatten(p.means)}, {"variances", flatten(p.variances)}};
          },
          [](const MultinomialNbParams& p) -> json {
            return {{"priors", p.priors}, {"log_likelihoods", flatten(p.log_likelihoods)}, {"alpha", p.alpha}};
          },
          [](const KnnParams& p) -> json {
            return {{"k", p.k}, {"points", flatten(p.points)}, {"labels", p.labels}};
          },
          [](const LinearSvmParams& p) -> json {
            return {{"weights", flatten(p.weights)}, {"bias", p.bias}, {"lambda", p.lambda}, {"epochs", p.epochs}};
          },
      },
      parameters_);
  return {{"schema_version", kSchemaVersion},
          {"artifact", "classifier"},
          {"kind", to_string(kind_)},
          {"classes", classes_},
          {"dim", dim_},
          {"feature_kind", moodspring::to_string(feature_kind_)},
          {"standardizer", standardizer_json(standardizer_)},
          {"parameters", std::move(params)},
          {"training", {{"seed", seed_}}}};
}

TrainedModel TrainedModel::from_json(const json& j) {
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kSchemaVersion) {
      fail(ErrorCode::FormatError, "unsupported classifier schema_version " + std::to_string(version) +
                                       " (this build reads version " + std::to_string(kSchemaVersion) + ")");
    }
    if (j.at("artifact").get<std::string>() != "classifier") {
      fail(ErrorCode::FormatError, "artifact is not a classifier");
    }
    const ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
    auto classes = j.at("classes").get<std::vector<std::string>>();
    const auto dim = j.at("dim").get<std::size_t>();
    const std::size_t C = classes.size();
    const FeatureKind feature_kind = parse_feature_kind(j.at("feature_kind").get<std::string>());

    std::optional<Standardizer> standardizer;
    if (const auto& s = j.at("standardizer"); !s.is_null()) {
      standardizer = Standardizer{s.at("mean").get<std::vector<double>>(),
                                  s.at("scale").get<std::vector<double>>()};
    }

    const json& p = j.at("parameters");
    const auto vec = [&](const char* key) { return p.at(key).get<std::vector<double>>(); };
    Parameters params;
    switch (kind) {
      case ModelKind::GaussianNb:
        params = GaussianNbParams{vec("priors"), unflatten(vec("means"), C, dim, "means"),
                                  unflatten(vec("variances"), C, dim, "variances")};
        break;
      case ModelKind::MultinomialNb:
        params = MultinomialNbParams{vec("priors"), unflatten(vec("log_likelihoods"), C, dim, "log_likelihoods"),
                                     p.at("alpha").get<double>()};
        break;
      case ModelKind::Knn: {
        auto labels = p.at("labels").get<std::vector<std::size_t>>();
        params = KnnParams{unflatten(vec("points"), labels.size(), dim, "points"), labels,
                           p.at("k").get<std::size_t>()};
        break;
      }
      case ModelKind::LinearSvm:
        params = LinearSvmParams{unflatten(vec("weights"), C, dim, "weights"), vec("bias"),
                                 p.at("lambda").get<double>(), p.at("epochs").get<int>()};
        break;
    }
    const auto seed = j.at("training").at("seed").get<std::uint64_t>();
    return TrainedModel(kind, std::move(classes), dim, feature_kind, std::move(standardizer),
                        std::move(params), seed);
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, std::string("classifier artifact: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::FormatError) throw;
    fail(ErrorCode::FormatError, std::string("classifier artifact: ") + e.what());
  }
}

TrainedModel train(ModelKind kind, std::span<const FeatureVector> xs,
                   std::span<const std::size_t> labels, std::vector<std::string> classes,
                   const Hyperparams& hp, std::uint64_t seed) {
  const std::size_t C = classes.size();
  if (C < 2) fail(ErrorCode::InvalidInput, "train: need at least two classes");
  if (xs.empty()) fail(ErrorCode::InsufficientData, "train: empty dataset");
  if (xs.size() != labels.size()) fail(ErrorCode::InvalidInput, "train: features/labels length mismatch");
  const std::size_t dim = xs.front().dim();
  const FeatureKind feature_kind = xs.front().kind;
  if (dim == 0) fail(ErrorCode::InvalidInput, "train: zero-dimensional features");
  for (const auto& x : xs) {
    if (x.dim() != dim) fail(ErrorCode::InvalidInput, "train: inconsistent feature dimensions");
    if (x.kind != feature_kind) fail(ErrorCode::InvalidInput, "train: mixed feature kinds");
    for (double v : x.values) {
      if (!std::isfinite(v)) fail(ErrorCode::InvalidInput, "train: non-finite feature value");
    }
  }
  for (std::size_t y : labels) {
    if (y >= C) fail(ErrorCode::InvalidInput, "train: label index out of range");
  }
  const auto counts = class_counts(labels, C);
  for (std::size_t c = 0; c < C; ++c) {
    if (counts[c] == 0) fail(ErrorCode::InsufficientData, "train: no examples for class '" + classes[c] + "'");
  }

  if (kind == ModelKind::MultinomialNb) {
    for (const auto& x : xs) {
      for (double v : x.values) {
        if (v < 0.0) fail(ErrorCode::InvalidInput, "multinomial-nb requires non-negative features");
      }
    }
    auto params = fit_multinomial(xs, labels, C, dim, hp);
    return TrainedModel(kind, std::move(classes), dim, feature_kind, std::nullopt, std::move(params), seed);
  }

  Standardizer standardizer = Standardizer::fit(xs);
  std::vector<std::vector<double>> zs;
  zs.reserve(xs.size());
  for (const auto& x : xs) zs.push_back(standardizer.apply(x.values));

  Parameters params;
  switch (kind) {
    case ModelKind::GaussianNb:
      params = fit_gaussian(zs, labels, C, dim, hp);
      break;
    case ModelKind::Knn: {
      if (hp.k == 0) fail(ErrorCode::InvalidInput, "knn: k must be positive");
      Matrix points(zs.size(), dim);
      for (std::size_t i = 0; i < zs.size(); ++i) std::copy(zs[i].begin(), zs[i].end(), points.row(i).begin());
      params = KnnParams{std::move(points), std::vector<std::size_t>(labels.begin(), labels.end()), hp.k};
      break;
    }
    case ModelKind::LinearSvm:
      if (!(hp.svm_lambda > 0.0) || hp.svm_epochs <= 0) {
        fail(ErrorCode::InvalidInput, "linear-svm: lambda and epochs must be positive");
      }
      params = fit_svm(zs, labels, C, dim, hp, seed);
      break;
    case ModelKind::MultinomialNb:
      break;
  }
  return TrainedModel(kind, std::move(classes), dim, feature_kind, std::move(standardizer),
                      std::move(params), seed);
}

std::string save(const TrainedModel& model) { return model.to_json().dump(2) + "\n"; }

TrainedModel load(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, std::string("classifier artifact is not valid JSON: ") + e.what());
  }
  return TrainedModel::from_json(j);
}

}  // namespace moodspring::models
