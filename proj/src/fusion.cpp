#include "moodspring/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "moodspring/error.hpp"
#include "moodspring/valence.hpp"

namespace moodspring::fusion {
namespace {

using nlohmann::json;

constexpr double kSoftAbsEps = 1e-8;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// -[y log s + (1-y) log(1-s)] with s = sigmoid(z), evaluated without cancellation.
double cross_entropy(double z, double y) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - y * z;
}

double logit(std::span<const double> w, double b, std::span<const double> p) {
  double z = b;
  for (std::size_t i = 0; i < w.size(); ++i) z += w[i] * p[i];
  return z;
}

struct GroupCounts {
  std::size_t a = 0;
  std::size_t b = 0;
  bool certified() const { return a >= 2 && b >= 2; }
};

GroupCounts validate(std::span<const double> w, std::span<const FusionInput> batch, double lambda,
                     double delta) {
  if (batch.empty()) fail(ErrorCode::InvalidInput, "fusion: empty batch");
  if (!(lambda >= 0.0)) fail(ErrorCode::InvalidInput, "fusion: lambda must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) fail(ErrorCode::InvalidInput, "fusion: delta must lie in (0,1)");
  GroupCounts counts;
  for (const auto& s : batch) {
    if (s.p.size() != w.size()) {
      fail(ErrorCode::InvalidInput, "fusion: sample has " + std::to_string(s.p.size()) +
                                        " inputs, model expects " + std::to_string(w.size()));
    }
    for (double v : s.p) {
      if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::InvalidInput, "fusion: inputs must lie in [0,1]");
    }
    if (!s.label) fail(ErrorCode::InvalidInput, "fusion: training sample without label");
    (s.group == Group::A ? counts.a : counts.b) += 1;
  }
  if (lambda > 0.0 && !counts.certified()) {
    fail(ErrorCode::InsufficientGroups,
         "fusion: fairness term needs at least 2 samples in each group (A=" + std::to_string(counts.a) +
             ", B=" + std::to_string(counts.b) + ")");
  }
  return counts;
}

struct Forward {
  std::vector<double> z;
  std::vector<double> ce;
  double mean_a = 0.0;
  double mean_b = 0.0;
};

Forward forward(std::span<const double> w, double b, std::span<const FusionInput> batch,
                const GroupCounts& counts) {
  Forward f;
  f.z.resize(batch.size());
  f.ce.resize(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    f.z[i] = logit(w, b, batch[i].p);
    f.ce[i] = cross_entropy(f.z[i], *batch[i].label ? 1.0 : 0.0);
    (batch[i].group == Group::A ? f.mean_a : f.mean_b) += f.ce[i];
  }
  if (counts.a > 0) f.mean_a /= static_cast<double>(counts.a);
  if (counts.b > 0) f.mean_b /= static_cast<double>(counts.b);
  return f;
}

}  // namespace

json FusionModel::to_json() const {
  return {{"schema_version", kSchemaVersion},
          {"artifact", "fusion"},
          {"w", w},
          {"b", b},
          {"lambda", lambda},
          {"delta", delta},
          {"training", {{"lr", lr}, {"epochs", epochs}, {"seed", seed}}}};
}

FusionModel FusionModel::from_json(const json& j) {
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kSchemaVersion) {
      fail(ErrorCode::FormatError, "unsupported fusion schema_version " + std::to_string(version) +
                                       " (this build reads version " + std::to_string(kSchemaVersion) + ")");
    }
    if (j.at("artifact").get<std::string>() != "fusion") fail(ErrorCode::FormatError, "artifact is not a fusion model");
    FusionModel m;
    m.w = j.at("w").get<std::vector<double>>();
    m.b = j.at("b").get<double>();
    m.lambda = j.at("lambda").get<double>();
    m.delta = j.at("delta").get<double>();
    const auto& t = j.at("training");
    m.lr = t.at("lr").get<double>();
    m.epochs = t.at("epochs").get<int>();
    m.seed = t.at("seed").get<std::uint64_t>();
    if (m.w.empty()) fail(ErrorCode::FormatError, "fusion model has no inputs");
    for (double v : m.w) {
      if (!std::isfinite(v)) fail(ErrorCode::FormatError, "fusion weights must be finite");
    }
    if (!std::isfinite(m.b)) fail(ErrorCode::FormatError, "fusion bias must be finite");
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, std::string("fusion artifact: ") + e.what());
  }
}

Valence majority_vote(std::span<const Valence> decisions, std::span<const double> probs) {
  if (decisions.empty()) fail(ErrorCode::InvalidInput, "majority_vote: no decisions");
  if (decisions.size() != probs.size()) fail(ErrorCode::InvalidInput, "majority_vote: length mismatch");
  const auto pleasant = static_cast<std::size_t>(std::count(decisions.begin(), decisions.end(), Valence::Pleasant));
  const std::size_t unpleasant = decisions.size() - pleasant;
  if (pleasant != unpleasant) return pleasant > unpleasant ? Valence::Pleasant : Valence::Unpleasant;
  double mean = 0.0;
  for (double p : probs) mean += p;
  return valence::valence_class(mean / static_cast<double>(probs.size()));
}

double fuse(const FusionModel& model, std::span<const double> p) {
  if (p.size() != model.w.size()) {
    fail(ErrorCode::InvalidInput, "fuse: got " + std::to_string(p.size()) + " inputs, model expects " +
                                      std::to_string(model.w.size()));
  }
  return sigmoid(logit(model.w, model.b, p));
}

LossTerms loss(std::span<const double> w, double b, std::span<const FusionInput> batch, double lambda,
               double delta) {
  const GroupCounts counts = validate(w, batch, lambda, delta);
  const Forward f = forward(w, b, batch, counts);

  LossTerms t;
  for (double c : f.ce) t.cross_entropy += c;
  t.cross_entropy /= static_cast<double>(batch.size());

  if (counts.certified()) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (batch[i].group == Group::A) {
        t.variance_a += (f.ce[i] - f.mean_a) * (f.ce[i] - f.mean_a);
      } else {
        t.variance_b += (f.ce[i] - f.mean_b) * (f.ce[i] - f.mean_b);
      }
    }
    t.variance_a /= static_cast<double>(counts.a);
    t.variance_b /= static_cast<double>(counts.b);
    const double log_term = 2.0 * std::log(2.0 / delta);
    t.gap = f.mean_a - f.mean_b;
    const double variance_terms = std::sqrt(t.variance_a * log_term / static_cast<double>(counts.a)) +
                                  std::sqrt(t.variance_b * log_term / static_cast<double>(counts.b));
    t.disparity = std::sqrt(t.gap * t.gap + kSoftAbsEps) + variance_terms;
    t.variance_floor = std::sqrt(kSoftAbsEps) + variance_terms;
  }
  t.total = t.cross_entropy + lambda * t.disparity;
  if (!std::isfinite(t.total)) fail(ErrorCode::NumericalError, "fusion: non-finite loss");
  return t;
}

Gradient gradient(std::span<const double> w, double b, std::span<const FusionInput> batch, double lambda,
                  double delta) {
  const GroupCounts counts = validate(w, batch, lambda, delta);
  const Forward f = forward(w, b, batch, counts);
  const std::size_t M = w.size();
  const auto n = static_cast<double>(batch.size());

  // dL/dz_i, accumulated from every term of the objective.
  std::vector<double> dz(batch.size(), 0.0);
  std::vector<double> residual(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    residual[i] = sigmoid(f.z[i]) - (*batch[i].label ? 1.0 : 0.0);
    dz[i] = residual[i] / n;
  }

  if (lambda > 0.0 && counts.certified()) {
    const auto na = static_cast<double>(counts.a);
    const auto nb = static_cast<double>(counts.b);
    double var_a = 0.0;
    double var_b = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (batch[i].group == Group::A) {
        var_a += (f.ce[i] - f.mean_a) * (f.ce[i] - f.mean_a);
      } else {
        var_b += (f.ce[i] - f.mean_b) * (f.ce[i] - f.mean_b);
      }
    }
    var_a /= na;
    var_b /= nb;
    const double log_term = 2.0 * std::log(2.0 / delta);
    const double gap = f.mean_a - f.mean_b;
    const double d_softabs = gap / std::sqrt(gap * gap + kSoftAbsEps);
    const double term_a = std::sqrt(var_a * log_term / na);
    const double term_b = std::sqrt(var_b * log_term / nb);
    // d sqrt(c V)/dV = c / (2 sqrt(c V)); dV/dz_i = 2 (ce_i - mean) residual_i / n_g
    const double dvar_a = term_a > 0.0 ? (log_term / na) / (2.0 * term_a) : 0.0;
    const double dvar_b = term_b > 0.0 ? (log_term / nb) / (2.0 * term_b) : 0.0;

    for (std::size_t i = 0; i < batch.size(); ++i) {
      double d = 0.0;
      if (batch[i].group == Group::A) {
        d += d_softabs * residual[i] / na;
        d += dvar_a * 2.0 * (f.ce[i] - f.mean_a) * residual[i] / na;
      } else {
        d -= d_softabs * residual[i] / nb;
        d += dvar_b * 2.0 * (f.ce[i] - f.mean_b) * residual[i] / nb;
      }
      dz[i] += lambda * d;
    }
  }

  Gradient g{std::vector<double>(M, 0.0), 0.0};
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t m = 0; m < M; ++m) g.dw[m] += dz[i] * batch[i].p[m];
    g.db += dz[i];
  }
  for (double v : g.dw) {
    if (!std::isfinite(v)) fail(ErrorCode::NumericalError, "fusion: non-finite gradient");
  }
  if (!std::isfinite(g.db)) fail(ErrorCode::NumericalError, "fusion: non-finite gradient");
  return g;
}

TrainingTrace train_fusion_traced(std::span<const FusionInput> data, const TrainOptions& opts) {
  if (data.empty()) fail(ErrorCode::InvalidInput, "train_fusion: empty dataset");
  if (!(opts.lr > 0.0) || opts.epochs < 0) fail(ErrorCode::InvalidInput, "train_fusion: lr > 0 and epochs >= 0 required");
  const std::size_t M = data.front().p.size();
  if (M == 0) fail(ErrorCode::InvalidInput, "train_fusion: samples carry no classifier outputs");

  std::vector<double> w(M, 0.0);
  double b = 0.0;
  TrainingTrace trace;
  trace.model = FusionModel{w, b, opts.lambda, opts.delta, opts.lr, opts.epochs, opts.seed};
  double best = std::numeric_limits<double>::infinity();

  const auto visit = [&] {
    const double value = loss(w, b, data, opts.lambda, opts.delta).total;
    trace.loss_history.push_back(value);
    if (value < best) {
      best = value;
      trace.model.w = w;
      trace.model.b = b;
    }
  };

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    visit();
    const Gradient g = gradient(w, b, data, opts.lambda, opts.delta);
    for (std::size_t m = 0; m < M; ++m) w[m] -= opts.lr * g.dw[m];
    b -= opts.lr * g.db;
  }
  visit();
  return trace;
}

FusionModel train_fusion(std::span<const FusionInput> data, const TrainOptions& opts) {
  return train_fusion_traced(data, opts).model;
}

json DisparityReport::to_json() const {
  return {{"acc_A", acc_a},   {"acc_B", acc_b},       {"point", point},       {"lower", lower},
          {"upper", upper},   {"radius_A", radius_a}, {"radius_B", radius_b}, {"n_A", n_a},
          {"n_B", n_b},       {"delta", delta}};
}

double bernstein_radius(double sample_variance, std::size_t n, double delta) {
  if (n < 2) fail(ErrorCode::InsufficientData, "Bernstein radius needs n >= 2");
  if (!(delta > 0.0 && delta < 1.0)) fail(ErrorCode::InvalidInput, "delta must lie in (0,1)");
  const double log_term = std::log(2.0 / delta);
  const auto nd = static_cast<double>(n);
  return std::sqrt(2.0 * sample_variance * log_term / nd) + 7.0 * log_term / (3.0 * (nd - 1.0));
}

DisparityReport bernstein_disparity(std::span<const int> correct_a, std::span<const int> correct_b,
                                    double delta) {
  if (correct_a.size() < 2 || correct_b.size() < 2) {
    fail(ErrorCode::InsufficientData, "bernstein_disparity: each group needs n >= 2 (A=" +
                                          std::to_string(correct_a.size()) +
                                          ", B=" + std::to_string(correct_b.size()) + ")");
  }
  const auto stats = [](std::span<const int> xs, double& mean, double& var) {
    double sum = 0.0;
    for (int x : xs) {
      if (x != 0 && x != 1) fail(ErrorCode::InvalidInput, "correctness values must be 0 or 1");
      sum += x;
    }
    const auto n = static_cast<double>(xs.size());
    mean = sum / n;
    double sq = 0.0;
    for (int x : xs) sq += (x - mean) * (x - mean);
    var = sq / (n - 1.0);
  };

  DisparityReport r;
  double var_a = 0.0;
  double var_b = 0.0;
  stats(correct_a, r.acc_a, var_a);
  stats(correct_b, r.acc_b, var_b);
  r.n_a = correct_a.size();
  r.n_b = correct_b.size();
  r.delta = delta;
  r.radius_a = bernstein_radius(var_a, r.n_a, delta);
  r.radius_b = bernstein_radius(var_b, r.n_b, delta);
  r.point = std::abs(r.acc_a - r.acc_b);
  r.upper = r.point + r.radius_a + r.radius_b;
  r.lower = std::max(0.0, r.point - r.radius_a - r.radius_b);
  return r;
}

}  // namespace moodspring::fusion
