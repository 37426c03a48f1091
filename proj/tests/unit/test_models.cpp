#include <doctest.h>

#include <cmath>
#include <numeric>
#include <variant>

#include <nlohmann/json.hpp>

#include "moodspring/error.hpp"
#include "moodspring/models.hpp"
#include "moodspring/rng.hpp"
#include "support/oracles.hpp"

using namespace moodspring;
using namespace moodspring::models;

namespace {

std::vector<FeatureVector> to_features(const std::vector<std::vector<double>>& xs,
                                       FeatureKind kind = FeatureKind::MfccPooled) {
  std::vector<FeatureVector> out;
  for (const auto& x : xs) out.push_back({x, kind});
  return out;
}

struct Toy {
  std::vector<std::vector<double>> xs;
  std::vector<std::size_t> ys;
};

Toy random_toy(std::uint64_t seed, std::size_t classes = 2) {
  Rng rng(seed);
  const std::size_t dim = 1 + rng.below(5);
  const std::size_t n = 6 + rng.below(15);
  Toy t;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = i < classes ? i : rng.below(classes);
    std::vector<double> x(dim);
    for (auto& v : x) v = (rng.uniform() - 0.5) * 4.0 + static_cast<double>(y);
    t.xs.push_back(x);
    t.ys.push_back(y);
  }
  return t;
}

void check_distribution(const ClassDistribution& d) {
  double sum = 0.0;
  for (double p : d.probs) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    sum += p;
  }
  CHECK(std::abs(sum - 1.0) <= 1e-9);
}

const std::vector<std::string> kAB = {"A", "B"};

}  // namespace

TEST_CASE("gaussian-nb: one-dimensional hand example") {
  const auto xs = to_features({{0.0}, {1.0}, {4.0}, {5.0}});
  const std::vector<std::size_t> ys = {0, 0, 1, 1};
  const auto model = train(ModelKind::GaussianNb, xs, ys, kAB);
  const auto& p = std::get<GaussianNbParams>(model.parameters());
  const auto& s = *model.standardizer();

  CHECK(p.priors == std::vector<double>{0.5, 0.5});
  CHECK(p.means(0, 0) * s.scale[0] + s.mean[0] == doctest::Approx(0.5));
  CHECK(p.means(1, 0) * s.scale[0] + s.mean[0] == doctest::Approx(4.5));
  CHECK(p.variances(0, 0) * s.scale[0] * s.scale[0] == doctest::Approx(0.25).epsilon(1e-8));
  CHECK(p.variances(1, 0) * s.scale[0] * s.scale[0] == doctest::Approx(0.25).epsilon(1e-8));

  const auto mid = model.predict_proba(std::vector<double>{2.5});
  CHECK(mid.probs[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(mid.probs[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(mid.argmax() == 0);  // tie resolves to the lowest class index

  const auto at_a = model.predict_proba(std::vector<double>{0.5});
  CHECK(std::abs(at_a.probs[0] - 1.0 / (1.0 + std::exp(-32.0))) <= 1e-9);
}

TEST_CASE("gaussian-nb: posteriors equal brute-force Bayes rule") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto toy = random_toy(seed);
    const auto model = train(ModelKind::GaussianNb, to_features(toy.xs), toy.ys, kAB);
    Rng rng(seed + 100);
    for (int q = 0; q < 5; ++q) {
      std::vector<double> query(toy.xs[0].size());
      for (auto& v : query) v = (rng.uniform() - 0.5) * 3.0 + 0.5;
      const auto got = model.predict_proba(query);
      const auto want = testing::brute_force_gnb_posterior(toy.xs, toy.ys, 2, query);
      check_distribution(got);
      for (std::size_t c = 0; c < 2; ++c) CHECK(std::abs(got.probs[c] - want[c]) <= 1e-9);
    }
  }
}

TEST_CASE("multinomial-nb: Laplace smoothing by hand") {
  const auto xs = to_features({{2, 0}, {1, 1}, {0, 3}}, FeatureKind::Tfidf);
  const std::vector<std::size_t> ys = {0, 0, 1};
  const auto model = train(ModelKind::MultinomialNb, xs, ys, kAB);
  CHECK_FALSE(model.standardizer().has_value());
  const auto& p = std::get<MultinomialNbParams>(model.parameters());
  // class 0 counts (3, 1), total 4: theta = (4/6, 2/6); class 1 counts (0, 3): (1/5, 4/5)
  CHECK(p.log_likelihoods(0, 0) == doctest::Approx(std::log(4.0 / 6.0)));
  CHECK(p.log_likelihoods(1, 1) == doctest::Approx(std::log(4.0 / 5.0)));

  const auto d = model.predict_proba(FeatureVector{{1, 1}, FeatureKind::Tfidf});
  const double j0 = (2.0 / 3.0) * (4.0 / 6.0) * (2.0 / 6.0);
  const double j1 = (1.0 / 3.0) * (1.0 / 5.0) * (4.0 / 5.0);
  CHECK(d.probs[0] == doctest::Approx(j0 / (j0 + j1)).epsilon(1e-12));
  check_distribution(d);

  const auto neg = to_features({{1, -1}, {0, 1}}, FeatureKind::Tfidf);
  try {
    train(ModelKind::MultinomialNb, neg, std::vector<std::size_t>{0, 1}, kAB);
    FAIL("expected InvalidInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidInput);
  }
}

TEST_CASE("knn: memorisation and smoothed votes") {
  const auto toy = random_toy(42, 3);
  Hyperparams hp;
  hp.k = 1;
  const auto model = train(ModelKind::Knn, to_features(toy.xs), toy.ys, {"x", "y", "z"}, hp);
  for (std::size_t i = 0; i < toy.xs.size(); ++i) {
    const auto d = model.predict_proba(toy.xs[i]);
    CHECK(d.argmax() == toy.ys[i]);
    CHECK(d.probs[toy.ys[i]] == doctest::Approx(2.0 / 4.0));
  }

  // Query at 0.1: neighbours 0 (A), 0.3 (A), 1.0 (B) -> (2+1)/(3+2), (1+1)/(3+2)
  hp.k = 3;
  const auto line = train(ModelKind::Knn, to_features({{0.0}, {0.3}, {1.0}, {5.0}, {6.0}}),
                          std::vector<std::size_t>{0, 0, 1, 1, 1}, kAB, hp);
  const auto& s = *line.standardizer();
  CHECK(s.mean[0] == doctest::Approx(2.46));
  const auto d = line.predict_proba(std::vector<double>{0.1});
  CHECK(d.probs[0] == doctest::Approx(0.6));
  CHECK(d.probs[1] == doctest::Approx(0.4));
}

TEST_CASE("knn: matches exhaustive search and ignores training order") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto toy = random_toy(seed + 1000, 3);
    Hyperparams hp;
    hp.k = 1 + seed % 5;
    const auto model = train(ModelKind::Knn, to_features(toy.xs), toy.ys, {"x", "y", "z"}, hp);

    // Oracle standardizes with its own arithmetic.
    const std::size_t dim = toy.xs[0].size();
    std::vector<double> mu(dim, 0.0);
    std::vector<double> sd(dim, 0.0);
    for (const auto& x : toy.xs) {
      for (std::size_t j = 0; j < dim; ++j) mu[j] += x[j] / static_cast<double>(toy.xs.size());
    }
    for (const auto& x : toy.xs) {
      for (std::size_t j = 0; j < dim; ++j) sd[j] += (x[j] - mu[j]) * (x[j] - mu[j]) / static_cast<double>(toy.xs.size());
    }
    for (auto& v : sd) v = std::sqrt(v);
    std::vector<std::vector<double>> zs;
    for (const auto& x : toy.xs) {
      std::vector<double> z(dim);
      for (std::size_t j = 0; j < dim; ++j) z[j] = (x[j] - mu[j]) / sd[j];
      zs.push_back(z);
    }

    Rng rng(seed);
    std::vector<double> query(dim);
    for (auto& v : query) v = rng.uniform() * 4.0 - 1.5;
    std::vector<double> zq(dim);
    for (std::size_t j = 0; j < dim; ++j) zq[j] = (query[j] - mu[j]) / sd[j];

    const auto got = model.predict_proba(query);
    const auto want = testing::exhaustive_knn(zs, toy.ys, 3, hp.k, zq);
    check_distribution(got);
    for (std::size_t c = 0; c < 3; ++c) CHECK(got.probs[c] == doctest::Approx(want[c]).epsilon(1e-12));

    std::vector<std::size_t> perm(toy.xs.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(perm));
    std::vector<std::vector<double>> pxs;
    std::vector<std::size_t> pys;
    for (std::size_t i : perm) {
      pxs.push_back(toy.xs[i]);
      pys.push_back(toy.ys[i]);
    }
    const auto permuted = train(ModelKind::Knn, to_features(pxs), pys, {"x", "y", "z"}, hp);
    CHECK(permuted.predict_proba(query).probs == got.probs);
  }
}

TEST_CASE("knn: parallel distance kernel equals the serial reference") {
  Rng rng(77);
  Matrix points(3000, 52);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    for (auto& v : points.row(i)) v = rng.uniform();
  }
  std::vector<double> q(52);
  for (auto& v : q) v = rng.uniform();
  CHECK(squared_distances(points, q) == squared_distances_serial(points, q));
  const std::vector<double> d = {3.0, 1.0, 1.0, 0.5, 1.0};
  CHECK(nearest(d, 3) == std::vector<std::size_t>{3, 1, 2});
  CHECK(nearest(d, 10).size() == 5);
}

TEST_CASE("linear-svm: separable data is fitted exactly") {
  const auto pair = train(ModelKind::LinearSvm, to_features({{-1.0}, {1.0}}), std::vector<std::size_t>{0, 1}, kAB);
  CHECK(pair.predict_proba(std::vector<double>{-1.0}).argmax() == 0);
  CHECK(pair.predict_proba(std::vector<double>{1.0}).argmax() == 1);

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> xs;
    std::vector<std::size_t> ys;
    for (int i = 0; i < 60; ++i) {
      const std::size_t y = static_cast<std::size_t>(i % 2);
      const double side = y == 1 ? 1.0 : -1.0;
      xs.push_back({side * (0.5 + rng.uniform()), rng.uniform() * 2 - 1, rng.uniform() * 2 - 1});
      ys.push_back(y);
    }
    const auto model = train(ModelKind::LinearSvm, to_features(xs), ys, kAB, {}, seed);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto d = model.predict_proba(xs[i]);
      check_distribution(d);
      CHECK(d.argmax() == ys[i]);
    }
  }
}

TEST_CASE("training errors") {
  const auto xs = to_features({{0.0}, {1.0}});
  try {
    train(ModelKind::GaussianNb, xs, std::vector<std::size_t>{0, 0}, kAB);
    FAIL("expected InsufficientData");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientData);
  }
  const auto model = train(ModelKind::GaussianNb, xs, std::vector<std::size_t>{0, 1}, kAB);
  try {
    model.predict_proba(std::vector<double>{1.0, 2.0});
    FAIL("expected InvalidInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidInput);
  }
  CHECK_THROWS_AS(model.predict_proba(FeatureVector{{1.0}, FeatureKind::Tfidf}), Error);
  CHECK_THROWS_AS(train(ModelKind::Knn, to_features({{0.0}, {1.0, 2.0}}), std::vector<std::size_t>{0, 1}, kAB), Error);
}

TEST_CASE("persistence: round trip keeps predictions bitwise") {
  const auto toy = random_toy(7);
  std::vector<std::vector<double>> counts;
  for (const auto& x : toy.xs) {
    std::vector<double> c;
    for (double v : x) c.push_back(std::floor(std::abs(v) * 3));
    counts.push_back(c);
  }
  for (auto kind : {ModelKind::GaussianNb, ModelKind::MultinomialNb, ModelKind::Knn, ModelKind::LinearSvm}) {
    const auto& data = kind == ModelKind::MultinomialNb ? counts : toy.xs;
    const auto model = train(kind, to_features(data), toy.ys, kAB, {}, 3);
    const auto bytes = save(model);
    const auto back = load(bytes);
    CHECK(save(back) == bytes);
    Rng rng(1);
    for (int q = 0; q < 10; ++q) {
      std::vector<double> x(data[0].size());
      for (auto& v : x) v = std::floor(rng.uniform() * 4);
      CHECK(back.predict_proba(x).probs == model.predict_proba(x).probs);
    }
  }
}

TEST_CASE("persistence: corrupt payloads") {
  const auto model = train(ModelKind::GaussianNb, to_features({{0.0}, {1.0}}), std::vector<std::size_t>{0, 1}, kAB);
  const auto bytes = save(model);
  try {
    load(bytes.substr(0, bytes.size() / 2));
    FAIL("expected FormatError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FormatError);
  }

  auto j = nlohmann::json::parse(bytes);
  j["schema_version"] = 99;
  try {
    load(j.dump());
    FAIL("expected FormatError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FormatError);
    const std::string msg = e.what();
    CHECK(msg.find("99") != std::string::npos);
    CHECK(msg.find("version 1") != std::string::npos);
  }

  j = nlohmann::json::parse(bytes);
  j["parameters"]["means"] = {1.0};
  CHECK_THROWS_AS(load(j.dump()), Error);
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
  const auto toy = random_toy(8, 3);
  for (auto kind : {ModelKind::GaussianNb, ModelKind::Knn, ModelKind::LinearSvm}) {
    const auto a = save(train(kind, to_features(toy.xs), toy.ys, {"x", "y", "z"}, {}, 99));
    const auto b = save(train(kind, to_features(toy.xs), toy.ys, {"x", "y", "z"}, {}, 99));
    CHECK(a == b);
  }
}
