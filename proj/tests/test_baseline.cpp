#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "biobridge/baseline.hpp"
#include "biobridge/metrics.hpp"
#include "doctest.h"

using namespace biobridge;

namespace {

std::vector<PIRecord> tiny_corpus() {
  return {{"a", "fever cough", 1},
          {"b", "fever rash", 0},
          {"c", "rash", 0}};
}

double dense_dot(const SparseVec& v, std::size_t i) {
  for (std::size_t k = 0; k < v.idx.size(); ++k)
    if (v.idx[k] == i) return v.val[k];
  return 0.0;
}

}  // namespace

TEST_CASE("idf uses the smoothed formula") {
  const auto model = TfidfModel::fit(tiny_corpus());
  CHECK(model.vocab_size() == 3);  // cough, fever, rash
  // N = 3; df(fever)=2, df(rash)=2, df(cough)=1
  CHECK(model.idf("fever") ==
        doctest::Approx(std::log(4.0 / 3.0) + 1.0).epsilon(1e-15));
  CHECK(model.idf("cough") ==
        doctest::Approx(std::log(4.0 / 2.0) + 1.0).epsilon(1e-15));
  CHECK_THROWS_AS(model.idf("absent"), std::out_of_range);
}

TEST_CASE("df counts documents, not occurrences") {
  const auto model = TfidfModel::fit({{"a", "fever fever fever", 1},
                                      {"b", "cough", 0}});
  CHECK(model.idf("fever") == model.idf("cough"));
}

TEST_CASE("transform is L2-normalized and skips unseen terms") {
  const auto model = TfidfModel::fit(tiny_corpus());
  const auto v = model.transform("fever cough zebra");
  double norm2 = 0.0;
  for (double x : v.val) norm2 += x * x;
  CHECK(norm2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(v.idx.size() == 2);

  // tf weighting: repeated term scales linearly before normalization
  const auto rep = model.transform("fever fever cough");
  const double ratio = dense_dot(rep, 1) / dense_dot(v, 1);  // fever idx
  const double cough_ratio = dense_dot(rep, 0) / dense_dot(v, 0);
  CHECK(ratio / cough_ratio == doctest::Approx(2.0).epsilon(1e-12));

  const auto none = model.transform("zebra lion");
  CHECK(none.idx.empty());
}

TEST_CASE("logreg analytic gradient matches finite differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const std::size_t n_features = 6, n = 12;
  std::vector<SparseVec> x(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < n_features; ++f)
      if (rng() % 2) {
        x[i].idx.push_back(f);
        x[i].val.push_back(uni(rng));
      }
    y[i] = static_cast<int>(rng() % 2);
  }
  LogRegModel model;
  model.weights.resize(n_features);
  for (double& w : model.weights) w = uni(rng) * 0.5;
  model.bias = 0.3;

  double loss;
  std::vector<double> gw;
  double gb;
  logreg_loss_grad(x, y, model, 0.01, &loss, &gw, &gb);

  const double h = 1e-6;
  for (std::size_t f = 0; f < n_features; ++f) {
    auto m2 = model;
    m2.weights[f] += h;
    double lp;
    logreg_loss_grad(x, y, m2, 0.01, &lp, nullptr, nullptr);
    m2.weights[f] -= 2 * h;
    double lm;
    logreg_loss_grad(x, y, m2, 0.01, &lm, nullptr, nullptr);
    const double fd = (lp - lm) / (2 * h);
    REQUIRE(gw[f] == doctest::Approx(fd).epsilon(1e-5));
  }
  auto m2 = model;
  m2.bias += h;
  double lp;
  logreg_loss_grad(x, y, m2, 0.01, &lp, nullptr, nullptr);
  m2.bias -= 2 * h;
  double lm;
  logreg_loss_grad(x, y, m2, 0.01, &lm, nullptr, nullptr);
  CHECK(gb == doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-5));
}

TEST_CASE("logreg separates a linearly separable set") {
  // feature 0 perfectly predicts the label
  std::vector<SparseVec> x;
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    SparseVec v;
    v.idx = {0, 1};
    v.val = {i % 2 ? 1.0 : -1.0, (i % 5) * 0.1};
    x.push_back(v);
    y.push_back(i % 2);
  }
  const auto model = train_logreg(x, y, 2, 1e-4, 2000, 1.0, 0);
  const auto probs = predict_logreg(x, model);
  PredictionSet p{probs, y};
  CHECK(auroc(p) == 1.0);
  CHECK(f1_at_threshold(p, 0.5).f1 == 1.0);
}

TEST_CASE("training is deterministic") {
  const auto recs = tiny_corpus();
  const auto tfidf = TfidfModel::fit(recs);
  std::vector<SparseVec> x;
  std::vector<int> y;
  for (const auto& r : recs) {
    x.push_back(tfidf.transform(r.text));
    y.push_back(r.label);
  }
  const auto a = train_logreg(x, y, tfidf.vocab_size(), 1e-4, 300, 1.0, 9);
  const auto b = train_logreg(x, y, tfidf.vocab_size(), 1e-4, 300, 1.0, 9);
  REQUIRE(a.weights.size() == b.weights.size());
  for (std::size_t i = 0; i < a.weights.size(); ++i)
    REQUIRE(a.weights[i] == b.weights[i]);
  CHECK(a.bias == b.bias);
}

TEST_CASE("predict validates feature shapes") {
  LogRegModel model;
  model.weights = {0.5, -0.5};
  SparseVec bad;
  bad.idx = {5};
  bad.val = {1.0};
  CHECK_THROWS_AS(predict_logreg({bad}, model), std::invalid_argument);

  SparseVec ok;
  ok.idx = {0};
  ok.val = {2.0};
  const auto p = predict_logreg({ok}, model);
  REQUIRE(p.size() == 1);
  CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-15));
}
