#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <random>

#include "biobridge/metrics.hpp"
#include "doctest.h"

using namespace biobridge;

namespace {

// O(P*N) pairwise AUROC, straight from the definition.
double auroc_brute(const PredictionSet& p) {
  double num = 0.0;
  std::uint64_t pairs = 0;
  for (std::size_t i = 0; i < p.labels.size(); ++i) {
    if (p.labels[i] != 1) continue;
    for (std::size_t j = 0; j < p.labels.size(); ++j) {
      if (p.labels[j] != 0) continue;
      ++pairs;
      if (p.probs[i] > p.probs[j]) num += 1.0;
      else if (p.probs[i] == p.probs[j]) num += 0.5;
    }
  }
  return num / static_cast<double>(pairs);
}

// AP by walking the ranked list in tie groups; each positive in a group
// gets the precision computed at the end of the group.
double auprc_brute(const PredictionSet& p) {
  std::vector<std::size_t> order(p.labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return p.probs[a] > p.probs[b];
  });
  std::uint64_t total_pos = 0;
  for (int y : p.labels) total_pos += static_cast<std::uint64_t>(y);
  double sum = 0.0;
  std::uint64_t tp = 0, seen = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::uint64_t group_pos = 0;
    while (j < order.size() && p.probs[order[j]] == p.probs[order[i]]) {
      group_pos += static_cast<std::uint64_t>(p.labels[order[j]]);
      ++j;
    }
    tp += group_pos;
    seen += j - i;
    sum += static_cast<double>(group_pos) * static_cast<double>(tp) /
           static_cast<double>(seen);
    i = j;
  }
  return sum / static_cast<double>(total_pos);
}

PredictionSet random_set(std::mt19937_64& rng, std::size_t n, bool quantize) {
  PredictionSet p;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    double pr = uni(rng);
    if (quantize) pr = std::floor(pr * 8.0) / 8.0;  // force ties
    p.probs.push_back(pr);
    p.labels.push_back(static_cast<int>(rng() % 2));
  }
  // guarantee both classes
  p.labels[0] = 1;
  p.labels[n - 1] = 0;
  return p;
}

}  // namespace

TEST_CASE("F1 confusion counts on a hand-worked set") {
  // threshold 0.595: predictions {1,0,1,0,1}
  PredictionSet p{{0.9, 0.2, 0.6, 0.59, 0.595}, {1, 1, 0, 0, 1}};
  const auto r = f1_at_threshold(p, 0.595);
  CHECK(r.tp == 2);
  CHECK(r.fp == 1);
  CHECK(r.fn == 1);
  CHECK(r.tn == 1);
  // P = 2/3, R = 2/3, F1 = 2/3
  CHECK(r.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("F1 edge cases") {
  PredictionSet all_neg{{0.1, 0.2}, {0, 0}};
  CHECK(f1_at_threshold(all_neg).f1 == 0.0);  // no predicted, no actual pos

  PredictionSet perfect{{0.99, 0.01}, {1, 0}};
  CHECK(f1_at_threshold(perfect).f1 == 1.0);

  PredictionSet boundary{{0.595}, {1}};
  CHECK(f1_at_threshold(boundary).tp == 1);  // >= is positive

  CHECK_THROWS_AS(f1_at_threshold(PredictionSet{}), std::invalid_argument);
  PredictionSet mismatch{{0.5}, {1, 0}};
  CHECK_THROWS_AS(f1_at_threshold(mismatch), std::invalid_argument);
}

TEST_CASE("AUROC hand-worked values") {
  PredictionSet perfect{{0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}};
  CHECK(auroc(perfect) == 1.0);

  PredictionSet inverted{{0.1, 0.9}, {1, 0}};
  CHECK(auroc(inverted) == 0.0);

  PredictionSet tied{{0.5, 0.5}, {1, 0}};
  CHECK(auroc(tied) == 0.5);

  // 1 pos at 0.7; negs at 0.9, 0.7, 0.3 -> (0 + 0.5 + 1)/3
  PredictionSet mixed{{0.7, 0.9, 0.7, 0.3}, {1, 0, 0, 0}};
  CHECK(auroc(mixed) == doctest::Approx(0.5).epsilon(1e-15));

  PredictionSet one_class{{0.2, 0.4}, {1, 1}};
  CHECK_THROWS_AS(auroc(one_class), std::invalid_argument);
}

TEST_CASE("AUROC matches the brute-force oracle exactly") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = random_set(rng, 2 + rng() % 60, trial % 2 == 0);
    REQUIRE(auroc(p) == auroc_brute(p));
  }
}

TEST_CASE("AUPRC hand-worked values") {
  PredictionSet perfect{{0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}};
  CHECK(auprc(perfect) == 1.0);

  // ranked: pos(0.9), neg(0.8), pos(0.7) -> (1/1 + 2/3)/2
  PredictionSet mixed{{0.9, 0.8, 0.7}, {1, 0, 1}};
  CHECK(auprc(mixed) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-15));

  // all tied: single group, precision = P/N credited to every positive
  PredictionSet tied{{0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}};
  CHECK(auprc(tied) == doctest::Approx(0.5).epsilon(1e-15));

  PredictionSet no_pos{{0.1, 0.2}, {0, 0}};
  CHECK_THROWS_AS(auprc(no_pos), std::invalid_argument);
}

TEST_CASE("AUPRC matches the brute-force oracle") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = random_set(rng, 2 + rng() % 60, trial % 2 == 1);
    REQUIRE(auprc(p) == doctest::Approx(auprc_brute(p)).epsilon(1e-12));
  }
}

TEST_CASE("ranking metrics are invariant to monotone prob transforms") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_set(rng, 30, true);
    PredictionSet q = p;
    for (double& pr : q.probs) pr = 1.0 / (1.0 + std::exp(-(3.0 * pr - 1.0)));
    REQUIRE(auroc(p) == doctest::Approx(auroc(q)).epsilon(1e-12));
    REQUIRE(auprc(p) == doctest::Approx(auprc(q)).epsilon(1e-12));
  }
}

TEST_CASE("AUROC complement symmetry under label flip") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_set(rng, 25, false);
    PredictionSet flipped = p;
    for (int& y : flipped.labels) y = 1 - y;
    REQUIRE(auroc(p) == doctest::Approx(1.0 - auroc(flipped)).epsilon(1e-12));
  }
}

TEST_CASE("Brier score hand values and bounds") {
  PredictionSet p{{1.0, 0.0}, {1, 0}};
  CHECK(brier(p) == 0.0);
  PredictionSet worst{{0.0, 1.0}, {1, 0}};
  CHECK(brier(worst) == 1.0);
  PredictionSet mid{{0.5, 0.5}, {1, 0}};
  CHECK(brier(mid) == 0.25);
  PredictionSet mixed{{0.8, 0.3}, {1, 0}};
  CHECK(brier(mixed) == doctest::Approx((0.04 + 0.09) / 2.0).epsilon(1e-15));
}

TEST_CASE("evaluate handles degenerate class mixes gracefully") {
  PredictionSet one_class{{0.7, 0.2}, {1, 1}};
  const auto rep = evaluate(one_class, 0.595);
  CHECK(!rep.auroc.has_value());
  CHECK(rep.auprc.has_value());  // positives exist
  CHECK(rep.brier >= 0.0);

  PredictionSet no_pos{{0.7, 0.2}, {0, 0}};
  const auto rep2 = evaluate(no_pos, 0.595);
  CHECK(!rep2.auroc.has_value());
  CHECK(!rep2.auprc.has_value());

  PredictionSet both{{0.9, 0.1}, {1, 0}};
  const auto rep3 = evaluate(both, 0.595);
  CHECK(rep3.auroc.has_value());
  CHECK(rep3.threshold == 0.595);
  const std::string json = report_to_json(rep3);
  CHECK(json.find("auroc") != std::string::npos);
}
