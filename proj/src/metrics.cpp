#include "biobridge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace biobridge {

namespace {

void check_set(const PredictionSet& preds) {
  if (preds.probs.size() != preds.labels.size())
    throw std::invalid_argument("probs and labels differ in length");
  if (preds.probs.empty())
    throw std::invalid_argument("empty prediction set");
  for (double p : preds.probs)
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("probability outside [0,1]");
  for (int y : preds.labels)
    if (y != 0 && y != 1)
      throw std::invalid_argument("label outside {0,1}");
}

}  // namespace

F1Result f1_at_threshold(const PredictionSet& preds, double threshold) {
  check_set(preds);
  F1Result r;
  for (std::size_t i = 0; i < preds.probs.size(); ++i) {
    const bool pred = preds.probs[i] >= threshold;
    const bool truth = preds.labels[i] == 1;
    if (pred && truth) ++r.tp;
    else if (pred && !truth) ++r.fp;
    else if (!pred && truth) ++r.fn;
    else ++r.tn;
  }
  const double denom = static_cast<double>(2 * r.tp + r.fp + r.fn);
  r.f1 = denom > 0.0 ? static_cast<double>(2 * r.tp) / denom : 0.0;
  return r;
}

double auroc(const PredictionSet& preds) {
  check_set(preds);
  std::vector<double> neg;
  std::vector<double> pos;
  for (std::size_t i = 0; i < preds.probs.size(); ++i)
    (preds.labels[i] ? pos : neg).push_back(preds.probs[i]);
  if (pos.empty() || neg.empty())
    throw std::invalid_argument("AUROC undefined: needs both classes");

  std::sort(neg.begin(), neg.end());
  std::uint64_t wins2 = 0;  // 2*wins + ties, kept integral
  for (double p : pos) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    const auto hi = std::upper_bound(neg.begin(), neg.end(), p);
    wins2 += 2 * static_cast<std::uint64_t>(lo - neg.begin());
    wins2 += static_cast<std::uint64_t>(hi - lo);
  }
  return static_cast<double>(wins2) /
         static_cast<double>(2 * pos.size() * neg.size());
}

double auprc(const PredictionSet& preds) {
  check_set(preds);
  const std::size_t n = preds.probs.size();
  std::size_t total_pos = 0;
  for (int y : preds.labels) total_pos += static_cast<std::size_t>(y);
  if (total_pos == 0)
    throw std::invalid_argument("AUPRC undefined: no positives");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds.probs[a] > preds.probs[b];
  });

  double ap = 0.0;
  std::size_t seen = 0, tp = 0;
  std::size_t i = 0;
  while (i < n) {
    // One probability tie group at a time.
    std::size_t j = i, group_pos = 0;
    while (j < n && preds.probs[order[j]] == preds.probs[order[i]]) {
      group_pos += static_cast<std::size_t>(preds.labels[order[j]]);
      ++j;
    }
    seen += j - i;
    tp += group_pos;
    const double precision =
        static_cast<double>(tp) / static_cast<double>(seen);
    ap += precision * static_cast<double>(group_pos);
    i = j;
  }
  return ap / static_cast<double>(total_pos);
}

double brier(const PredictionSet& preds) {
  check_set(preds);
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.probs.size(); ++i) {
    const double d = preds.probs[i] - preds.labels[i];
    sum += d * d;
  }
  return sum / static_cast<double>(preds.probs.size());
}

MetricsReport evaluate(const PredictionSet& preds, double threshold) {
  MetricsReport report;
  report.threshold = threshold;
  report.f1 = f1_at_threshold(preds, threshold);
  report.brier = brier(preds);
  bool has_pos = false, has_neg = false;
  for (int y : preds.labels) (y ? has_pos : has_neg) = true;
  if (has_pos && has_neg) report.auroc = auroc(preds);
  if (has_pos) report.auprc = auprc(preds);
  return report;
}

std::string report_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["threshold"] = report.threshold;
  j["f1"] = report.f1.f1;
  j["confusion"] = {{"tp", report.f1.tp},
                    {"fp", report.f1.fp},
                    {"fn", report.f1.fn},
                    {"tn", report.f1.tn}};
  if (report.auroc)
    j["auroc"] = *report.auroc;
  else
    j["auroc"] = nullptr;
  if (report.auprc)
    j["auprc"] = *report.auprc;
  else
    j["auprc"] = nullptr;
  j["brier"] = report.brier;
  return j.dump(2);
}

}  // namespace biobridge
