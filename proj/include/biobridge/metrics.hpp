#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace biobridge {

struct PredictionSet {
  std::vector<double> probs;   // in [0,1]
  std::vector<int> labels;     // in {0,1}
};

struct F1Result {
  double f1 = 0.0;
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct MetricsReport {
  double threshold = 0.595;
  F1Result f1;
  std::optional<double> auroc;  // unset on single-class input
  std::optional<double> auprc;  // unset when no positives
  double brier = 0.0;
};

// Positive iff prob >= threshold; F1 = 0 when precision+recall = 0.
F1Result f1_at_threshold(const PredictionSet& preds, double threshold = 0.595);

// Mann-Whitney pairwise statistic; ties credit 0.5. Throws on
// single-class input.
double auroc(const PredictionSet& preds);

// Average precision with tie-group averaging: every positive inside a
// probability tie group is credited the precision at the end of the group.
double auprc(const PredictionSet& preds);

double brier(const PredictionSet& preds);

MetricsReport evaluate(const PredictionSet& preds, double threshold = 0.595);

std::string report_to_json(const MetricsReport& report);

}  // namespace biobridge
