#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "biobridge/corpus.hpp"

namespace biobridge {

struct SparseVec {
  std::vector<std::size_t> idx;
  std::vector<double> val;
};

// tf = raw count, idf = ln((1+N)/(1+df)) + 1, rows L2-normalized on
// transform; vocabulary ordered lexicographically.
class TfidfModel {
 public:
  static TfidfModel fit(const std::vector<PIRecord>& records);

  SparseVec transform(const std::string& text) const;
  std::size_t vocab_size() const { return idf_.size(); }
  double idf(const std::string& term) const;

 private:
  std::map<std::string, std::size_t> term_index_;
  std::vector<double> idf_;
};

struct LogRegModel {
  std::vector<double> weights;
  double bias = 0.0;
};

// Full-batch gradient descent on L2-regularized log loss; stops when the
// gradient norm drops under 1e-6 or the epoch cap is hit.
LogRegModel train_logreg(const std::vector<SparseVec>& x,
                         const std::vector<int>& y, std::size_t n_features,
                         double l2, int max_epochs, double learning_rate,
                         std::uint64_t seed);

std::vector<double> predict_logreg(const std::vector<SparseVec>& x,
                                   const LogRegModel& model);

// Analytic gradient of the regularized log loss; shared with the
// finite-difference check in tests.
void logreg_loss_grad(const std::vector<SparseVec>& x,
                      const std::vector<int>& y, const LogRegModel& model,
                      double l2, double* loss, std::vector<double>* grad_w,
                      double* grad_b);

}  // namespace biobridge
