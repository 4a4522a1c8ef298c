#include "biobridge/baseline.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace biobridge {

namespace {

std::vector<std::string> split_terms(const std::string& text) {
  std::vector<std::string> terms;
  std::istringstream in(text);
  std::string t;
  while (in >> t) terms.push_back(std::move(t));
  return terms;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TfidfModel TfidfModel::fit(const std::vector<PIRecord>& records) {
  if (records.empty())
    throw std::invalid_argument("cannot fit TF-IDF on an empty corpus");
  std::map<std::string, std::size_t> df;
  for (const auto& rec : records) {
    std::set<std::string> seen;
    for (auto& t : split_terms(rec.text)) seen.insert(std::move(t));
    for (const auto& t : seen) ++df[t];
  }
  TfidfModel model;
  const double n = static_cast<double>(records.size());
  for (const auto& [term, count] : df) {
    model.term_index_.emplace(term, model.idf_.size());
    model.idf_.push_back(std::log((1.0 + n) / (1.0 + count)) + 1.0);
  }
  return model;
}

double TfidfModel::idf(const std::string& term) const {
  const auto it = term_index_.find(term);
  if (it == term_index_.end())
    throw std::out_of_range("term not in tf-idf vocabulary: " + term);
  return idf_[it->second];
}

SparseVec TfidfModel::transform(const std::string& text) const {
  std::map<std::size_t, double> counts;
  for (const auto& t : split_terms(text)) {
    const auto it = term_index_.find(t);
    if (it != term_index_.end()) counts[it->second] += 1.0;
  }
  SparseVec v;
  double sq = 0.0;
  for (const auto& [col, tf] : counts) {
    const double w = tf * idf_[col];
    v.idx.push_back(col);
    v.val.push_back(w);
    sq += w * w;
  }
  if (sq > 0.0) {
    const double inv = 1.0 / std::sqrt(sq);
    for (double& w : v.val) w *= inv;
  }
  return v;
}

void logreg_loss_grad(const std::vector<SparseVec>& x,
                      const std::vector<int>& y, const LogRegModel& model,
                      double l2, double* loss, std::vector<double>* grad_w,
                      double* grad_b) {
  const double inv_n = 1.0 / static_cast<double>(x.size());
  if (loss) *loss = 0.0;
  if (grad_w) grad_w->assign(model.weights.size(), 0.0);
  if (grad_b) *grad_b = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double z = model.bias;
    for (std::size_t k = 0; k < x[i].idx.size(); ++k)
      z += model.weights[x[i].idx[k]] * x[i].val[k];
    const double p = sigmoid(z);
    if (loss)
      *loss += inv_n * (std::max(z, 0.0) - z * y[i] +
                        std::log1p(std::exp(-std::abs(z))));
    const double d = inv_n * (p - y[i]);
    if (grad_w)
      for (std::size_t k = 0; k < x[i].idx.size(); ++k)
        (*grad_w)[x[i].idx[k]] += d * x[i].val[k];
    if (grad_b) *grad_b += d;
  }
  if (l2 > 0.0) {
    for (std::size_t j = 0; j < model.weights.size(); ++j) {
      if (loss) *loss += 0.5 * l2 * model.weights[j] * model.weights[j];
      if (grad_w) (*grad_w)[j] += l2 * model.weights[j];
    }
  }
}

LogRegModel train_logreg(const std::vector<SparseVec>& x,
                         const std::vector<int>& y, std::size_t n_features,
                         double l2, int max_epochs, double learning_rate,
                         std::uint64_t seed) {
  (void)seed;  // zero init; full-batch descent is already deterministic
  if (x.size() != y.size() || x.empty())
    throw std::invalid_argument("train_logreg: inconsistent shapes");
  for (const auto& v : x)
    for (std::size_t col : v.idx)
      if (col >= n_features)
        throw std::invalid_argument("train_logreg: feature index out of range");

  LogRegModel model;
  model.weights.assign(n_features, 0.0);
  std::vector<double> grad_w;
  double grad_b = 0.0, loss = 0.0;
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    logreg_loss_grad(x, y, model, l2, &loss, &grad_w, &grad_b);
    if (!std::isfinite(loss))
      throw std::runtime_error("logistic regression diverged");
    double sq = grad_b * grad_b;
    for (double g : grad_w) sq += g * g;
    if (std::sqrt(sq) < 1e-6) break;
    for (std::size_t j = 0; j < n_features; ++j)
      model.weights[j] -= learning_rate * grad_w[j];
    model.bias -= learning_rate * grad_b;
  }
  return model;
}

std::vector<double> predict_logreg(const std::vector<SparseVec>& x,
                                   const LogRegModel& model) {
  std::vector<double> probs;
  probs.reserve(x.size());
  for (const auto& v : x) {
    double z = model.bias;
    for (std::size_t k = 0; k < v.idx.size(); ++k) {
      if (v.idx[k] >= model.weights.size())
        throw std::invalid_argument("predict_logreg: shape mismatch");
      z += model.weights[v.idx[k]] * v.val[k];
    }
    probs.push_back(sigmoid(z));
  }
  return probs;
}

}  // namespace biobridge
