#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "biobridge/bioembed.hpp"
#include "biobridge/corpus.hpp"
#include "biobridge/tokenizer.hpp"

namespace biobridge {

struct EncoderConfig {
  int h_m = 128;
  int layers = 2;
  int heads = 4;
  int ffn = 256;
  double dropout = 0.1;
  int max_len = 128;
  int vocab_size = 0;  // includes specials
  int h_b = 64;        // width of the frozen embedding table

  void validate() const;
};

struct LayerParams {
  Mat wq, wk, wv, wo;  // h_m x h_m
  Vec bq, bk, bv, bo;
  Vec ln1_g, ln1_b, ln2_g, ln2_b;
  Mat w1;  // h_m x ffn
  Vec b1;
  Mat w2;  // ffn x h_m
  Vec b2;
};

struct ModelParams {
  EncoderConfig config;
  Mat tok_emb;  // vocab_size x h_m
  Mat pos_emb;  // max_len x h_m
  Vec emb_ln_g, emb_ln_b;
  std::vector<LayerParams> layers;
  LinearMapper mapper;  // h_b x h_m
  Vec cls_w;            // h_m
  double cls_b = 0.0;

  static ModelParams init(const EncoderConfig& config, std::uint64_t seed);
  static ModelParams zeros_like(const ModelParams& other);

  void save(const std::string& path) const;
  static ModelParams load(const std::string& path);
};

// Deterministic traversal of every trainable tensor as flat storage.
using ParamVisitor =
    std::function<void(const std::string& name, double* data, std::size_t n)>;
void visit_params(ModelParams& params, const ParamVisitor& fn);

struct TrainConfig {
  int batch_size = 16;
  double learning_rate = 3e-4;
  int epochs = 5;
  std::uint64_t seed = 0;
  double grad_clip = 1.0;
  double eval_threshold = 0.595;
  bool use_bridging = true;
  bool use_bioembed = true;
};

// Tokenization, bridging, truncation, and frozen-table lookups done once
// per record; only the trainable mapper output is recomputed per step.
struct PreparedExample {
  BridgedInput tok;
  std::size_t length = 0;  // non-PAD prefix
  std::vector<EnglishWordSpan> spans;
  RawBioFeatures raw;
  int label = 0;
};

PreparedExample prepare_example(const PIRecord& record, const Vocab& vocab,
                                const EmbeddingTable* table,
                                const TrainConfig& cfg,
                                const EncoderConfig& enc);

// Eval-mode forward (dropout off). Deterministic.
double forward_prob(const PreparedExample& ex, const ModelParams& params);

struct BatchGradResult {
  double loss = 0.0;
  std::vector<double> probs;
};

// Mean BCE over the batch plus gradients for every trainable tensor.
// dropout_rng non-null enables dropout (training mode).
BatchGradResult loss_and_grads(const std::vector<const PreparedExample*>& batch,
                               const ModelParams& params, ModelParams& grads,
                               std::mt19937_64* dropout_rng = nullptr);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_f1 = 0.0;
  double dev_auroc = 0.0;
  double dev_brier = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_dev_f1 = 0.0;
  // Gradient mass that reached the frozen table; stays exactly 0.
  double table_grad_norm_accum = 0.0;
};

TrainResult train(const CorpusSplit& splits, const Vocab& vocab,
                  const EmbeddingTable* table, const EncoderConfig& enc,
                  const TrainConfig& cfg);

std::vector<double> predict(const std::vector<PIRecord>& records,
                            const Vocab& vocab, const EmbeddingTable* table,
                            const ModelParams& params, const TrainConfig& cfg,
                            int batch_size = 8);

}  // namespace biobridge
