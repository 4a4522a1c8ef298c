#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "biobridge/encoder.hpp"

namespace biobridge {

struct RunConfig {
  // paths
  std::string corpus_path;
  std::string lexicon_path;
  std::string embedding_table_path;
  std::string vocab_path;
  std::string checkpoint_path;
  std::string symptom_lexicon_path;
  std::string korean_phrase_path;
  std::string out_dir = ".";

  EncoderConfig encoder;  // vocab_size filled from the vocab file
  TrainConfig train;

  double train_ratio = 0.64;
  double dev_ratio = 0.16;
  double test_ratio = 0.20;
  bool stratified = false;

  std::size_t vocab_size = 4000;
  bool threshold_from_prevalence = false;

  // synth
  std::size_t synth_n_records = 1000;
  double synth_emergency_rate = 0.5;
  double synth_label_noise = 0.05;
  double synth_reserved_fraction = 0.35;
  std::size_t synth_reserved_pool = 800;

  // ablate
  std::vector<std::uint64_t> ablate_seeds = {1};

  static RunConfig from_json_file(const std::string& path);
  void apply_json_file(const std::string& path);
  std::string to_json() const;
  std::uint64_t config_hash() const;
};

// Exit codes: 0 ok, 1 runtime failure, 2 invalid config.
int cmd_synth(const RunConfig& cfg);
int cmd_preprocess(const RunConfig& cfg);
int cmd_stats(const RunConfig& cfg);
int cmd_train_vocab(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_evaluate(const RunConfig& cfg);
int cmd_baseline(const RunConfig& cfg);
int cmd_ablate(const RunConfig& cfg);

}  // namespace biobridge
