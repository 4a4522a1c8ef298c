#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "biobridge/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"BioBridge: code-switched clinical triage classifier"};
  app.require_subcommand(1);

  biobridge::RunConfig cfg;
  std::string config_file;

  app.add_option("--config", config_file, "JSON config file (flags override)")
      ->check(CLI::ExistingFile);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--corpus", cfg.corpus_path, "corpus JSONL file");
    sub->add_option("--lexicon", cfg.lexicon_path, "abbreviation lexicon TSV");
    sub->add_option("--embedding-table", cfg.embedding_table_path,
                    "word2vec-style embedding table");
    sub->add_option("--vocab", cfg.vocab_path, "vocab file");
    sub->add_option("--checkpoint", cfg.checkpoint_path, "model checkpoint");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--seed", cfg.train.seed, "random seed");
    sub->add_option("--threshold", cfg.train.eval_threshold,
                    "F1 decision threshold");
    sub->add_flag("--threshold-from-prevalence", cfg.threshold_from_prevalence,
                  "derive the threshold from train-split label prevalence");
  };

  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--h-m", cfg.encoder.h_m, "encoder hidden width");
    sub->add_option("--layers", cfg.encoder.layers, "encoder layers");
    sub->add_option("--heads", cfg.encoder.heads, "attention heads");
    sub->add_option("--ffn", cfg.encoder.ffn, "feed-forward inner width");
    sub->add_option("--dropout", cfg.encoder.dropout, "dropout rate");
    sub->add_option("--max-len", cfg.encoder.max_len, "maximum sequence length");
    sub->add_option("--h-b", cfg.encoder.h_b, "embedding table width");
    sub->add_option("--batch-size", cfg.train.batch_size, "batch size");
    sub->add_option("--lr", cfg.train.learning_rate, "learning rate");
    sub->add_option("--epochs", cfg.train.epochs, "training epochs");
    sub->add_option("--grad-clip", cfg.train.grad_clip, "gradient clip norm");
    sub->add_option("--bridging", cfg.train.use_bridging,
                    "enable bridging segment tokens (0/1)");
    sub->add_option("--bioembed", cfg.train.use_bioembed,
                    "enable unified bio-embedding (0/1)");
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  add_common(synth);
  synth->add_option("--symptom-lexicon", cfg.symptom_lexicon_path,
                    "symptom lexicon TSV (term<TAB>weight)");
  synth->add_option("--korean-phrases", cfg.korean_phrase_path,
                    "Korean phrase list");
  synth->add_option("--n-records", cfg.synth_n_records, "number of records");
  synth->add_option("--emergency-rate", cfg.synth_emergency_rate,
                    "target emergency label rate");
  synth->add_option("--label-noise", cfg.synth_label_noise,
                    "label flip probability");
  synth->add_option("--reserved-fraction", cfg.synth_reserved_fraction,
                    "fraction of symptom slots drawn from the reserved pool");
  synth->add_option("--h-b", cfg.encoder.h_b, "embedding table width");

  auto* preprocess =
      app.add_subcommand("preprocess", "decode abbreviations, normalize spacing");
  add_common(preprocess);

  auto* stats = app.add_subcommand("stats", "character-class corpus statistics");
  add_common(stats);

  auto* train_vocab =
      app.add_subcommand("train-vocab", "train a WordPiece vocabulary");
  add_common(train_vocab);
  train_vocab->add_option("--vocab-size", cfg.vocab_size, "target vocab size");

  auto* train = app.add_subcommand("train", "train the encoder");
  add_common(train);
  add_model(train);
  train->add_option("--train-ratio", cfg.train_ratio, "train split ratio");
  train->add_option("--dev-ratio", cfg.dev_ratio, "dev split ratio");
  train->add_option("--test-ratio", cfg.test_ratio, "test split ratio");
  train->add_flag("--stratified", cfg.stratified, "stratify splits by label");

  auto* evaluate =
      app.add_subcommand("evaluate", "evaluate a checkpoint on a corpus file");
  add_common(evaluate);
  add_model(evaluate);

  auto* baseline =
      app.add_subcommand("baseline", "TF-IDF + logistic regression baseline");
  add_common(baseline);

  auto* ablate = app.add_subcommand("ablate", "run the 2x2 ablation grid");
  add_common(ablate);
  add_model(ablate);
  std::vector<std::uint64_t> seeds;
  ablate->add_option("--seeds", seeds, "seed list for the ablation grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (!config_file.empty()) {
      // File first, then re-apply flags on top.
      biobridge::RunConfig file_cfg;
      file_cfg.apply_json_file(config_file);
      std::swap(cfg, file_cfg);
      app.clear();
      app.parse(argc, argv);
    }
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  if (!seeds.empty()) cfg.ablate_seeds = seeds;

  if (synth->parsed()) return biobridge::cmd_synth(cfg);
  if (preprocess->parsed()) return biobridge::cmd_preprocess(cfg);
  if (stats->parsed()) return biobridge::cmd_stats(cfg);
  if (train_vocab->parsed()) return biobridge::cmd_train_vocab(cfg);
  if (train->parsed()) return biobridge::cmd_train(cfg);
  if (evaluate->parsed()) return biobridge::cmd_evaluate(cfg);
  if (baseline->parsed()) return biobridge::cmd_baseline(cfg);
  if (ablate->parsed()) return biobridge::cmd_ablate(cfg);
  return 2;
}
