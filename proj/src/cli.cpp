#include "biobridge/cli.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>

#include "biobridge/baseline.hpp"
#include "biobridge/metrics.hpp"
#include "biobridge/preprocess.hpp"
#include "json.hpp"

namespace biobridge {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr const char* kVersion = "0.1.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path, const char* field) {
  if (path.empty())
    throw ConfigError(std::string("missing required config field: ") + field);
  if (!fs::exists(path))
    throw ConfigError(std::string(field) + ": file not found: " + path);
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("out_dir not writable: " + dir);
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v * 100.0);
  return buf;
}

json metrics_json(const MetricsReport& r) {
  return json::parse(report_to_json(r));
}

void write_manifest(const RunConfig& cfg, const std::string& command,
                    const std::vector<std::string>& outputs) {
  json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["seed"] = cfg.train.seed;
  m["config_hash"] = cfg.config_hash();
  m["config"] = json::parse(cfg.to_json());
  m["outputs"] = outputs;
  write_text((fs::path(cfg.out_dir) / ("manifest_" + command + ".json")).string(),
             m.dump(2) + "\n");
}

int guard(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

SynthConfig synth_config(const RunConfig& cfg) {
  SynthConfig sc;
  sc.n_records = cfg.synth_n_records;
  sc.emergency_rate = cfg.synth_emergency_rate;
  sc.seed = cfg.train.seed;
  sc.symptom_lexicon_path = cfg.symptom_lexicon_path;
  sc.korean_phrase_path = cfg.korean_phrase_path;
  sc.label_noise = cfg.synth_label_noise;
  sc.reserved_fraction = cfg.synth_reserved_fraction;
  sc.reserved_pool_size = cfg.synth_reserved_pool;
  return sc;
}

struct TrainArtifacts {
  CorpusSplit split;
  Vocab vocab;
  std::optional<EmbeddingTable> table;
  TrainResult result;
  MetricsReport test_report;
};

TrainArtifacts run_training(const RunConfig& cfg, const TrainConfig& tc) {
  require_file(cfg.corpus_path, "corpus");
  require_file(cfg.vocab_path, "vocab");
  TrainArtifacts art{.split = {},
                     .vocab = Vocab::load(cfg.vocab_path),
                     .table = std::nullopt,
                     .result = {},
                     .test_report = {}};
  if (tc.use_bioembed) {
    require_file(cfg.embedding_table_path, "embedding_table");
    art.table = EmbeddingTable::load(cfg.embedding_table_path);
  }

  const auto records = load_jsonl(cfg.corpus_path);
  art.split = split_corpus(records, cfg.train_ratio, cfg.dev_ratio,
                           cfg.test_ratio, tc.seed, cfg.stratified);

  EncoderConfig enc = cfg.encoder;
  enc.vocab_size = static_cast<int>(art.vocab.size());
  if (art.table) enc.h_b = static_cast<int>(art.table->dim());

  TrainConfig tc2 = tc;
  if (cfg.threshold_from_prevalence) {
    double pos = 0.0;
    for (const auto& r : art.split.train) pos += r.label;
    tc2.eval_threshold = pos / static_cast<double>(art.split.train.size());
  }

  art.result = train(art.split, art.vocab,
                     art.table ? &*art.table : nullptr, enc, tc2);

  PredictionSet preds;
  preds.probs = predict(art.split.test, art.vocab,
                        art.table ? &*art.table : nullptr, art.result.params,
                        tc2);
  for (const auto& r : art.split.test) preds.labels.push_back(r.label);
  art.test_report = evaluate(preds, tc2.eval_threshold);
  return art;
}

json history_json(const TrainResult& result) {
  json h = json::array();
  for (const auto& e : result.history)
    h.push_back({{"epoch", e.epoch},
                 {"train_loss", e.train_loss},
                 {"dev_f1", e.dev_f1},
                 {"dev_auroc", e.dev_auroc},
                 {"dev_brier", e.dev_brier}});
  return json{{"epochs", h},
              {"best_epoch", result.best_epoch},
              {"best_dev_f1", result.best_dev_f1},
              {"table_grad_norm", result.table_grad_norm_accum}};
}

void save_split(const CorpusSplit& split, const std::string& dir) {
  save_jsonl(split.train, (fs::path(dir) / "train.jsonl").string());
  save_jsonl(split.dev, (fs::path(dir) / "dev.jsonl").string());
  save_jsonl(split.test, (fs::path(dir) / "test.jsonl").string());
}

void print_report(const std::string& name, const MetricsReport& r) {
  std::cout << name << ": F1 " << pct(r.f1.f1) << "  AUROC "
            << (r.auroc ? pct(*r.auroc) : "n/a") << "  AUPRC "
            << (r.auprc ? pct(*r.auprc) : "n/a") << "  Brier "
            << pct(r.brier) << "\n";
}

}  // namespace

RunConfig RunConfig::from_json_file(const std::string& path) {
  RunConfig cfg;
  cfg.apply_json_file(path);
  return cfg;
}

void RunConfig::apply_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j;
  in >> j;

  const json paths = j.value("paths", json::object());
  auto p = [&](const char* key, std::string& field) {
    if (paths.contains(key)) field = paths.at(key).get<std::string>();
  };
  p("corpus", corpus_path);
  p("lexicon", lexicon_path);
  p("embedding_table", embedding_table_path);
  p("vocab", vocab_path);
  p("checkpoint", checkpoint_path);
  p("symptom_lexicon", symptom_lexicon_path);
  p("korean_phrases", korean_phrase_path);
  p("out_dir", out_dir);

  if (j.contains("encoder")) {
    const json& e = j.at("encoder");
    encoder.h_m = e.value("h_m", encoder.h_m);
    encoder.layers = e.value("layers", encoder.layers);
    encoder.heads = e.value("heads", encoder.heads);
    encoder.ffn = e.value("ffn", encoder.ffn);
    encoder.dropout = e.value("dropout", encoder.dropout);
    encoder.max_len = e.value("max_len", encoder.max_len);
    encoder.h_b = e.value("h_b", encoder.h_b);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    train.batch_size = t.value("batch_size", train.batch_size);
    train.learning_rate = t.value("learning_rate", train.learning_rate);
    train.epochs = t.value("epochs", train.epochs);
    train.seed = t.value("seed", train.seed);
    train.grad_clip = t.value("grad_clip", train.grad_clip);
    train.eval_threshold = t.value("eval_threshold", train.eval_threshold);
    train.use_bridging = t.value("use_bridging", train.use_bridging);
    train.use_bioembed = t.value("use_bioembed", train.use_bioembed);
  }
  if (j.contains("split")) {
    const json& s = j.at("split");
    train_ratio = s.value("train", train_ratio);
    dev_ratio = s.value("dev", dev_ratio);
    test_ratio = s.value("test", test_ratio);
    stratified = s.value("stratified", stratified);
  }
  if (j.contains("synth")) {
    const json& s = j.at("synth");
    synth_n_records = s.value("n_records", synth_n_records);
    synth_emergency_rate = s.value("emergency_rate", synth_emergency_rate);
    synth_label_noise = s.value("label_noise", synth_label_noise);
    synth_reserved_fraction =
        s.value("reserved_fraction", synth_reserved_fraction);
    synth_reserved_pool = s.value("reserved_pool_size", synth_reserved_pool);
  }
  vocab_size = j.value("vocab_size", vocab_size);
  threshold_from_prevalence =
      j.value("threshold_from_prevalence", threshold_from_prevalence);
  if (j.contains("ablate_seeds"))
    ablate_seeds = j.at("ablate_seeds").get<std::vector<std::uint64_t>>();
}

std::string RunConfig::to_json() const {
  json j;
  j["paths"] = {{"corpus", corpus_path},
                {"lexicon", lexicon_path},
                {"embedding_table", embedding_table_path},
                {"vocab", vocab_path},
                {"checkpoint", checkpoint_path},
                {"symptom_lexicon", symptom_lexicon_path},
                {"korean_phrases", korean_phrase_path},
                {"out_dir", out_dir}};
  j["encoder"] = {{"h_m", encoder.h_m},     {"layers", encoder.layers},
                  {"heads", encoder.heads}, {"ffn", encoder.ffn},
                  {"dropout", encoder.dropout}, {"max_len", encoder.max_len},
                  {"h_b", encoder.h_b}};
  j["train"] = {{"batch_size", train.batch_size},
                {"learning_rate", train.learning_rate},
                {"epochs", train.epochs},
                {"seed", train.seed},
                {"grad_clip", train.grad_clip},
                {"eval_threshold", train.eval_threshold},
                {"use_bridging", train.use_bridging},
                {"use_bioembed", train.use_bioembed}};
  j["split"] = {{"train", train_ratio},
                {"dev", dev_ratio},
                {"test", test_ratio},
                {"stratified", stratified}};
  j["synth"] = {{"n_records", synth_n_records},
                {"emergency_rate", synth_emergency_rate},
                {"label_noise", synth_label_noise},
                {"reserved_fraction", synth_reserved_fraction},
                {"reserved_pool_size", synth_reserved_pool}};
  j["vocab_size"] = vocab_size;
  j["threshold_from_prevalence"] = threshold_from_prevalence;
  j["ablate_seeds"] = ablate_seeds;
  return j.dump();
}

std::uint64_t RunConfig::config_hash() const {
  const std::string s = to_json();
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int cmd_synth(const RunConfig& cfg) {
  return guard([&] {
    require_file(cfg.symptom_lexicon_path, "symptom_lexicon");
    require_file(cfg.korean_phrase_path, "korean_phrases");
    ensure_out_dir(cfg.out_dir);
    const SynthConfig sc = synth_config(cfg);

    SynthReport report;
    const auto corpus = generate_synthetic(sc, &report);
    const auto vocab_corpus = generate_vocab_corpus(sc);
    const auto corpus_file = (fs::path(cfg.out_dir) / "corpus.jsonl").string();
    const auto vocab_corpus_file =
        (fs::path(cfg.out_dir) / "vocab_corpus.jsonl").string();
    save_jsonl(corpus, corpus_file);
    save_jsonl(vocab_corpus, vocab_corpus_file);

    const auto reserved = build_reserved_terms(sc.seed, sc.reserved_pool_size);
    auto all_terms = load_symptom_lexicon(sc.symptom_lexicon_path);
    all_terms.insert(all_terms.end(), reserved.begin(), reserved.end());
    const auto table = EmbeddingTable::build_synthetic(
        all_terms, static_cast<std::size_t>(cfg.encoder.h_b), sc.seed);
    const auto table_file =
        (fs::path(cfg.out_dir) / "embedding_table.txt").string();
    table.save(table_file);

    std::string reserved_txt;
    for (const auto& t : reserved) reserved_txt += t.term + "\n";
    const auto reserved_file =
        (fs::path(cfg.out_dir) / "reserved_terms.txt").string();
    write_text(reserved_file, reserved_txt);

    double label_mean = 0.0;
    for (const auto& r : corpus) label_mean += r.label;
    label_mean /= static_cast<double>(corpus.size());
    json rj;
    rj["n_records"] = corpus.size();
    rj["label_mean"] = label_mean;
    rj["generative_rate"] = report.achieved_rate;
    rj["bias"] = report.bias;
    rj["warnings"] = report.warnings;
    const auto report_file =
        (fs::path(cfg.out_dir) / "synth_report.json").string();
    write_text(report_file, rj.dump(2) + "\n");
    for (const auto& w : report.warnings)
      std::cerr << "warning: " << w << "\n";

    write_manifest(cfg, "synth",
                   {corpus_file, vocab_corpus_file, table_file, reserved_file,
                    report_file});
    std::cout << "generated " << corpus.size() << " records (label mean "
              << label_mean << ")\n";
  });
}

int cmd_preprocess(const RunConfig& cfg) {
  return guard([&] {
    require_file(cfg.corpus_path, "corpus");
    require_file(cfg.lexicon_path, "lexicon");
    ensure_out_dir(cfg.out_dir);
    const auto lexicon = AbbrevLexicon::load(cfg.lexicon_path);
    const auto records = load_jsonl(cfg.corpus_path);
    std::vector<PIRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(preprocess_record(r, lexicon));
    const auto out_file =
        (fs::path(cfg.out_dir) / "preprocessed.jsonl").string();
    save_jsonl(out, out_file);
    write_manifest(cfg, "preprocess", {out_file});
    std::cout << "preprocessed " << out.size() << " records\n";
  });
}

int cmd_stats(const RunConfig& cfg) {
  return guard([&] {
    require_file(cfg.corpus_path, "corpus");
    ensure_out_dir(cfg.out_dir);
    const auto records = load_jsonl(cfg.corpus_path);
    const CharStats s = corpus_stats(records);
    json j;
    j["records"] = records.size();
    j["total"] = s.total;
    j["korean"] = s.korean;
    j["english"] = s.english;
    j["numeric"] = s.numeric;
    j["special"] = s.special;
    const auto out_file = (fs::path(cfg.out_dir) / "stats.json").string();
    write_text(out_file, j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    write_manifest(cfg, "stats", {out_file});
  });
}

int cmd_train_vocab(const RunConfig& cfg) {
  return guard([&] {
    require_file(cfg.corpus_path, "corpus");
    ensure_out_dir(cfg.out_dir);
    const auto records = load_jsonl(cfg.corpus_path);
    const Vocab vocab = Vocab::train(records, cfg.vocab_size, cfg.train.seed);
    const auto out_file = (fs::path(cfg.out_dir) / "vocab.txt").string();
    vocab.save(out_file);
    write_manifest(cfg, "train_vocab", {out_file});
    std::cout << "trained vocab of " << vocab.size() << " tokens\n";
  });
}

int cmd_train(const RunConfig& cfg) {
  return guard([&] {
    ensure_out_dir(cfg.out_dir);
    const auto art = run_training(cfg, cfg.train);
    save_split(art.split, cfg.out_dir);
    const auto ckpt_file = (fs::path(cfg.out_dir) / "checkpoint.ckpt").string();
    art.result.params.save(ckpt_file);
    const auto hist_file = (fs::path(cfg.out_dir) / "history.json").string();
    write_text(hist_file, history_json(art.result).dump(2) + "\n");
    const auto metrics_file =
        (fs::path(cfg.out_dir) / "test_metrics.json").string();
    write_text(metrics_file, report_to_json(art.test_report) + "\n");
    write_manifest(cfg, "train", {ckpt_file, hist_file, metrics_file});
    print_report("test", art.test_report);
  });
}

int cmd_evaluate(const RunConfig& cfg) {
  return guard([&] {
    require_file(cfg.corpus_path, "corpus");
    require_file(cfg.vocab_path, "vocab");
    require_file(cfg.checkpoint_path, "checkpoint");
    ensure_out_dir(cfg.out_dir);

    const Vocab vocab = Vocab::load(cfg.vocab_path);
    const ModelParams params = ModelParams::load(cfg.checkpoint_path);
    std::optional<EmbeddingTable> table;
    if (cfg.train.use_bioembed) {
      require_file(cfg.embedding_table_path, "embedding_table");
      table = EmbeddingTable::load(cfg.embedding_table_path);
    }
    const auto records = load_jsonl(cfg.corpus_path);

    PredictionSet preds;
    preds.probs = predict(records, vocab, table ? &*table : nullptr, params,
                          cfg.train);
    for (const auto& r : records) preds.labels.push_back(r.label);
    const auto report = evaluate(preds, cfg.train.eval_threshold);
    const auto out_file = (fs::path(cfg.out_dir) / "metrics.json").string();
    write_text(out_file, report_to_json(report) + "\n");
    write_manifest(cfg, "evaluate", {out_file});
    print_report("evaluate", report);
  });
}

int cmd_baseline(const RunConfig& cfg) {
  return guard([&] {
    require_file(cfg.corpus_path, "corpus");
    ensure_out_dir(cfg.out_dir);
    const auto records = load_jsonl(cfg.corpus_path);
    const auto split =
        split_corpus(records, cfg.train_ratio, cfg.dev_ratio, cfg.test_ratio,
                     cfg.train.seed, cfg.stratified);

    const auto tfidf = TfidfModel::fit(split.train);
    std::vector<SparseVec> x_train, x_test;
    std::vector<int> y_train;
    for (const auto& r : split.train) {
      x_train.push_back(tfidf.transform(r.text));
      y_train.push_back(r.label);
    }
    for (const auto& r : split.test) x_test.push_back(tfidf.transform(r.text));

    const auto model = train_logreg(x_train, y_train, tfidf.vocab_size(),
                                    1e-4, 500, 1.0, cfg.train.seed);
    PredictionSet preds;
    preds.probs = predict_logreg(x_test, model);
    for (const auto& r : split.test) preds.labels.push_back(r.label);
    const auto report = evaluate(preds, cfg.train.eval_threshold);
    const auto out_file =
        (fs::path(cfg.out_dir) / "baseline_metrics.json").string();
    write_text(out_file, report_to_json(report) + "\n");
    write_manifest(cfg, "baseline", {out_file});
    print_report("baseline", report);
  });
}

int cmd_ablate(const RunConfig& cfg) {
  return guard([&] {
    ensure_out_dir(cfg.out_dir);
    struct Mode {
      const char* name;
      bool bridging;
      bool bioembed;
    };
    const Mode modes[4] = {{"base", false, false},
                           {"+bridging", true, false},
                           {"+bioembed", false, true},
                           {"both", true, true}};

    json per_seed = json::array();
    std::map<std::string, std::array<double, 4>> sums;
    std::map<std::string, int> counts;
    bool any_failed = false;

    for (std::uint64_t seed : cfg.ablate_seeds) {
      json seed_block;
      seed_block["seed"] = seed;
      json rows = json::object();
      for (const auto& mode : modes) {
        TrainConfig tc = cfg.train;
        tc.seed = seed;
        tc.use_bridging = mode.bridging;
        tc.use_bioembed = mode.bioembed;
        try {
          const auto art = run_training(cfg, tc);
          // All four legs share the split: same records, ratios, seed.
          if (std::string(mode.name) == "base")
            save_split(art.split, cfg.out_dir);
          const auto& r = art.test_report;
          rows[mode.name] = metrics_json(r);
          auto& s = sums[mode.name];
          s[0] += r.f1.f1;
          s[1] += r.auroc.value_or(0.0);
          s[2] += r.auprc.value_or(0.0);
          s[3] += r.brier;
          ++counts[mode.name];
        } catch (const std::exception& e) {
          rows[mode.name] = {{"error", e.what()}};
          any_failed = true;
        }
      }
      seed_block["modes"] = rows;
      per_seed.push_back(seed_block);
    }

    json mean = json::object();
    for (const auto& mode : modes) {
      if (!counts.count(mode.name)) continue;
      const double n = counts[mode.name];
      const auto& s = sums[mode.name];
      mean[mode.name] = {{"f1", s[0] / n},
                         {"auroc", s[1] / n},
                         {"auprc", s[2] / n},
                         {"brier", s[3] / n}};
    }

    // Best value per column over the mean table (Brier: lower wins).
    json best = json::object();
    const char* columns[4] = {"f1", "auroc", "auprc", "brier"};
    for (int c = 0; c < 4; ++c) {
      std::string best_mode;
      double best_val = c == 3 ? 1e300 : -1e300;
      for (const auto& mode : modes) {
        if (!mean.contains(mode.name)) continue;
        const double v = mean[mode.name][columns[c]].get<double>();
        if ((c == 3 && v < best_val) || (c != 3 && v > best_val)) {
          best_val = v;
          best_mode = mode.name;
        }
      }
      best[columns[c]] = best_mode;
    }

    json out;
    out["seeds"] = cfg.ablate_seeds;
    out["per_seed"] = per_seed;
    out["mean"] = mean;
    out["best"] = best;
    const auto json_file = (fs::path(cfg.out_dir) / "ablation.json").string();
    write_text(json_file, out.dump(2) + "\n");

    std::string csv = "config,F1,AUROC,AUPRC,Brier\n";
    for (const auto& mode : modes) {
      if (!mean.contains(mode.name)) {
        csv += std::string(mode.name) + ",failed,failed,failed,failed\n";
        continue;
      }
      const auto& m = mean[mode.name];
      csv += std::string(mode.name) + "," + pct(m["f1"].get<double>()) + "," +
             pct(m["auroc"].get<double>()) + "," +
             pct(m["auprc"].get<double>()) + "," +
             pct(m["brier"].get<double>()) + "\n";
    }
    const auto csv_file = (fs::path(cfg.out_dir) / "ablation.csv").string();
    write_text(csv_file, csv);
    write_manifest(cfg, "ablate", {json_file, csv_file});
    std::cout << csv;
    if (any_failed)
      throw std::runtime_error("one or more ablation legs failed");
  });
}

}  // namespace biobridge
