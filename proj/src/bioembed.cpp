#include "biobridge/bioembed.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace biobridge {

namespace {

std::string fold_case(const std::string& word) {
  std::string out = word;
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double rnd01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller; avoids the implementation-defined std::normal_distribution.
double rnd_gauss(std::mt19937_64& rng) {
  double u1 = rnd01(rng);
  while (u1 <= 1e-300) u1 = rnd01(rng);
  const double u2 = rnd01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace

EmbeddingTable EmbeddingTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding table: " + path);
  EmbeddingTable table;
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("embedding table is empty: " + path);
  std::istringstream header(line);
  std::size_t count = 0;
  if (!(header >> count >> table.dim_) || table.dim_ == 0)
    throw std::runtime_error("embedding table header malformed: " + path);

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    Vec v(table.dim_);
    for (std::size_t d = 0; d < table.dim_; ++d)
      if (!(ls >> v[static_cast<Eigen::Index>(d)]))
        throw std::runtime_error("embedding table line " +
                                 std::to_string(line_no) +
                                 ": expected " + std::to_string(table.dim_) +
                                 " values");
    double extra;
    if (ls >> extra)
      throw std::runtime_error("embedding table line " +
                               std::to_string(line_no) + ": too many values");
    const std::string key = fold_case(word);
    if (!table.vectors_.emplace(key, std::move(v)).second)
      throw std::runtime_error("embedding table line " +
                               std::to_string(line_no) + ": duplicate word '" +
                               word + "'");
    table.words_.push_back(key);
  }
  if (table.words_.size() != count)
    throw std::runtime_error("embedding table: header declares " +
                             std::to_string(count) + " words, file has " +
                             std::to_string(table.words_.size()));
  return table;
}

void EmbeddingTable::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write embedding table: " + path);
  out << words_.size() << " " << dim_ << "\n";
  for (const auto& w : words_) {
    out << w;
    const Vec& v = vectors_.at(w);
    for (Eigen::Index d = 0; d < v.size(); ++d)
      out << " " << format_double(v[d]);
    out << "\n";
  }
}

EmbeddingTable EmbeddingTable::build_synthetic(
    const std::vector<WeightedTerm>& terms, std::size_t dim,
    std::uint64_t seed) {
  if (dim < 2) throw std::invalid_argument("embedding dim must be >= 2");
  EmbeddingTable table;
  table.dim_ = dim;

  // Severity lives in a fixed random direction; the mapper has to find it.
  std::mt19937_64 rng(seed ^ 0xB10B41D6EULL);
  Vec direction(dim);
  for (std::size_t d = 0; d < dim; ++d)
    direction[static_cast<Eigen::Index>(d)] = rnd_gauss(rng);
  direction.normalize();

  for (const auto& t : terms) {
    Vec v(dim);
    for (std::size_t d = 0; d < dim; ++d)
      v[static_cast<Eigen::Index>(d)] = 0.15 * rnd_gauss(rng);
    v += t.weight * direction;
    const std::string key = fold_case(t.term);
    if (table.vectors_.emplace(key, std::move(v)).second)
      table.words_.push_back(key);
  }
  return table;
}

const Vec* EmbeddingTable::lookup(const std::string& word) const {
  ++lookup_count_;
  const auto it = vectors_.find(fold_case(word));
  return it == vectors_.end() ? nullptr : &it->second;
}

std::vector<EnglishWordSpan> reconstruct_words(const BridgedInput& tok) {
  std::vector<EnglishWordSpan> spans;
  std::size_t i = 0;
  while (i < tok.size()) {
    if (tok.lang[i] != Lang::ENG || tok.word_id[i] < 0) {
      ++i;
      continue;
    }
    const int wid = tok.word_id[i];
    std::size_t j = i;
    std::string word;
    while (j < tok.size() && tok.lang[j] == Lang::ENG &&
           tok.word_id[j] == wid) {
      const std::string& t = tok.tokens[j];
      word += (t.size() > 2 && t[0] == '#' && t[1] == '#') ? t.substr(2) : t;
      ++j;
    }
    spans.push_back({std::move(word), i, j});
    i = j;
  }
  return spans;
}

RawBioFeatures extract_bio_features(const std::vector<EnglishWordSpan>& spans,
                                    const EmbeddingTable& table) {
  RawBioFeatures out;
  out.rows = Mat::Zero(static_cast<Eigen::Index>(spans.size()),
                       static_cast<Eigen::Index>(table.dim()));
  out.hits.assign(spans.size(), 0);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (const Vec* v = table.lookup(spans[i].word)) {
      out.rows.row(static_cast<Eigen::Index>(i)) = v->transpose();
      out.hits[i] = 1;
    }
  }
  return out;
}

Mat map_features(const RawBioFeatures& raw, const LinearMapper& mapper) {
  if (raw.rows.cols() != mapper.weight.rows())
    throw std::invalid_argument("map_features: width mismatch (" +
                                std::to_string(raw.rows.cols()) + " vs " +
                                std::to_string(mapper.weight.rows()) + ")");
  Mat mapped = raw.rows * mapper.weight;
  mapped.rowwise() += mapper.bias.transpose();
  for (std::size_t i = 0; i < raw.hits.size(); ++i)
    if (!raw.hits[i]) mapped.row(static_cast<Eigen::Index>(i)).setZero();
  return mapped;
}

Mat fuse(const Mat& token_embeddings, const Mat& mapped,
         const std::vector<EnglishWordSpan>& spans,
         std::vector<int>* mask_out) {
  const auto seq_len = static_cast<std::size_t>(token_embeddings.rows());
  std::vector<int> mask(seq_len, 0);
  Mat out = token_embeddings;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& s = spans[i];
    if (s.token_end > seq_len || s.token_start >= s.token_end)
      throw std::invalid_argument("fuse: span out of sequence bounds");
    for (std::size_t p = s.token_start; p < s.token_end; ++p) {
      if (mask[p])
        throw std::invalid_argument("fuse: overlapping word spans");
      out.row(static_cast<Eigen::Index>(p)) +=
          mapped.row(static_cast<Eigen::Index>(i));
      mask[p] = 1;
    }
  }
  if (mask_out) *mask_out = std::move(mask);
  return out;
}

BioPipelineOut run_bio_pipeline(const BridgedInput& tok,
                                const EmbeddingTable& table,
                                const LinearMapper& mapper) {
  BioPipelineOut out;
  out.spans = reconstruct_words(tok);
  out.raw = extract_bio_features(out.spans, table);
  const Mat mapped = map_features(out.raw, mapper);
  out.seq_features.features =
      Mat::Zero(static_cast<Eigen::Index>(tok.size()), mapper.weight.cols());
  out.seq_features.mask.assign(tok.size(), 0);
  for (std::size_t i = 0; i < out.spans.size(); ++i) {
    const auto& s = out.spans[i];
    for (std::size_t p = s.token_start; p < s.token_end && p < tok.size(); ++p) {
      out.seq_features.features.row(static_cast<Eigen::Index>(p)) =
          mapped.row(static_cast<Eigen::Index>(i));
      if (out.raw.hits[i]) out.seq_features.mask[p] = 1;
    }
  }
  return out;
}

}  // namespace biobridge
