#include "biobridge/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "biobridge/metrics.hpp"

namespace biobridge {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kMaskPenalty = -1e9;

double rnd01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double rnd_gauss(std::mt19937_64& rng) {
  double u1 = rnd01(rng);
  while (u1 <= 1e-300) u1 = rnd01(rng);
  const double u2 = rnd01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

void fill_gauss(Mat& m, double scale, std::mt19937_64& rng) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = scale * rnd_gauss(rng);
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  const double phi = std::exp(-0.5 * x * x) * 0.3989422804014327;
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) + x * phi;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Stable BCE from the logit.
double bce_from_logit(double z, double y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

struct LnCache {
  Mat xhat;     // normalized rows
  Vec inv_std;  // per row
};

Mat layer_norm(const Mat& x, const Vec& gamma, const Vec& beta, LnCache* cache) {
  const Eigen::Index rows = x.rows(), cols = x.cols();
  Mat out(rows, cols);
  if (cache) {
    cache->xhat.resize(rows, cols);
    cache->inv_std.resize(rows);
  }
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    const double inv_std = 1.0 / std::sqrt(var + kLnEps);
    Eigen::RowVectorXd xhat = (x.row(r).array() - mean) * inv_std;
    out.row(r) =
        (xhat.array() * gamma.transpose().array()) + beta.transpose().array();
    if (cache) {
      cache->xhat.row(r) = xhat;
      cache->inv_std[r] = inv_std;
    }
  }
  return out;
}

// dx for y = gamma*xhat + beta; accumulates dgamma/dbeta.
Mat layer_norm_backward(const Mat& dy, const LnCache& cache, const Vec& gamma,
                        Vec& dgamma, Vec& dbeta) {
  const Eigen::Index rows = dy.rows(), cols = dy.cols();
  Mat dx(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    dgamma.array() +=
        dy.row(r).transpose().array() * cache.xhat.row(r).transpose().array();
    dbeta += dy.row(r).transpose();
    const Eigen::RowVectorXd dxhat =
        dy.row(r).array() * gamma.transpose().array();
    const double m1 = dxhat.mean();
    const double m2 = (dxhat.array() * cache.xhat.row(r).array()).mean();
    dx.row(r) = cache.inv_std[r] *
                (dxhat.array() - m1 - cache.xhat.row(r).array() * m2);
  }
  return dx;
}

struct LayerCache {
  Mat x_in;           // layer input
  Mat q, k, v;        // L x h
  std::vector<Mat> attn;  // per head, L x L softmax rows
  Mat ctx;            // concatenated heads, L x h
  Mat attn_out;       // ctx*Wo + bo, pre-dropout
  Mat drop1;          // dropout mask (scaled), empty in eval
  Mat r1;
  LnCache ln1;
  Mat x1;
  Mat u;              // x1*W1 + b1
  Mat g;              // gelu(u)
  Mat ffn_out;        // g*W2 + b2, pre-dropout
  Mat drop2;
  Mat r2;
  LnCache ln2;
  Mat x2;
};

struct SeqCache {
  std::size_t len = 0;
  Mat emb;  // post-fuse, pre-LN
  LnCache emb_ln;
  Mat x0;
  std::vector<LayerCache> layers;
  Mat mapped;  // m x h_m, trainable-mapper output
  double logit = 0.0;
  double prob = 0.0;
};

Mat make_dropout_mask(Eigen::Index rows, Eigen::Index cols, double p,
                      std::mt19937_64& rng) {
  Mat mask(rows, cols);
  const double keep = 1.0 - p;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      mask(i, j) = rnd01(rng) < keep ? 1.0 / keep : 0.0;
  return mask;
}

// Forward over the non-PAD prefix of one prepared example.
void forward_seq(const PreparedExample& ex, const ModelParams& params,
                 std::mt19937_64* dropout_rng, SeqCache& cache) {
  const auto& cfg = params.config;
  const auto L = static_cast<Eigen::Index>(ex.length);
  const Eigen::Index h = cfg.h_m;
  const int H = cfg.heads;
  const Eigen::Index d = h / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  cache.len = ex.length;

  Mat emb(L, h);
  for (Eigen::Index t = 0; t < L; ++t) {
    const int id = ex.tok.ids[static_cast<std::size_t>(t)];
    if (id < 0 || id >= cfg.vocab_size)
      throw std::out_of_range("token id " + std::to_string(id) +
                              " outside vocab");
    emb.row(t) = params.tok_emb.row(id) + params.pos_emb.row(t);
  }

  // Bio features are added before the embedding LayerNorm.
  if (!ex.spans.empty() && ex.raw.rows.rows() > 0) {
    cache.mapped = map_features(ex.raw, params.mapper);
    for (std::size_t i = 0; i < ex.spans.size(); ++i) {
      const auto& s = ex.spans[i];
      for (std::size_t p = s.token_start;
           p < s.token_end && p < ex.length; ++p)
        emb.row(static_cast<Eigen::Index>(p)) +=
            cache.mapped.row(static_cast<Eigen::Index>(i));
    }
  }
  cache.emb = std::move(emb);
  cache.x0 = layer_norm(cache.emb, params.emb_ln_g, params.emb_ln_b,
                        &cache.emb_ln);

  cache.layers.resize(static_cast<std::size_t>(cfg.layers));
  Mat x = cache.x0;
  for (int li = 0; li < cfg.layers; ++li) {
    auto& lc = cache.layers[static_cast<std::size_t>(li)];
    const auto& lp = params.layers[static_cast<std::size_t>(li)];
    lc.x_in = x;

    lc.q = (x * lp.wq).rowwise() + lp.bq.transpose();
    lc.k = (x * lp.wk).rowwise() + lp.bk.transpose();
    lc.v = (x * lp.wv).rowwise() + lp.bv.transpose();

    lc.attn.assign(static_cast<std::size_t>(H), Mat());
    lc.ctx.resize(L, h);
    for (int hi = 0; hi < H; ++hi) {
      const auto qh = lc.q.middleCols(hi * d, d);
      const auto kh = lc.k.middleCols(hi * d, d);
      const auto vh = lc.v.middleCols(hi * d, d);
      Mat s = (qh * kh.transpose()) * scale;
      // All prefix positions are non-PAD, so no column masking is needed
      // here; PAD never enters the prefix.
      Mat a(L, L);
      for (Eigen::Index r = 0; r < L; ++r) {
        const double mx = s.row(r).maxCoeff();
        Eigen::RowVectorXd e = (s.row(r).array() - mx).exp();
        a.row(r) = e / e.sum();
      }
      lc.attn[static_cast<std::size_t>(hi)] = a;
      lc.ctx.middleCols(hi * d, d) = a * vh;
    }

    lc.attn_out = (lc.ctx * lp.wo).rowwise() + lp.bo.transpose();
    Mat o = lc.attn_out;
    if (dropout_rng && cfg.dropout > 0.0) {
      lc.drop1 = make_dropout_mask(L, h, cfg.dropout, *dropout_rng);
      o = o.cwiseProduct(lc.drop1);
    }
    lc.r1 = lc.x_in + o;
    lc.x1 = layer_norm(lc.r1, lp.ln1_g, lp.ln1_b, &lc.ln1);

    lc.u = (lc.x1 * lp.w1).rowwise() + lp.b1.transpose();
    lc.g = lc.u.unaryExpr([](double v) { return gelu(v); });
    lc.ffn_out = (lc.g * lp.w2).rowwise() + lp.b2.transpose();
    Mat f = lc.ffn_out;
    if (dropout_rng && cfg.dropout > 0.0) {
      lc.drop2 = make_dropout_mask(L, h, cfg.dropout, *dropout_rng);
      f = f.cwiseProduct(lc.drop2);
    }
    lc.r2 = lc.x1 + f;
    lc.x2 = layer_norm(lc.r2, lp.ln2_g, lp.ln2_b, &lc.ln2);
    x = lc.x2;

    if (!x.allFinite())
      throw std::runtime_error("non-finite activations in encoder layer " +
                               std::to_string(li));
  }

  const Vec pooled = x.row(0).transpose();
  cache.logit = params.cls_w.dot(pooled) + params.cls_b;
  cache.prob = sigmoid(cache.logit);
}

// Backpropagates dlogit through one cached sequence into grads.
void backward_seq(const PreparedExample& ex, const ModelParams& params,
                  const SeqCache& cache, double dlogit, ModelParams& grads) {
  const auto& cfg = params.config;
  const auto L = static_cast<Eigen::Index>(cache.len);
  const Eigen::Index h = cfg.h_m;
  const int H = cfg.heads;
  const Eigen::Index d = h / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  const Mat& x_last = cfg.layers > 0
                          ? cache.layers[static_cast<std::size_t>(cfg.layers - 1)].x2
                          : cache.x0;
  grads.cls_w += dlogit * x_last.row(0).transpose();
  grads.cls_b += dlogit;

  Mat dx = Mat::Zero(L, h);
  dx.row(0) = dlogit * params.cls_w.transpose();

  for (int li = cfg.layers - 1; li >= 0; --li) {
    const auto& lc = cache.layers[static_cast<std::size_t>(li)];
    const auto& lp = params.layers[static_cast<std::size_t>(li)];
    auto& lg = grads.layers[static_cast<std::size_t>(li)];

    Mat dr2 = layer_norm_backward(dx, lc.ln2, lp.ln2_g, lg.ln2_g, lg.ln2_b);
    Mat dx1 = dr2;
    Mat df = dr2;
    if (lc.drop2.size() > 0) df = df.cwiseProduct(lc.drop2);

    lg.w2 += lc.g.transpose() * df;
    lg.b2 += df.colwise().sum().transpose();
    Mat dg = df * lp.w2.transpose();
    Mat du = dg.cwiseProduct(lc.u.unaryExpr([](double v) { return gelu_grad(v); }));
    lg.w1 += lc.x1.transpose() * du;
    lg.b1 += du.colwise().sum().transpose();
    dx1 += du * lp.w1.transpose();

    Mat dr1 = layer_norm_backward(dx1, lc.ln1, lp.ln1_g, lg.ln1_g, lg.ln1_b);
    Mat dx_in = dr1;
    Mat dO = dr1;
    if (lc.drop1.size() > 0) dO = dO.cwiseProduct(lc.drop1);

    lg.wo += lc.ctx.transpose() * dO;
    lg.bo += dO.colwise().sum().transpose();
    Mat dctx = dO * lp.wo.transpose();

    Mat dq = Mat::Zero(L, h), dk = Mat::Zero(L, h), dv = Mat::Zero(L, h);
    for (int hi = 0; hi < H; ++hi) {
      const auto& a = lc.attn[static_cast<std::size_t>(hi)];
      const auto vh = lc.v.middleCols(hi * d, d);
      const auto qh = lc.q.middleCols(hi * d, d);
      const auto kh = lc.k.middleCols(hi * d, d);
      const Mat dch = dctx.middleCols(hi * d, d);

      Mat da = dch * vh.transpose();
      dv.middleCols(hi * d, d) = a.transpose() * dch;

      Mat ds(L, L);
      for (Eigen::Index r = 0; r < L; ++r) {
        const double dot = a.row(r).dot(da.row(r));
        ds.row(r) =
            (a.row(r).array() * (da.row(r).array() - dot)).matrix();
      }
      ds *= scale;
      dq.middleCols(hi * d, d) = ds * kh;
      dk.middleCols(hi * d, d) = ds.transpose() * qh;
    }

    lg.wq += lc.x_in.transpose() * dq;
    lg.bq += dq.colwise().sum().transpose();
    lg.wk += lc.x_in.transpose() * dk;
    lg.bk += dk.colwise().sum().transpose();
    lg.wv += lc.x_in.transpose() * dv;
    lg.bv += dv.colwise().sum().transpose();

    dx_in += dq * lp.wq.transpose() + dk * lp.wk.transpose() +
             dv * lp.wv.transpose();
    dx = std::move(dx_in);
  }

  Mat demb =
      layer_norm_backward(dx, cache.emb_ln, params.emb_ln_g, grads.emb_ln_g,
                          grads.emb_ln_b);

  for (Eigen::Index t = 0; t < L; ++t) {
    const int id = ex.tok.ids[static_cast<std::size_t>(t)];
    grads.tok_emb.row(id) += demb.row(t);
    grads.pos_emb.row(t) += demb.row(t);
  }

  if (!ex.spans.empty() && cache.mapped.size() > 0) {
    for (std::size_t i = 0; i < ex.spans.size(); ++i) {
      if (!ex.raw.hits[i]) continue;  // OOV rows are forced zero
      const auto& s = ex.spans[i];
      Eigen::RowVectorXd dmapped = Eigen::RowVectorXd::Zero(h);
      for (std::size_t p = s.token_start;
           p < s.token_end && p < cache.len; ++p)
        dmapped += demb.row(static_cast<Eigen::Index>(p));
      grads.mapper.weight +=
          ex.raw.rows.row(static_cast<Eigen::Index>(i)).transpose() * dmapped;
      grads.mapper.bias += dmapped.transpose();
    }
  }
}

}  // namespace

void EncoderConfig::validate() const {
  if (h_m <= 0 || layers <= 0 || heads <= 0 || ffn <= 0 || max_len <= 0 ||
      vocab_size <= 0 || h_b <= 0)
    throw std::invalid_argument("encoder config: all sizes must be positive");
  if (h_m % heads != 0)
    throw std::invalid_argument("encoder config: h_m must be divisible by heads");
  if (dropout < 0.0 || dropout >= 1.0)
    throw std::invalid_argument("encoder config: dropout must lie in [0,1)");
}

ModelParams ModelParams::init(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config = config;
  std::mt19937_64 rng(seed ^ 0xE4C0DE2ULL);
  const double emb_scale = 0.02;
  const double lin_scale = 1.0 / std::sqrt(static_cast<double>(config.h_m));

  p.tok_emb.resize(config.vocab_size, config.h_m);
  fill_gauss(p.tok_emb, emb_scale, rng);
  p.tok_emb.row(Vocab::kPad).setZero();
  p.pos_emb.resize(config.max_len, config.h_m);
  fill_gauss(p.pos_emb, emb_scale, rng);
  p.emb_ln_g = Vec::Ones(config.h_m);
  p.emb_ln_b = Vec::Zero(config.h_m);

  p.layers.resize(static_cast<std::size_t>(config.layers));
  for (auto& l : p.layers) {
    l.wq.resize(config.h_m, config.h_m);
    l.wk.resize(config.h_m, config.h_m);
    l.wv.resize(config.h_m, config.h_m);
    l.wo.resize(config.h_m, config.h_m);
    fill_gauss(l.wq, lin_scale, rng);
    fill_gauss(l.wk, lin_scale, rng);
    fill_gauss(l.wv, lin_scale, rng);
    fill_gauss(l.wo, lin_scale, rng);
    l.bq = Vec::Zero(config.h_m);
    l.bk = Vec::Zero(config.h_m);
    l.bv = Vec::Zero(config.h_m);
    l.bo = Vec::Zero(config.h_m);
    l.ln1_g = Vec::Ones(config.h_m);
    l.ln1_b = Vec::Zero(config.h_m);
    l.ln2_g = Vec::Ones(config.h_m);
    l.ln2_b = Vec::Zero(config.h_m);
    l.w1.resize(config.h_m, config.ffn);
    fill_gauss(l.w1, lin_scale, rng);
    l.b1 = Vec::Zero(config.ffn);
    l.w2.resize(config.ffn, config.h_m);
    fill_gauss(l.w2, 1.0 / std::sqrt(static_cast<double>(config.ffn)), rng);
    l.b2 = Vec::Zero(config.h_m);
  }

  p.mapper.weight.resize(config.h_b, config.h_m);
  fill_gauss(p.mapper.weight, 1.0 / std::sqrt(static_cast<double>(config.h_b)),
             rng);
  p.mapper.bias = Vec::Zero(config.h_m);

  p.cls_w = Vec::Zero(config.h_m);
  p.cls_b = 0.0;
  return p;
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
  ModelParams g = other;
  visit_params(g, [](const std::string&, double* data, std::size_t n) {
    std::fill(data, data + n, 0.0);
  });
  return g;
}

void visit_params(ModelParams& p, const ParamVisitor& fn) {
  fn("tok_emb", p.tok_emb.data(), static_cast<std::size_t>(p.tok_emb.size()));
  fn("pos_emb", p.pos_emb.data(), static_cast<std::size_t>(p.pos_emb.size()));
  fn("emb_ln_g", p.emb_ln_g.data(), static_cast<std::size_t>(p.emb_ln_g.size()));
  fn("emb_ln_b", p.emb_ln_b.data(), static_cast<std::size_t>(p.emb_ln_b.size()));
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    auto& l = p.layers[i];
    const std::string pre = "layer" + std::to_string(i) + ".";
    auto visit_mat = [&](const char* name, Mat& m) {
      fn(pre + name, m.data(), static_cast<std::size_t>(m.size()));
    };
    auto visit_vec = [&](const char* name, Vec& v) {
      fn(pre + name, v.data(), static_cast<std::size_t>(v.size()));
    };
    visit_mat("wq", l.wq);
    visit_vec("bq", l.bq);
    visit_mat("wk", l.wk);
    visit_vec("bk", l.bk);
    visit_mat("wv", l.wv);
    visit_vec("bv", l.bv);
    visit_mat("wo", l.wo);
    visit_vec("bo", l.bo);
    visit_vec("ln1_g", l.ln1_g);
    visit_vec("ln1_b", l.ln1_b);
    visit_mat("w1", l.w1);
    visit_vec("b1", l.b1);
    visit_mat("w2", l.w2);
    visit_vec("b2", l.b2);
    visit_vec("ln2_g", l.ln2_g);
    visit_vec("ln2_b", l.ln2_b);
  }
  fn("mapper.weight", p.mapper.weight.data(),
     static_cast<std::size_t>(p.mapper.weight.size()));
  fn("mapper.bias", p.mapper.bias.data(),
     static_cast<std::size_t>(p.mapper.bias.size()));
  fn("cls_w", p.cls_w.data(), static_cast<std::size_t>(p.cls_w.size()));
  fn("cls_b", &p.cls_b, 1);
}

PreparedExample prepare_example(const PIRecord& record, const Vocab& vocab,
                                const EmbeddingTable* table,
                                const TrainConfig& cfg,
                                const EncoderConfig& enc) {
  PreparedExample ex;
  ex.label = record.label;
  const TokenizedInput tok = tokenize(record.text, vocab);
  BridgedInput bridged =
      cfg.use_bridging ? insert_bridging_tokens(tok) : as_bridged(tok);
  ex.tok = truncate_pad(bridged, static_cast<std::size_t>(enc.max_len));
  ex.length = 0;
  for (std::size_t i = 0; i < ex.tok.size(); ++i)
    if (ex.tok.attn_mask[i]) ex.length = i + 1;
  if (cfg.use_bioembed) {
    if (!table)
      throw std::invalid_argument("use_bioembed requires an embedding table");
    ex.spans = reconstruct_words(ex.tok);
    // Spans clipped by truncation keep only their in-prefix part.
    std::erase_if(ex.spans, [&](const EnglishWordSpan& s) {
      return s.token_start >= ex.length;
    });
    ex.raw = extract_bio_features(ex.spans, *table);
  }
  return ex;
}

double forward_prob(const PreparedExample& ex, const ModelParams& params) {
  SeqCache cache;
  forward_seq(ex, params, nullptr, cache);
  return cache.prob;
}

BatchGradResult loss_and_grads(const std::vector<const PreparedExample*>& batch,
                               const ModelParams& params, ModelParams& grads,
                               std::mt19937_64* dropout_rng) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  BatchGradResult res;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const PreparedExample* ex : batch) {
    if (ex->label != 0 && ex->label != 1)
      throw std::invalid_argument("label must be 0 or 1");
    SeqCache cache;
    forward_seq(*ex, params, dropout_rng, cache);
    res.probs.push_back(cache.prob);
    res.loss += inv_b * bce_from_logit(cache.logit, ex->label);
    const double dlogit = inv_b * (cache.prob - ex->label);
    backward_seq(*ex, params, cache, dlogit, grads);
  }
  if (!std::isfinite(res.loss))
    throw std::runtime_error("non-finite training loss");
  return res;
}

namespace {

struct AdamState {
  std::vector<std::vector<double>> m, v;
};

void adam_step(ModelParams& params, ModelParams& grads, AdamState& state,
               const TrainConfig& cfg, int step) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  // Global-norm clipping first.
  double sq = 0.0;
  visit_params(grads, [&](const std::string&, double* g, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) sq += g[i] * g[i];
  });
  const double norm = std::sqrt(sq);
  const double clip_scale =
      (cfg.grad_clip > 0.0 && norm > cfg.grad_clip) ? cfg.grad_clip / norm : 1.0;

  std::vector<double*> gptrs;
  std::vector<std::size_t> gsizes;
  visit_params(grads, [&](const std::string&, double* g, std::size_t n) {
    gptrs.push_back(g);
    gsizes.push_back(n);
  });
  if (state.m.empty()) {
    state.m.resize(gptrs.size());
    state.v.resize(gptrs.size());
    for (std::size_t i = 0; i < gptrs.size(); ++i) {
      state.m[i].assign(gsizes[i], 0.0);
      state.v[i].assign(gsizes[i], 0.0);
    }
  }

  const double bc1 = 1.0 - std::pow(beta1, step);
  const double bc2 = 1.0 - std::pow(beta2, step);
  std::size_t idx = 0;
  visit_params(params, [&](const std::string&, double* p, std::size_t n) {
    double* g = gptrs[idx];
    auto& m = state.m[idx];
    auto& v = state.v[idx];
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = g[i] * clip_scale;
      m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
      v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
      p[i] -= cfg.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
    ++idx;
  });
}

}  // namespace

TrainResult train(const CorpusSplit& splits, const Vocab& vocab,
                  const EmbeddingTable* table, const EncoderConfig& enc,
                  const TrainConfig& cfg) {
  enc.validate();
  if (splits.train.empty() || splits.dev.empty())
    throw std::invalid_argument("train and dev splits must be non-empty");
  if (cfg.epochs < 1 || cfg.learning_rate <= 0.0)
    throw std::invalid_argument("invalid training config");

  std::vector<PreparedExample> train_ex, dev_ex;
  train_ex.reserve(splits.train.size());
  for (const auto& r : splits.train)
    train_ex.push_back(prepare_example(r, vocab, table, cfg, enc));
  dev_ex.reserve(splits.dev.size());
  for (const auto& r : splits.dev)
    dev_ex.push_back(prepare_example(r, vocab, table, cfg, enc));

  ModelParams params = ModelParams::init(enc, cfg.seed);
  AdamState adam;
  TrainResult result;
  result.best_dev_f1 = -1.0;

  std::mt19937_64 dropout_rng(cfg.seed ^ 0xD409011ULL);
  int step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(train_ex.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 shuffle_rng(cfg.seed + 1000003ULL * (epoch + 1));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng() % i]);

    double loss_sum = 0.0;
    std::size_t batch_count = 0;
    for (std::size_t off = 0; off < order.size();
         off += static_cast<std::size_t>(cfg.batch_size)) {
      std::vector<const PreparedExample*> batch;
      for (std::size_t i = off;
           i < std::min(order.size(),
                        off + static_cast<std::size_t>(cfg.batch_size));
           ++i)
        batch.push_back(&train_ex[order[i]]);
      ModelParams grads = ModelParams::zeros_like(params);
      const auto res = loss_and_grads(batch, params, grads,
                                      enc.dropout > 0.0 ? &dropout_rng : nullptr);
      if (res.loss > 1e3)
        throw std::runtime_error("training diverged: loss " +
                                 std::to_string(res.loss));
      loss_sum += res.loss;
      ++batch_count;
      adam_step(params, grads, adam, cfg, ++step);
    }

    PredictionSet dev_preds;
    for (const auto& ex : dev_ex) {
      dev_preds.probs.push_back(forward_prob(ex, params));
      dev_preds.labels.push_back(ex.label);
    }
    const auto f1 = f1_at_threshold(dev_preds, cfg.eval_threshold);

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(batch_count);
    stats.dev_f1 = f1.f1;
    stats.dev_brier = brier(dev_preds);
    bool has_pos = false, has_neg = false;
    for (int y : dev_preds.labels) (y ? has_pos : has_neg) = true;
    stats.dev_auroc = (has_pos && has_neg) ? auroc(dev_preds) : 0.5;
    result.history.push_back(stats);

    if (stats.dev_f1 > result.best_dev_f1) {
      result.best_dev_f1 = stats.dev_f1;
      result.best_epoch = epoch;
      result.params = params;
    }
  }
  return result;
}

std::vector<double> predict(const std::vector<PIRecord>& records,
                            const Vocab& vocab, const EmbeddingTable* table,
                            const ModelParams& params, const TrainConfig& cfg,
                            int batch_size) {
  (void)batch_size;  // sequences are independent in eval mode
  std::vector<double> probs;
  probs.reserve(records.size());
  for (const auto& r : records) {
    const auto ex = prepare_example(r, vocab, table, cfg, params.config);
    probs.push_back(forward_prob(ex, params));
  }
  return probs;
}

namespace {

constexpr char kCkptMagic[] = "BIOBRIDGE_CKPT_V1\n";

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::ifstream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void ModelParams::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kCkptMagic, sizeof(kCkptMagic) - 1);
  const std::int64_t header[8] = {config.h_m,     config.layers, config.heads,
                                  config.ffn,     config.max_len,
                                  config.vocab_size, config.h_b,
                                  static_cast<std::int64_t>(config.dropout * 1e9)};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  ModelParams& self = const_cast<ModelParams&>(*this);
  visit_params(self, [&](const std::string& name, double* data, std::size_t n) {
    write_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(out, n);
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(n * sizeof(double)));
  });
}

ModelParams ModelParams::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[sizeof(kCkptMagic) - 1];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  std::int64_t header[8];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  EncoderConfig cfg;
  cfg.h_m = static_cast<int>(header[0]);
  cfg.layers = static_cast<int>(header[1]);
  cfg.heads = static_cast<int>(header[2]);
  cfg.ffn = static_cast<int>(header[3]);
  cfg.max_len = static_cast<int>(header[4]);
  cfg.vocab_size = static_cast<int>(header[5]);
  cfg.h_b = static_cast<int>(header[6]);
  cfg.dropout = static_cast<double>(header[7]) / 1e9;
  ModelParams p = ModelParams::init(cfg, 0);
  visit_params(p, [&](const std::string& name, double* data, std::size_t n) {
    const std::uint64_t name_len = read_u64(in);
    std::string stored(name_len, '\0');
    in.read(stored.data(), static_cast<std::streamsize>(name_len));
    if (stored != name)
      throw std::runtime_error("checkpoint tensor order mismatch: expected " +
                               name + ", found " + stored);
    const std::uint64_t count = read_u64(in);
    if (count != n)
      throw std::runtime_error("checkpoint tensor size mismatch for " + name);
    in.read(reinterpret_cast<char*>(data),
            static_cast<std::streamsize>(n * sizeof(double)));
  });
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return p;
}

}  // namespace biobridge
