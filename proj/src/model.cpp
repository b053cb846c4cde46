#include "spanmetric/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spanmetric/error.hpp"
#include "spanmetric/rng.hpp"

namespace spanmetric::net {

void EncoderConfig::validate() const {
  if (bucket_count <= Vocab::kReserved) throw ConfigError("bucket_count too small");
  if (model_dim <= 0 || layers <= 0 || heads <= 0 || ff_dim <= 0 || max_length < 2 ||
      head_hidden <= 0) {
    throw ConfigError("encoder sizes must be positive");
  }
  if (model_dim % heads != 0) {
    throw ConfigError("model_dim " + std::to_string(model_dim) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
}

Layout::Layout(const EncoderConfig& cfg) : config(cfg) {
  cfg.validate();
  const auto d = static_cast<std::size_t>(cfg.model_dim);
  const auto f = static_cast<std::size_t>(cfg.ff_dim);
  const auto hh = static_cast<std::size_t>(cfg.head_hidden);
  auto add = [this](std::string name, std::size_t rows, std::size_t cols, int depth) {
    slots.push_back(Slot{std::move(name), total, rows, cols, depth});
    total += rows * cols;
    return slots.size() - 1;
  };
  tok_emb = add("embed.token", static_cast<std::size_t>(cfg.bucket_count), d, 0);
  pos_emb = add("embed.position", static_cast<std::size_t>(cfg.max_length), d, 0);
  type_emb = add("embed.segment", kSegmentTypes, d, 0);
  emb_ln_g = add("embed.norm.gain", 1, d, 0);
  emb_ln_b = add("embed.norm.bias", 1, d, 0);
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    const int depth = l + 1;
    LayerSlots s{};
    s.ln1_g = add(p + "attn_norm.gain", 1, d, depth);
    s.ln1_b = add(p + "attn_norm.bias", 1, d, depth);
    s.wq = add(p + "attn.query.weight", d, d, depth);
    s.bq = add(p + "attn.query.bias", 1, d, depth);
    s.wk = add(p + "attn.key.weight", d, d, depth);
    s.bk = add(p + "attn.key.bias", 1, d, depth);
    s.wv = add(p + "attn.value.weight", d, d, depth);
    s.bv = add(p + "attn.value.bias", 1, d, depth);
    s.wo = add(p + "attn.output.weight", d, d, depth);
    s.bo = add(p + "attn.output.bias", 1, d, depth);
    s.ln2_g = add(p + "ffn_norm.gain", 1, d, depth);
    s.ln2_b = add(p + "ffn_norm.bias", 1, d, depth);
    s.w1 = add(p + "ffn.in.weight", d, f, depth);
    s.b1 = add(p + "ffn.in.bias", 1, f, depth);
    s.w2 = add(p + "ffn.out.weight", f, d, depth);
    s.b2 = add(p + "ffn.out.bias", 1, d, depth);
    layers.push_back(s);
  }
  mix = add("pool.mix", 1, static_cast<std::size_t>(cfg.layers) + 1, kHeadDepth);
  out_ln_g = add("pool.norm.gain", 1, d, kHeadDepth);
  out_ln_b = add("pool.norm.bias", 1, d, kHeadDepth);
  sent_w1 = add("sentence.hidden.weight", d, hh, kHeadDepth);
  sent_b1 = add("sentence.hidden.bias", 1, hh, kHeadDepth);
  sent_w2 = add("sentence.output.weight", hh, 1, kHeadDepth);
  sent_b2 = add("sentence.output.bias", 1, 1, kHeadDepth);
  word_w = add("word.weight", d, kSeverityCount, kHeadDepth);
  word_b = add("word.bias", 1, kSeverityCount, kHeadDepth);
}

Parameters::Parameters(const EncoderConfig& config)
    : Parameters(std::make_shared<const Layout>(config)) {}

Parameters::Parameters(std::shared_ptr<const Layout> layout)
    : layout_(std::move(layout)), values_(layout_->total, 0.0) {}

Parameters Parameters::zeros_like() const { return Parameters(layout_); }

void Parameters::set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

Parameters Parameters::initialize(const EncoderConfig& config, std::uint64_t seed) {
  Parameters p(config);
  const Layout& lay = p.layout();
  Rng rng(seed);
  auto fill_normal = [&](std::size_t slot, double stddev) {
    double* v = p.at(slot);
    for (std::size_t i = 0; i < lay.slots[slot].size(); ++i) v[i] = stddev * rng.normal();
  };
  auto fill_const = [&](std::size_t slot, double c) {
    double* v = p.at(slot);
    std::fill(v, v + lay.slots[slot].size(), c);
  };
  const double d = config.model_dim;
  const double depth_scale = 1.0 / std::sqrt(2.0 * std::max(1, config.layers));
  fill_normal(lay.tok_emb, 1.0);
  fill_normal(lay.pos_emb, 0.1);
  fill_normal(lay.type_emb, 0.5);
  fill_const(lay.emb_ln_g, 1.0);
  for (const auto& s : lay.layers) {
    fill_const(s.ln1_g, 1.0);
    fill_normal(s.wq, 1.0 / std::sqrt(d));
    fill_normal(s.wk, 1.0 / std::sqrt(d));
    fill_normal(s.wv, 1.0 / std::sqrt(d));
    fill_normal(s.wo, depth_scale / std::sqrt(d));
    fill_const(s.ln2_g, 1.0);
    fill_normal(s.w1, 1.0 / std::sqrt(d));
    fill_normal(s.w2, depth_scale / std::sqrt(static_cast<double>(config.ff_dim)));
  }
  fill_const(lay.out_ln_g, 1.0);
  fill_normal(lay.sent_w1, 1.0 / std::sqrt(d));
  fill_normal(lay.sent_w2, 1.0 / std::sqrt(static_cast<double>(config.head_hidden)));
  fill_normal(lay.word_w, 1.0 / std::sqrt(d));
  return p;
}

namespace {

struct Mat {
  std::vector<double> v;
  std::size_t r = 0, c = 0;

  void reset(std::size_t rows, std::size_t cols) {
    r = rows;
    c = cols;
    v.assign(rows * cols, 0.0);
  }
  double* row(std::size_t i) { return v.data() + i * c; }
  const double* row(std::size_t i) const { return v.data() + i * c; }
  double* data() { return v.data(); }
  const double* data() const { return v.data(); }
};

// C[m x n] (+)= A[m x k] B[k x n]
void mm(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
        bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C[k x n] += A[m x k]^T B[m x n]
void mm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
           std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

// C[m x k] (+)= A[m x n] B[k x n]^T
void mm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
           std::size_t k, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * n;
    double* ci = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += ai[j] * bp[j];
      ci[p] = accumulate ? ci[p] + s : s;
    }
  }
}

void add_bias(double* y, const double* b, std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] += b[j];
}

void colsum_into(const double* dy, double* db, std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) db[j] += dy[i * n + j];
}

constexpr double kLnEps = 1e-5;

struct NormCache {
  std::vector<double> xhat;
  std::vector<double> rstd;
};

void layer_norm(const double* x, const double* g, const double* b, double* y, NormCache& cache,
                std::size_t m, std::size_t d) {
  cache.xhat.assign(m * d, 0.0);
  cache.rstd.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* xi = x + i * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xi[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xi[j] - mean) * (xi[j] - mean);
    var /= static_cast<double>(d);
    const double rstd = 1.0 / std::sqrt(var + kLnEps);
    cache.rstd[i] = rstd;
    for (std::size_t j = 0; j < d; ++j) {
      const double xh = (xi[j] - mean) * rstd;
      cache.xhat[i * d + j] = xh;
      y[i * d + j] = xh * g[j] + b[j];
    }
  }
}

// dx is accumulated into.
void layer_norm_backward(const double* dy, const double* g, const NormCache& cache, double* dx,
                         double* dg, double* db, std::size_t m, std::size_t d) {
  const double inv_d = 1.0 / static_cast<double>(d);
  for (std::size_t i = 0; i < m; ++i) {
    const double* dyi = dy + i * d;
    const double* xh = cache.xhat.data() + i * d;
    double sum_dxh = 0.0, sum_dxh_xh = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double dxh = dyi[j] * g[j];
      sum_dxh += dxh;
      sum_dxh_xh += dxh * xh[j];
      dg[j] += dyi[j] * xh[j];
      db[j] += dyi[j];
    }
    const double rstd = cache.rstd[i];
    for (std::size_t j = 0; j < d; ++j) {
      const double dxh = dyi[j] * g[j];
      dx[i * d + j] += rstd * (dxh - inv_d * sum_dxh - xh[j] * inv_d * sum_dxh_xh);
    }
  }
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

double gelu_grad(double x) {
  const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

struct LayerCache {
  NormCache ln1;
  Mat a, q, k, v;
  std::vector<double> probs;  // heads x L x L
  Mat o, h;
  NormCache ln2;
  Mat c, u, g;
};

struct ForwardCache {
  std::size_t length = 0;
  NormCache ln_emb;
  std::vector<Mat> hidden;  // layers + 1 states
  std::vector<LayerCache> layers;
  std::vector<double> mix;
  Mat pooled;
  NormCache ln_out;
  Mat z;
  std::vector<double> z1, a1;
  double yhat = 0.0;
};

Activations::Activations() : cache_(std::make_unique<ForwardCache>()) {}
Activations::~Activations() = default;
Activations::Activations(Activations&&) noexcept = default;
Activations& Activations::operator=(Activations&&) noexcept = default;

std::vector<double> layer_mix_weights(const Parameters& params) {
  const Layout& lay = params.layout();
  const std::size_t k = static_cast<std::size_t>(lay.config.layers) + 1;
  const double* logits = params.at(lay.mix);
  const double m = *std::max_element(logits, logits + k);
  std::vector<double> w(k);
  double z = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    w[i] = std::exp(logits[i] - m);
    z += w[i];
  }
  for (auto& x : w) x /= z;
  return w;
}

namespace {

void check_input(const Parameters& params, const ModelInput& input) {
  const auto& cfg = params.config();
  if (input.ids.size() != input.types.size()) throw ShapeError("input ids and types differ in length");
  if (input.ids.empty()) throw ShapeError("empty model input");
  if (input.ids.size() > static_cast<std::size_t>(cfg.max_length)) {
    throw ShapeError("input of length " + std::to_string(input.ids.size()) +
                     " exceeds max_length " + std::to_string(cfg.max_length));
  }
  if (input.translation_length + 1 > input.ids.size()) {
    throw ShapeError("translation length exceeds input length");
  }
  for (std::size_t i = 0; i < input.ids.size(); ++i) {
    if (input.ids[i] < 0 || input.ids[i] >= cfg.bucket_count) {
      throw ShapeError("token id out of vocabulary range at position " + std::to_string(i));
    }
    if (input.types[i] < 0 || input.types[i] >= kSegmentTypes) {
      throw ShapeError("segment type out of range at position " + std::to_string(i));
    }
  }
}

}  // namespace

ForwardOutput forward(const Parameters& params, const ModelInput& input) {
  Activations acts;
  return forward(params, input, acts);
}

ForwardOutput forward(const Parameters& params, const ModelInput& input, Activations& acts) {
  check_input(params, input);
  const Layout& lay = params.layout();
  const auto& cfg = lay.config;
  const std::size_t L = input.size();
  const std::size_t d = static_cast<std::size_t>(cfg.model_dim);
  const std::size_t H = static_cast<std::size_t>(cfg.heads);
  const std::size_t dh = d / H;
  const std::size_t F = static_cast<std::size_t>(cfg.ff_dim);
  const std::size_t hh = static_cast<std::size_t>(cfg.head_hidden);
  const std::size_t N = static_cast<std::size_t>(cfg.layers);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  ForwardCache& c = acts.cache();
  c.length = L;
  c.hidden.assign(N + 1, Mat{});
  c.layers.assign(N, LayerCache{});

  Mat x0;
  x0.reset(L, d);
  const double* tok = params.at(lay.tok_emb);
  const double* pos = params.at(lay.pos_emb);
  const double* typ = params.at(lay.type_emb);
  for (std::size_t i = 0; i < L; ++i) {
    const double* te = tok + static_cast<std::size_t>(input.ids[i]) * d;
    const double* pe = pos + i * d;
    const double* ye = typ + static_cast<std::size_t>(input.types[i]) * d;
    double* xi = x0.row(i);
    for (std::size_t j = 0; j < d; ++j) xi[j] = te[j] + pe[j] + ye[j];
  }
  c.hidden[0].reset(L, d);
  layer_norm(x0.data(), params.at(lay.emb_ln_g), params.at(lay.emb_ln_b), c.hidden[0].data(),
             c.ln_emb, L, d);

  std::vector<double> scores(L);
  for (std::size_t l = 0; l < N; ++l) {
    const LayerSlots& s = lay.layers[l];
    LayerCache& lc = c.layers[l];
    const Mat& x = c.hidden[l];
    lc.a.reset(L, d);
    layer_norm(x.data(), params.at(s.ln1_g), params.at(s.ln1_b), lc.a.data(), lc.ln1, L, d);
    lc.q.reset(L, d);
    lc.k.reset(L, d);
    lc.v.reset(L, d);
    mm(lc.a.data(), params.at(s.wq), lc.q.data(), L, d, d, false);
    add_bias(lc.q.data(), params.at(s.bq), L, d);
    mm(lc.a.data(), params.at(s.wk), lc.k.data(), L, d, d, false);
    add_bias(lc.k.data(), params.at(s.bk), L, d);
    mm(lc.a.data(), params.at(s.wv), lc.v.data(), L, d, d, false);
    add_bias(lc.v.data(), params.at(s.bv), L, d);

    lc.probs.assign(H * L * L, 0.0);
    lc.o.reset(L, d);
    for (std::size_t h = 0; h < H; ++h) {
      const std::size_t off = h * dh;
      for (std::size_t i = 0; i < L; ++i) {
        const double* qi = lc.q.row(i) + off;
        double mx = -1e300;
        for (std::size_t j = 0; j < L; ++j) {
          const double* kj = lc.k.row(j) + off;
          double sdot = 0.0;
          for (std::size_t t = 0; t < dh; ++t) sdot += qi[t] * kj[t];
          scores[j] = sdot * scale;
          mx = std::max(mx, scores[j]);
        }
        double* p = lc.probs.data() + (h * L + i) * L;
        double z = 0.0;
        for (std::size_t j = 0; j < L; ++j) {
          p[j] = std::exp(scores[j] - mx);
          z += p[j];
        }
        const double inv = 1.0 / z;
        double* oi = lc.o.row(i) + off;
        for (std::size_t j = 0; j < L; ++j) {
          p[j] *= inv;
          const double* vj = lc.v.row(j) + off;
          for (std::size_t t = 0; t < dh; ++t) oi[t] += p[j] * vj[t];
        }
      }
    }
    lc.h.reset(L, d);
    mm(lc.o.data(), params.at(s.wo), lc.h.data(), L, d, d, false);
    add_bias(lc.h.data(), params.at(s.bo), L, d);
    for (std::size_t i = 0; i < L * d; ++i) lc.h.v[i] += x.v[i];

    lc.c.reset(L, d);
    layer_norm(lc.h.data(), params.at(s.ln2_g), params.at(s.ln2_b), lc.c.data(), lc.ln2, L, d);
    lc.u.reset(L, F);
    mm(lc.c.data(), params.at(s.w1), lc.u.data(), L, d, F, false);
    add_bias(lc.u.data(), params.at(s.b1), L, F);
    lc.g.reset(L, F);
    for (std::size_t i = 0; i < L * F; ++i) lc.g.v[i] = gelu(lc.u.v[i]);
    Mat& out = c.hidden[l + 1];
    out.reset(L, d);
    mm(lc.g.data(), params.at(s.w2), out.data(), L, F, d, false);
    add_bias(out.data(), params.at(s.b2), L, d);
    for (std::size_t i = 0; i < L * d; ++i) out.v[i] += lc.h.v[i];
  }

  c.pooled.reset(L, d);
  if (cfg.layer_mix) {
    c.mix = layer_mix_weights(params);
    for (std::size_t l = 0; l <= N; ++l) {
      const double w = c.mix[l];
      for (std::size_t i = 0; i < L * d; ++i) c.pooled.v[i] += w * c.hidden[l].v[i];
    }
  } else {
    c.mix.clear();
    c.pooled.v = c.hidden[N].v;
  }
  c.z.reset(L, d);
  layer_norm(c.pooled.data(), params.at(lay.out_ln_g), params.at(lay.out_ln_b), c.z.data(),
             c.ln_out, L, d);

  // Sentence head on the [cls] position.
  c.z1.assign(hh, 0.0);
  mm(c.z.row(0), params.at(lay.sent_w1), c.z1.data(), 1, d, hh, false);
  const double* b1 = params.at(lay.sent_b1);
  c.a1.assign(hh, 0.0);
  for (std::size_t j = 0; j < hh; ++j) {
    c.z1[j] += b1[j];
    c.a1[j] = std::tanh(c.z1[j]);
  }
  const double* w2 = params.at(lay.sent_w2);
  double z2 = *params.at(lay.sent_b2);
  for (std::size_t j = 0; j < hh; ++j) z2 += c.a1[j] * w2[j];
  c.yhat = sigmoid(z2);

  ForwardOutput out;
  out.sentence_score = c.yhat;
  const std::size_t n = input.translation_length;
  out.word_logits.assign(n, {});
  const double* ww = params.at(lay.word_w);
  const double* wb = params.at(lay.word_b);
  for (std::size_t i = 0; i < n; ++i) {
    const double* zi = c.z.row(i + 1);
    for (std::size_t k = 0; k < kSeverityCount; ++k) {
      double s = wb[k];
      for (std::size_t j = 0; j < d; ++j) s += zi[j] * ww[j * kSeverityCount + k];
      out.word_logits[i][k] = s;
    }
  }
  return out;
}

void backward(const Parameters& params, const ModelInput& input, const Activations& acts,
              double d_score, std::span<const std::array<double, kSeverityCount>> d_logits,
              Parameters& grads) {
  const Layout& lay = params.layout();
  const auto& cfg = lay.config;
  const ForwardCache& c = acts.cache();
  const std::size_t L = input.size();
  if (c.length != L) throw ShapeError("backward: activations do not match input");
  if (d_logits.size() != input.translation_length) {
    throw ShapeError("backward: expected " + std::to_string(input.translation_length) +
                     " logit gradient rows, got " + std::to_string(d_logits.size()));
  }
  if (grads.size() != params.size()) throw ShapeError("backward: gradient buffer layout mismatch");
  const std::size_t d = static_cast<std::size_t>(cfg.model_dim);
  const std::size_t H = static_cast<std::size_t>(cfg.heads);
  const std::size_t dh = d / H;
  const std::size_t F = static_cast<std::size_t>(cfg.ff_dim);
  const std::size_t hh = static_cast<std::size_t>(cfg.head_hidden);
  const std::size_t N = static_cast<std::size_t>(cfg.layers);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Mat dz;
  dz.reset(L, d);

  // Word head.
  const double* ww = params.at(lay.word_w);
  double* gww = grads.at(lay.word_w);
  double* gwb = grads.at(lay.word_b);
  for (std::size_t i = 0; i < d_logits.size(); ++i) {
    const auto& dl = d_logits[i];
    const double* zi = c.z.row(i + 1);
    double* dzi = dz.row(i + 1);
    for (std::size_t k = 0; k < kSeverityCount; ++k) gwb[k] += dl[k];
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kSeverityCount; ++k) {
        gww[j * kSeverityCount + k] += zi[j] * dl[k];
        acc += ww[j * kSeverityCount + k] * dl[k];
      }
      dzi[j] += acc;
    }
  }

  // Sentence head.
  const double dz2 = d_score * c.yhat * (1.0 - c.yhat);
  *grads.at(lay.sent_b2) += dz2;
  const double* w2 = params.at(lay.sent_w2);
  double* gw2 = grads.at(lay.sent_w2);
  std::vector<double> dz1(hh);
  for (std::size_t j = 0; j < hh; ++j) {
    gw2[j] += c.a1[j] * dz2;
    dz1[j] = w2[j] * dz2 * (1.0 - c.a1[j] * c.a1[j]);
  }
  double* gb1 = grads.at(lay.sent_b1);
  for (std::size_t j = 0; j < hh; ++j) gb1[j] += dz1[j];
  mm_tn(c.z.row(0), dz1.data(), grads.at(lay.sent_w1), 1, d, hh);
  mm_nt(dz1.data(), params.at(lay.sent_w1), dz.row(0), 1, hh, d, true);

  Mat dpooled;
  dpooled.reset(L, d);
  layer_norm_backward(dz.data(), params.at(lay.out_ln_g), c.ln_out, dpooled.data(),
                      grads.at(lay.out_ln_g), grads.at(lay.out_ln_b), L, d);

  std::vector<Mat> dhidden(N + 1);
  for (auto& m : dhidden) m.reset(L, d);
  if (cfg.layer_mix) {
    std::vector<double> dw(N + 1, 0.0);
    for (std::size_t l = 0; l <= N; ++l) {
      const double w = c.mix[l];
      double dot = 0.0;
      for (std::size_t i = 0; i < L * d; ++i) {
        dhidden[l].v[i] += w * dpooled.v[i];
        dot += dpooled.v[i] * c.hidden[l].v[i];
      }
      dw[l] = dot;
    }
    double wdw = 0.0;
    for (std::size_t l = 0; l <= N; ++l) wdw += c.mix[l] * dw[l];
    double* gmix = grads.at(lay.mix);
    for (std::size_t l = 0; l <= N; ++l) gmix[l] += c.mix[l] * (dw[l] - wdw);
  } else {
    dhidden[N].v = dpooled.v;
  }

  Mat tmp_d, tmp_f, dq, dk, dv, dh_;
  std::vector<double> dp(L);
  for (std::size_t li = N; li-- > 0;) {
    const LayerSlots& s = lay.layers[li];
    const LayerCache& lc = c.layers[li];
    const Mat& dout = dhidden[li + 1];
    Mat& dx = dhidden[li];

    // Feed-forward block: out = h + gelu(c W1 + b1) W2 + b2
    dh_.v = dout.v;
    dh_.r = L;
    dh_.c = d;
    tmp_f.reset(L, F);
    mm_nt(dout.data(), params.at(s.w2), tmp_f.data(), L, d, F, false);
    mm_tn(lc.g.data(), dout.data(), grads.at(s.w2), L, F, d);
    colsum_into(dout.data(), grads.at(s.b2), L, d);
    for (std::size_t i = 0; i < L * F; ++i) tmp_f.v[i] *= gelu_grad(lc.u.v[i]);
    tmp_d.reset(L, d);
    mm_nt(tmp_f.data(), params.at(s.w1), tmp_d.data(), L, F, d, false);
    mm_tn(lc.c.data(), tmp_f.data(), grads.at(s.w1), L, d, F);
    colsum_into(tmp_f.data(), grads.at(s.b1), L, F);
    layer_norm_backward(tmp_d.data(), params.at(s.ln2_g), lc.ln2, dh_.data(), grads.at(s.ln2_g),
                        grads.at(s.ln2_b), L, d);

    // Attention block: h = x + attn(LN(x)) Wo + bo
    for (std::size_t i = 0; i < L * d; ++i) dx.v[i] += dh_.v[i];
    tmp_d.reset(L, d);  // d(o)
    mm_nt(dh_.data(), params.at(s.wo), tmp_d.data(), L, d, d, false);
    mm_tn(lc.o.data(), dh_.data(), grads.at(s.wo), L, d, d);
    colsum_into(dh_.data(), grads.at(s.bo), L, d);

    dq.reset(L, d);
    dk.reset(L, d);
    dv.reset(L, d);
    for (std::size_t h = 0; h < H; ++h) {
      const std::size_t off = h * dh;
      for (std::size_t i = 0; i < L; ++i) {
        const double* p = lc.probs.data() + (h * L + i) * L;
        const double* doi = tmp_d.row(i) + off;
        double pdp = 0.0;
        for (std::size_t j = 0; j < L; ++j) {
          const double* vj = lc.v.row(j) + off;
          double* dvj = dv.row(j) + off;
          double acc = 0.0;
          for (std::size_t t = 0; t < dh; ++t) {
            acc += doi[t] * vj[t];
            dvj[t] += p[j] * doi[t];
          }
          dp[j] = acc;
          pdp += p[j] * acc;
        }
        const double* qi = lc.q.row(i) + off;
        double* dqi = dq.row(i) + off;
        for (std::size_t j = 0; j < L; ++j) {
          const double ds = p[j] * (dp[j] - pdp) * scale;
          if (ds == 0.0) continue;
          const double* kj = lc.k.row(j) + off;
          double* dkj = dk.row(j) + off;
          for (std::size_t t = 0; t < dh; ++t) {
            dqi[t] += ds * kj[t];
            dkj[t] += ds * qi[t];
          }
        }
      }
    }
    Mat da;
    da.reset(L, d);
    mm_nt(dq.data(), params.at(s.wq), da.data(), L, d, d, true);
    mm_nt(dk.data(), params.at(s.wk), da.data(), L, d, d, true);
    mm_nt(dv.data(), params.at(s.wv), da.data(), L, d, d, true);
    mm_tn(lc.a.data(), dq.data(), grads.at(s.wq), L, d, d);
    mm_tn(lc.a.data(), dk.data(), grads.at(s.wk), L, d, d);
    mm_tn(lc.a.data(), dv.data(), grads.at(s.wv), L, d, d);
    colsum_into(dq.data(), grads.at(s.bq), L, d);
    colsum_into(dk.data(), grads.at(s.bk), L, d);
    colsum_into(dv.data(), grads.at(s.bv), L, d);
    layer_norm_backward(da.data(), params.at(s.ln1_g), lc.ln1, dx.data(), grads.at(s.ln1_g),
                        grads.at(s.ln1_b), L, d);
  }

  Mat dx0;
  dx0.reset(L, d);
  layer_norm_backward(dhidden[0].data(), params.at(lay.emb_ln_g), c.ln_emb, dx0.data(),
                      grads.at(lay.emb_ln_g), grads.at(lay.emb_ln_b), L, d);
  double* gtok = grads.at(lay.tok_emb);
  double* gpos = grads.at(lay.pos_emb);
  double* gtyp = grads.at(lay.type_emb);
  for (std::size_t i = 0; i < L; ++i) {
    const double* dxi = dx0.row(i);
    double* te = gtok + static_cast<std::size_t>(input.ids[i]) * d;
    double* pe = gpos + i * d;
    double* ye = gtyp + static_cast<std::size_t>(input.types[i]) * d;
    for (std::size_t j = 0; j < d; ++j) {
      te[j] += dxi[j];
      pe[j] += dxi[j];
      ye[j] += dxi[j];
    }
  }
}

}  // namespace spanmetric::net
