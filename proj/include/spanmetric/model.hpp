#pragma once

// Toy pre-LN transformer encoder with a sentence regression head and a
// word-level severity tagging head, in double precision with hand-written
// backpropagation.

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "spanmetric/annotations.hpp"
#include "spanmetric/tokenizer.hpp"

namespace spanmetric::net {

struct EncoderConfig {
  int bucket_count = 4096;
  int model_dim = 32;
  int layers = 2;
  int heads = 2;
  int ff_dim = 64;
  int max_length = 256;
  int head_hidden = 32;  // width of the sentence head's tanh layer
  bool layer_mix = true;

  // Throws ConfigError on non-positive sizes or model_dim % heads != 0.
  void validate() const;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// depth 0 is the embedding block, 1..layers the transformer layers, and
// kHeadDepth everything above the encoder (layer mix, output norm, heads).
inline constexpr int kHeadDepth = -1;

struct Slot {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  int depth = 0;

  std::size_t size() const { return rows * cols; }
};

struct LayerSlots {
  std::size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
};

struct Layout {
  EncoderConfig config;
  std::vector<Slot> slots;
  std::size_t tok_emb, pos_emb, type_emb, emb_ln_g, emb_ln_b;
  std::vector<LayerSlots> layers;
  std::size_t mix, out_ln_g, out_ln_b;
  std::size_t sent_w1, sent_b1, sent_w2, sent_b2;
  std::size_t word_w, word_b;
  std::size_t total = 0;

  explicit Layout(const EncoderConfig& cfg);
};

// Flat parameter vector plus the named slot table describing it. The same
// type doubles as a gradient buffer.
class Parameters {
 public:
  explicit Parameters(const EncoderConfig& config);  // all zeros
  static Parameters initialize(const EncoderConfig& config, std::uint64_t seed);

  const EncoderConfig& config() const { return layout_->config; }
  const Layout& layout() const { return *layout_; }
  std::shared_ptr<const Layout> shared_layout() const { return layout_; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  double* at(std::size_t slot) { return values_.data() + layout_->slots[slot].offset; }
  const double* at(std::size_t slot) const { return values_.data() + layout_->slots[slot].offset; }

  // All-zero buffer with the same layout.
  Parameters zeros_like() const;
  void set_zero();

  friend bool operator==(const Parameters& a, const Parameters& b) {
    return a.config() == b.config() && a.values_ == b.values_;
  }

 private:
  explicit Parameters(std::shared_ptr<const Layout> layout);

  std::shared_ptr<const Layout> layout_;
  std::vector<double> values_;
};

using Logits = std::vector<std::array<double, kSeverityCount>>;

struct ForwardOutput {
  double sentence_score = 0.0;  // in (0, 1)
  Logits word_logits;          // one row per translation token
};

struct ForwardCache;

// Opaque activation record kept between forward and backward.
class Activations {
 public:
  Activations();
  ~Activations();
  Activations(Activations&&) noexcept;
  Activations& operator=(Activations&&) noexcept;

  ForwardCache& cache() { return *cache_; }
  const ForwardCache& cache() const { return *cache_; }

 private:
  std::unique_ptr<ForwardCache> cache_;
};

ForwardOutput forward(const Parameters& params, const ModelInput& input);
ForwardOutput forward(const Parameters& params, const ModelInput& input, Activations& acts);

// Accumulates into grads the gradient of a scalar objective whose partial
// derivatives with respect to the sentence score and the word logits are
// d_score and d_logits.
void backward(const Parameters& params, const ModelInput& input, const Activations& acts,
              double d_score, std::span<const std::array<double, kSeverityCount>> d_logits,
              Parameters& grads);

// Softmax-normalised layer-mix weights (layers + 1 entries).
std::vector<double> layer_mix_weights(const Parameters& params);

}  // namespace spanmetric::net
