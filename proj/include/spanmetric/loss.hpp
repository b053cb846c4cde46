#pragma once

// Multi-task objective: per pass (1 - lambda) * squared sentence error plus
// lambda * class-weighted token cross-entropy, summed over the passes an
// example supports.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spanmetric/annotations.hpp"
#include "spanmetric/model.hpp"
#include "spanmetric/tokenizer.hpp"

namespace spanmetric::net {

inline constexpr std::array<double, kSeverityCount> kDefaultClassWeights = {0.08, 0.486, 0.505,
                                                                            0.533};

struct PhaseSpec {
  std::string name = "phase";
  double lambda = 0.0;
  std::array<double, kSeverityCount> class_weights = kDefaultClassWeights;
  double learning_rate = 1e-2;          // heads and layer mix
  double encoder_learning_rate = 5e-3;  // top encoder layer; decays downward
  double layerwise_decay = 0.983;
  double frozen_fraction = 0.3;  // of the first epoch, encoder held fixed
  int epochs = 10;
  int batch_size = 32;
  bool word_level_training = true;
  double max_grad_norm = 1.0;  // global-norm clipping; 0 disables

  void validate() const;

  // Sentence-only warm-up.
  static PhaseSpec phase_one();
  // Word-level emphasis, lambda = 0.983.
  static PhaseSpec phase_two();
  // Sentence-level emphasis, lambda = 0.055.
  static PhaseSpec phase_three();
};

struct TrainingExample {
  std::string id;
  std::optional<double> gold_score;
  std::optional<std::vector<Severity>> gold_tags;  // one per translation token
  std::vector<CharRange> offsets;
  std::vector<PassKind> kinds;
  std::vector<ModelInput> inputs;  // parallel to kinds
};

// Tokenizes the segment and projects gold spans onto its translation tokens.
// Every pass the segment supports is assembled: src always, ref and src+ref
// when a reference is present.
TrainingExample make_training_example(const Segment& seg, const Vocab& vocab,
                                      std::size_t max_length);

struct LossBreakdown {
  double total = 0.0;
  std::vector<double> sentence;  // (y - y_hat)^2 per pass
  std::vector<double> word;      // weighted cross-entropy per pass
};

struct OutputGradient {
  double d_score = 0.0;
  Logits d_logits;
};

// Throws ConfigError when the phase needs supervision the example lacks.
LossBreakdown compute_loss(std::span<const ForwardOutput> outputs, const TrainingExample& ex,
                           const PhaseSpec& phase, std::vector<OutputGradient>* grads = nullptr);

// Forward + backward over all passes of one example; adds scale * dL/dtheta
// into grads and returns the unscaled loss.
double accumulate_example_gradient(const Parameters& params, const TrainingExample& ex,
                                   const PhaseSpec& phase, double scale, Parameters& grads);

double example_loss(const Parameters& params, const TrainingExample& ex, const PhaseSpec& phase);

// Mean example loss over a batch.
double batch_loss(const Parameters& params, std::span<const TrainingExample> batch,
                  const PhaseSpec& phase);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  double gradient_norm = 0.0;
  std::string worst_slot;
};

// Compares the analytic gradient of batch_loss against central finite
// differences on `coordinates` sampled entries (at least 64). Every slot is
// sampled; token-embedding rows are drawn from ids present in the batch.
// Relative error is |a - n| / max(|a| + |n|, 1e-6).
GradCheckResult grad_check(const Parameters& params, std::span<const TrainingExample> batch,
                           const PhaseSpec& phase, double epsilon = 1e-5,
                           std::size_t coordinates = 128, std::uint64_t seed = 7);

}  // namespace spanmetric::net
