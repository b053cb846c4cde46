#include "spanmetric/trainer.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "spanmetric/error.hpp"
#include "spanmetric/kernels.hpp"
#include "spanmetric/optimizer.hpp"
#include "spanmetric/rng.hpp"

namespace spanmetric::net {

void check_supervision(std::span<const TrainingExample> corpus, const PhaseSpec& phase) {
  const bool needs_tags = phase.word_level_training && phase.lambda > 0.0;
  for (const auto& ex : corpus) {
    if (!ex.gold_score) {
      throw SupervisionError(phase.name + ": example " + ex.id + " has no gold_score");
    }
    if (needs_tags && !ex.gold_tags) {
      throw SupervisionError(phase.name + ": example " + ex.id +
                             " has no gold_spans but the phase trains word-level tags");
    }
  }
}

namespace {

void clip(Parameters& grads, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (double g : grads.values()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& g : grads.values()) g *= s;
  }
}

}  // namespace

PhaseReport train_phase(std::span<const TrainingExample> corpus, const PhaseSpec& phase,
                        Parameters& params, const TrainOptions& options) {
  phase.validate();
  if (corpus.empty()) throw TrainingError(phase.name + ": empty training corpus");
  check_supervision(corpus, phase);

  PhaseReport report;
  report.spec = phase;
  report.examples = corpus.size();
  report.initial_loss = batch_loss(params, corpus, phase);

  Adam opt(params, phase);
  Parameters grads = params.zeros_like();
  kernels::GradientScratch scratch;
  Rng rng(derive_seed(options.seed, phase.name));
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  const auto bs = static_cast<std::size_t>(phase.batch_size);
  const std::size_t batches = (corpus.size() + bs - 1) / bs;
  std::vector<const TrainingExample*> batch;

  for (int epoch = 0; epoch < phase.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      batch.clear();
      for (std::size_t i = b * bs; i < std::min(corpus.size(), (b + 1) * bs); ++i) {
        batch.push_back(&corpus[order[i]]);
      }
      const double loss = options.parallel
                              ? kernels::parallel::batch_gradient(params, batch, phase, scratch, grads)
                              : kernels::serial::batch_gradient(params, batch, phase, scratch, grads);
      if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << phase.name << ": non-finite loss at epoch " << epoch << ", batch " << b
           << "; aborting";
        throw TrainingError(os.str());
      }
      epoch_loss += loss * static_cast<double>(batch.size());
      const bool frozen = epoch == 0 && static_cast<double>(b) <
                                            phase.frozen_fraction * static_cast<double>(batches);
      clip(grads, phase.max_grad_norm);
      opt.step(params, grads, frozen);
      ++report.steps;
      if (frozen) ++report.frozen_steps;
    }
    epoch_loss /= static_cast<double>(corpus.size());
    report.epoch_losses.push_back(epoch_loss);
    if (options.log) {
      std::ostringstream os;
      os << phase.name << " epoch " << (epoch + 1) << "/" << phase.epochs << " loss " << epoch_loss;
      options.log(os.str());
    }
  }
  return report;
}

std::array<PhaseSpec, 3> default_curriculum() {
  return {PhaseSpec::phase_one(), PhaseSpec::phase_two(), PhaseSpec::phase_three()};
}

CurriculumResult run_curriculum(const std::array<std::span<const TrainingExample>, 3>& corpora,
                                const std::array<PhaseSpec, 3>& specs, Parameters initial,
                                const TrainOptions& options, const PhaseCallback& on_phase_end) {
  for (std::size_t p = 0; p < 3; ++p) {
    if (corpora[p].empty()) {
      throw TrainingError("curriculum phase " + std::to_string(p + 1) + " (" + specs[p].name +
                          ") has an empty corpus; phases cannot be skipped");
    }
    specs[p].validate();
    check_supervision(corpora[p], specs[p]);
  }
  CurriculumResult result{std::move(initial), {}};
  for (std::size_t p = 0; p < 3; ++p) {
    TrainOptions opt = options;
    opt.seed = derive_seed(options.seed, static_cast<std::uint64_t>(p));
    result.phases.push_back(train_phase(corpora[p], specs[p], result.params, opt));
    if (on_phase_end) on_phase_end(p, result.params, result.phases.back());
  }
  return result;
}

}  // namespace spanmetric::net
