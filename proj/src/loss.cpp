#include "spanmetric/loss.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "spanmetric/error.hpp"
#include "spanmetric/rng.hpp"
#include "spanmetric/utf8.hpp"

namespace spanmetric::net {

void PhaseSpec::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError(name + ": lambda must lie in [0, 1]");
  for (double a : class_weights) {
    if (!(a > 0.0)) throw ConfigError(name + ": class weights must be positive");
  }
  if (!(learning_rate > 0.0) || !(encoder_learning_rate >= 0.0)) {
    throw ConfigError(name + ": learning rates must be positive");
  }
  if (!(layerwise_decay > 0.0)) throw ConfigError(name + ": layerwise decay must be positive");
  if (!(frozen_fraction >= 0.0 && frozen_fraction <= 1.0)) {
    throw ConfigError(name + ": frozen fraction must lie in [0, 1]");
  }
  if (epochs <= 0 || batch_size <= 0) throw ConfigError(name + ": epochs and batch size must be positive");
}

PhaseSpec PhaseSpec::phase_one() {
  PhaseSpec p;
  p.name = "phase1";
  p.lambda = 0.0;
  p.word_level_training = false;
  return p;
}

PhaseSpec PhaseSpec::phase_two() {
  PhaseSpec p;
  p.name = "phase2";
  p.lambda = 0.983;
  return p;
}

PhaseSpec PhaseSpec::phase_three() {
  PhaseSpec p = phase_two();
  p.name = "phase3";
  p.lambda = 0.055;
  return p;
}

TrainingExample make_training_example(const Segment& seg, const Vocab& vocab,
                                      std::size_t max_length) {
  TrainingExample ex;
  ex.id = seg.id;
  ex.gold_score = seg.gold_score;
  const auto mt = tokenize(seg.translation, vocab);
  const auto src = tokenize(seg.source, vocab);
  ex.offsets = offsets_of(mt);
  if (seg.gold_spans) {
    ex.gold_tags = spans_to_tags(*seg.gold_spans, ex.offsets, utf8::length(seg.translation)).tags;
  }
  ex.kinds.push_back(PassKind::Src);
  ex.inputs.push_back(assemble_input(mt, PassKind::Src, src, {}, max_length));
  if (seg.reference) {
    const auto ref = tokenize(*seg.reference, vocab);
    ex.kinds.push_back(PassKind::Ref);
    ex.inputs.push_back(assemble_input(mt, PassKind::Ref, {}, ref, max_length));
    ex.kinds.push_back(PassKind::SrcRef);
    ex.inputs.push_back(assemble_input(mt, PassKind::SrcRef, src, ref, max_length));
  }
  return ex;
}

LossBreakdown compute_loss(std::span<const ForwardOutput> outputs, const TrainingExample& ex,
                           const PhaseSpec& phase, std::vector<OutputGradient>* grads) {
  if (outputs.size() != ex.inputs.size()) {
    throw ShapeError("compute_loss: " + std::to_string(outputs.size()) + " outputs for " +
                     std::to_string(ex.inputs.size()) + " passes");
  }
  if (!ex.gold_score) throw ConfigError("example " + ex.id + " has no gold sentence score");
  const bool word = phase.word_level_training;
  const double lambda = word ? phase.lambda : 0.0;
  if (word && lambda > 0.0 && !ex.gold_tags) {
    throw ConfigError("example " + ex.id + " lacks word-level supervision required by " +
                      phase.name);
  }
  const double y = *ex.gold_score;
  LossBreakdown out;
  if (grads) grads->assign(outputs.size(), OutputGradient{});
  for (std::size_t p = 0; p < outputs.size(); ++p) {
    const auto& o = outputs[p];
    const double diff = y - o.sentence_score;
    const double sl = diff * diff;
    out.sentence.push_back(sl);
    // Sentence-only phases use the plain squared error regardless of lambda.
    const double sent_weight = word ? (1.0 - lambda) : 1.0;
    double wl = 0.0;
    OutputGradient* g = grads ? &(*grads)[p] : nullptr;
    if (g) {
      g->d_score = -2.0 * sent_weight * diff;
      g->d_logits.assign(o.word_logits.size(), {});
    }
    if (word && lambda > 0.0) {
      const auto& tags = *ex.gold_tags;
      const std::size_t n = o.word_logits.size();
      if (tags.size() != n) {
        throw ShapeError("example " + ex.id + ": " + std::to_string(tags.size()) +
                         " gold tags for " + std::to_string(n) + " translation tokens");
      }
      const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& row = o.word_logits[i];
        const double m = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        std::array<double, kSeverityCount> e{};
        for (std::size_t k = 0; k < kSeverityCount; ++k) {
          e[k] = std::exp(row[k] - m);
          z += e[k];
        }
        const std::size_t gold = index_of(tags[i]);
        const double alpha = phase.class_weights[gold];
        const double log_p = row[gold] - m - std::log(z);
        wl -= alpha * log_p * inv_n;
        if (g) {
          for (std::size_t k = 0; k < kSeverityCount; ++k) {
            const double pk = e[k] / z;
            g->d_logits[i][k] = lambda * alpha * inv_n * (pk - (k == gold ? 1.0 : 0.0));
          }
        }
      }
    }
    out.word.push_back(wl);
    out.total += sent_weight * sl + lambda * wl;
  }
  return out;
}

double accumulate_example_gradient(const Parameters& params, const TrainingExample& ex,
                                   const PhaseSpec& phase, double scale, Parameters& grads) {
  std::vector<Activations> acts(ex.inputs.size());
  std::vector<ForwardOutput> outs;
  outs.reserve(ex.inputs.size());
  for (std::size_t p = 0; p < ex.inputs.size(); ++p) {
    outs.push_back(forward(params, ex.inputs[p], acts[p]));
  }
  std::vector<OutputGradient> og;
  const auto l = compute_loss(outs, ex, phase, &og);
  for (std::size_t p = 0; p < ex.inputs.size(); ++p) {
    auto& g = og[p];
    g.d_score *= scale;
    for (auto& row : g.d_logits)
      for (auto& v : row) v *= scale;
    backward(params, ex.inputs[p], acts[p], g.d_score, g.d_logits, grads);
  }
  return l.total;
}

double example_loss(const Parameters& params, const TrainingExample& ex, const PhaseSpec& phase) {
  std::vector<ForwardOutput> outs;
  outs.reserve(ex.inputs.size());
  for (const auto& in : ex.inputs) outs.push_back(forward(params, in));
  return compute_loss(outs, ex, phase).total;
}

double batch_loss(const Parameters& params, std::span<const TrainingExample> batch,
                  const PhaseSpec& phase) {
  if (batch.empty()) return 0.0;
  double s = 0.0;
  for (const auto& ex : batch) s += example_loss(params, ex, phase);
  return s / static_cast<double>(batch.size());
}

GradCheckResult grad_check(const Parameters& params, std::span<const TrainingExample> batch,
                           const PhaseSpec& phase, double epsilon, std::size_t coordinates,
                           std::uint64_t seed) {
  if (batch.empty()) throw ConfigError("grad_check: empty batch");
  coordinates = std::max<std::size_t>(coordinates, 64);
  Parameters grads = params.zeros_like();
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) accumulate_example_gradient(params, ex, phase, inv, grads);

  GradCheckResult res;
  for (double g : grads.values()) res.gradient_norm += g * g;
  res.gradient_norm = std::sqrt(res.gradient_norm);

  const Layout& lay = params.layout();
  std::vector<std::int32_t> used_ids;
  {
    std::set<std::int32_t> ids;
    for (const auto& ex : batch)
      for (const auto& in : ex.inputs) ids.insert(in.ids.begin(), in.ids.end());
    used_ids.assign(ids.begin(), ids.end());
  }
  std::size_t max_len = 0;
  for (const auto& ex : batch)
    for (const auto& in : ex.inputs) max_len = std::max(max_len, in.size());

  Rng rng(seed);
  std::vector<std::size_t> picks;
  const std::size_t per_slot =
      std::max<std::size_t>(1, (coordinates + lay.slots.size() - 1) / lay.slots.size());
  for (std::size_t s = 0; s < lay.slots.size(); ++s) {
    const Slot& slot = lay.slots[s];
    for (std::size_t k = 0; k < per_slot; ++k) {
      std::size_t row = rng.below(slot.rows);
      if (s == lay.tok_emb) row = static_cast<std::size_t>(used_ids[rng.below(used_ids.size())]);
      if (s == lay.pos_emb) row = rng.below(max_len);
      const std::size_t col = rng.below(slot.cols);
      picks.push_back(slot.offset + row * slot.cols + col);
    }
  }
  while (picks.size() < coordinates) picks.push_back(rng.below(params.size()));

  Parameters probe = params;
  for (std::size_t idx : picks) {
    const double orig = probe.values()[idx];
    probe.values()[idx] = orig + epsilon;
    const double up = batch_loss(probe, batch, phase);
    probe.values()[idx] = orig - epsilon;
    const double down = batch_loss(probe, batch, phase);
    probe.values()[idx] = orig;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double analytic = grads.values()[idx];
    const double rel =
        std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), 1e-6);
    if (rel > res.max_relative_error) {
      res.max_relative_error = rel;
      for (const auto& slot : lay.slots) {
        if (idx >= slot.offset && idx < slot.offset + slot.size()) res.worst_slot = slot.name;
      }
    }
  }
  res.coordinates = picks.size();
  return res;
}

}  // namespace spanmetric::net
