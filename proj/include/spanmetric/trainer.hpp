#pragma once

// Minibatch training of one curriculum phase and the three-phase schedule.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spanmetric/loss.hpp"
#include "spanmetric/model.hpp"

namespace spanmetric::net {

struct PhaseReport {
  PhaseSpec spec;
  std::size_t examples = 0;
  double initial_loss = 0.0;
  std::vector<double> epoch_losses;
  std::size_t steps = 0;
  std::size_t frozen_steps = 0;
};

struct TrainOptions {
  std::uint64_t seed = 42;
  // OpenMP gradient accumulation; results are identical either way.
  bool parallel = true;
  std::function<void(std::string_view)> log;
};

// Throws SupervisionError if any example lacks a gold score, or lacks gold
// tags while the phase trains the word head.
void check_supervision(std::span<const TrainingExample> corpus, const PhaseSpec& phase);

// Shuffled minibatch Adam. During the first frozen_fraction of the first
// epoch only the head parameters move. Deterministic given options.seed.
PhaseReport train_phase(std::span<const TrainingExample> corpus, const PhaseSpec& phase,
                        Parameters& params, const TrainOptions& options = {});

struct CurriculumResult {
  Parameters params;
  std::vector<PhaseReport> phases;
};

using PhaseCallback = std::function<void(std::size_t phase, const Parameters&, const PhaseReport&)>;

std::array<PhaseSpec, 3> default_curriculum();

// Runs the phases in order, threading parameters through; every corpus must
// be non-empty. on_phase_end fires after each phase (checkpointing).
CurriculumResult run_curriculum(const std::array<std::span<const TrainingExample>, 3>& corpora,
                                const std::array<PhaseSpec, 3>& specs, Parameters initial,
                                const TrainOptions& options = {},
                                const PhaseCallback& on_phase_end = {});

}  // namespace spanmetric::net
