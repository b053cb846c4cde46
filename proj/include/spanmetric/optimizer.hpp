#pragma once

#include <vector>

#include "spanmetric/loss.hpp"
#include "spanmetric/model.hpp"

namespace spanmetric::net {

// Adam with discriminative learning rates: heads use the phase learning
// rate, encoder depth k (0 = embeddings, layers = top) uses
// encoder_learning_rate * layerwise_decay^(layers - k).
class Adam {
 public:
  Adam(const Parameters& params, const PhaseSpec& phase);

  double slot_learning_rate(std::size_t slot) const;

  // Applies one update. With freeze_encoder set, encoder slots (and their
  // moment estimates) are left bitwise untouched.
  void step(Parameters& params, const Parameters& grads, bool freeze_encoder);

 private:
  PhaseSpec phase_;
  std::vector<double> m_, v_;
  std::vector<long> slot_steps_;
  std::vector<double> slot_lr_;
};

}  // namespace spanmetric::net
