#include "spanmetric/optimizer.hpp"

#include <cmath>

#include "spanmetric/error.hpp"

namespace spanmetric::net {

namespace {
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;
}  // namespace

Adam::Adam(const Parameters& params, const PhaseSpec& phase)
    : phase_(phase),
      m_(params.size(), 0.0),
      v_(params.size(), 0.0),
      slot_steps_(params.layout().slots.size(), 0) {
  const Layout& lay = params.layout();
  const int top = lay.config.layers;
  for (const auto& s : lay.slots) {
    if (s.depth == kHeadDepth) {
      slot_lr_.push_back(phase.learning_rate);
    } else {
      slot_lr_.push_back(phase.encoder_learning_rate * std::pow(phase.layerwise_decay, top - s.depth));
    }
  }
}

double Adam::slot_learning_rate(std::size_t slot) const { return slot_lr_.at(slot); }

void Adam::step(Parameters& params, const Parameters& grads, bool freeze_encoder) {
  if (grads.size() != params.size()) throw ShapeError("Adam::step: gradient layout mismatch");
  const Layout& lay = params.layout();
  auto values = params.values();
  auto g = grads.values();
  for (std::size_t si = 0; si < lay.slots.size(); ++si) {
    const Slot& s = lay.slots[si];
    if (freeze_encoder && s.depth != kHeadDepth) continue;
    const double lr = slot_lr_[si];
    if (lr == 0.0) continue;
    const long t = ++slot_steps_[si];
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    for (std::size_t i = s.offset; i < s.offset + s.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * g[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * g[i] * g[i];
      const double mh = m_[i] / c1;
      const double vh = v_[i] / c2;
      values[i] -= lr * mh / (std::sqrt(vh) + kEps);
    }
  }
}

}  // namespace spanmetric::net
