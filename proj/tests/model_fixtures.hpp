#pragma once

#include <string>
#include <vector>

#include "spanmetric/loss.hpp"
#include "spanmetric/synthetic.hpp"

namespace fixtures {

// A few supervised examples drawn from the synthetic generator.
inline std::vector<spanmetric::net::TrainingExample> small_batch(
    std::size_t count, const spanmetric::net::EncoderConfig& cfg, std::uint64_t seed = 5) {
  spanmetric::synthetic::Config sc;
  sc.segments = 4 * count + 40;
  sc.seed = seed;
  sc.detection_positives = 0;
  const auto corpus = spanmetric::synthetic::generate(sc);
  spanmetric::net::Vocab vocab(cfg.bucket_count);
  std::vector<spanmetric::net::TrainingExample> out;
  for (std::size_t i = 0; i < count && i < corpus.phase_two.size(); ++i) {
    out.push_back(spanmetric::net::make_training_example(corpus.phase_two[i], vocab,
                                                         static_cast<std::size_t>(cfg.max_length)));
  }
  return out;
}

}  // namespace fixtures
