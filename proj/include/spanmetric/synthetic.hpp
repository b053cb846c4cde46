#pragma once

// Generated translation corpus for end-to-end training checks. The toy
// target language has short lowercase content words, capitalized entities
// and small numbers; the source language maps every content word through a
// fixed bijection and copies entities and numbers, in the same order. Errors
// are injected with known spans, and gold scores follow from the spans.

#include <cstdint>
#include <string>
#include <vector>

#include "spanmetric/annotations.hpp"

namespace spanmetric::synthetic {

struct Config {
  std::size_t segments = 8000;
  std::uint64_t seed = 2024;
  std::size_t min_words = 4;
  std::size_t max_words = 7;
  // Split fractions; the held-out split takes the remainder.
  double phase_one_fraction = 0.25;
  double phase_two_fraction = 0.30;
  double phase_three_fraction = 0.25;
  // Fully detached hallucinations built from held-out bases for the
  // detection set.
  std::size_t detection_positives = 120;
};

struct Corpus {
  // Phase one carries gold scores only; the other splits carry spans too.
  std::vector<Segment> phase_one;
  std::vector<Segment> phase_two;
  std::vector<Segment> phase_three;
  std::vector<Segment> held_out;
  // Held-out negatives (gold >= 0.76, no hallucination) plus detached
  // positives; is_positive is parallel to detection.
  std::vector<Segment> detection;
  std::vector<std::uint8_t> is_positive;

  std::size_t size() const {
    return phase_one.size() + phase_two.size() + phase_three.size() + held_out.size();
  }
};

Corpus generate(const Config& config = {});

// The fixed lexicons, exposed for tests.
const std::vector<std::string>& target_words();
const std::vector<std::string>& source_words();
const std::vector<std::string>& entities();

}  // namespace spanmetric::synthetic
