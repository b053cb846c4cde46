#pragma once

// Runs the toy model over a segment and composes its passes into spans and
// a final score.

#include <optional>

#include "spanmetric/annotations.hpp"
#include "spanmetric/model.hpp"
#include "spanmetric/scoring.hpp"
#include "spanmetric/tokenizer.hpp"

namespace spanmetric::net {

struct PreparedSegment {
  std::string id;
  std::vector<CharRange> offsets;
  std::optional<ModelInput> src, ref, src_ref;
};

// Whether the segment carries what `mode` needs (a reference for every mode
// but src).
bool mode_satisfiable(const Segment& seg, Mode mode);

// Assembles only the passes `mode` uses. Throws ConfigError when the mode
// needs a reference the segment lacks.
PreparedSegment prepare_segment(const Segment& seg, const Vocab& vocab, Mode mode,
                                std::size_t max_length);

PassOutput run_pass(const Parameters& params, const ModelInput& input);

InferenceResult score_prepared(const Parameters& params, const PreparedSegment& seg, Mode mode,
                               const AggregationWeights& weights = {});

}  // namespace spanmetric::net
