#include "spanmetric/inference.hpp"

#include "spanmetric/error.hpp"

namespace spanmetric::net {

bool mode_satisfiable(const Segment& seg, Mode mode) {
  return mode == Mode::Src || seg.reference.has_value();
}

PreparedSegment prepare_segment(const Segment& seg, const Vocab& vocab, Mode mode,
                                std::size_t max_length) {
  if (!mode_satisfiable(seg, mode)) {
    throw ConfigError("segment " + seg.id + " has no reference, required by mode " +
                      std::string(to_string(mode)));
  }
  PreparedSegment out;
  out.id = seg.id;
  const auto mt = tokenize(seg.translation, vocab);
  out.offsets = offsets_of(mt);
  const auto src = tokenize(seg.source, vocab);
  std::vector<Token> ref;
  if (seg.reference) ref = tokenize(*seg.reference, vocab);
  if (mode == Mode::Src || mode == Mode::Unified) {
    out.src = assemble_input(mt, PassKind::Src, src, {}, max_length);
  }
  if (mode == Mode::Ref || mode == Mode::Unified) {
    out.ref = assemble_input(mt, PassKind::Ref, {}, ref, max_length);
  }
  if (mode == Mode::SrcRef || mode == Mode::Unified) {
    out.src_ref = assemble_input(mt, PassKind::SrcRef, src, ref, max_length);
  }
  return out;
}

PassOutput run_pass(const Parameters& params, const ModelInput& input) {
  const auto out = forward(params, input);
  return PassOutput{out.sentence_score, softmax_rows(out.word_logits)};
}

InferenceResult score_prepared(const Parameters& params, const PreparedSegment& seg, Mode mode,
                               const AggregationWeights& weights) {
  PassSet passes;
  if (seg.src) passes.src = run_pass(params, *seg.src);
  if (seg.ref) passes.ref = run_pass(params, *seg.ref);
  if (seg.src_ref) passes.src_ref = run_pass(params, *seg.src_ref);
  return compose_inference(passes, seg.offsets, mode, weights);
}

}  // namespace spanmetric::net
