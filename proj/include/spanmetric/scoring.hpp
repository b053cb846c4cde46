#pragma once

// Inference-time composition: averaging word distributions over forward
// passes, tag decoding, weighted sentence-score aggregation, DA scaling.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spanmetric/annotations.hpp"

namespace spanmetric {

// Evaluation scenario. Unified runs all three passes and blends them.
enum class Mode { Src, Ref, SrcRef, Unified };

std::string_view to_string(Mode m);
std::optional<Mode> parse_mode(std::string_view name);

struct WordDistribution {
  std::vector<std::array<double, kSeverityCount>> rows;

  std::size_t size() const { return rows.size(); }
};

// Throws ValidationError unless every row is nonnegative and sums to 1
// within 1e-9.
void check_distribution(const WordDistribution& dist);

// Row-wise softmax of 4-way logits.
WordDistribution softmax_rows(std::span<const std::array<double, kSeverityCount>> logits);

struct ScoreBundle {
  std::optional<double> y_src;
  std::optional<double> y_ref;
  std::optional<double> y_src_ref;
  double y_mqm = 1.0;
};

struct AggregationWeights {
  double w_src = 1.0 / 9.0;
  double w_ref = 1.0 / 3.0;
  double w_src_ref = 1.0 / 3.0;
  double w_mqm = 2.0 / 9.0;

  // Nonnegative and summing to 1 within 1e-12; throws ConfigError otherwise.
  void validate() const;
};

struct DaScaler {
  double z_min = 0.0;
  double z_max = 1.0;
};

struct DaAnnotation {
  std::string segment_id;
  double raw = 0.0;  // unnormalised 0-100 score
  double z = 0.0;
};

// Elementwise mean; throws ShapeError on mismatched token counts.
WordDistribution average_distributions(std::span<const WordDistribution> dists);

// Per-token argmax; exact ties resolve toward the less severe label.
TokenTags decode_tags(const WordDistribution& dist, std::span<const CharRange> offsets);

double aggregate(const ScoreBundle& bundle, const AggregationWeights& weights = {});

// Output of one forward pass of a model (or an external metric's export).
struct PassOutput {
  double sentence_score = 0.0;
  WordDistribution words;
};

struct PassSet {
  std::optional<PassOutput> src;
  std::optional<PassOutput> ref;
  std::optional<PassOutput> src_ref;
};

struct InferenceResult {
  std::vector<ErrorSpan> spans;
  ScoreBundle bundle;
  double final_score = 0.0;
  TokenTags tags;
};

// Unified: average all three distributions, decode, build spans, score them
// with MQM and blend the four sentence values. Single modes use that pass
// alone and report its regression score as the final score.
InferenceResult compose_inference(const PassSet& passes, std::span<const CharRange> offsets,
                                  Mode mode, const AggregationWeights& weights = {});

DaScaler fit_da_scaler(std::span<const DaAnnotation> annotations);

// (z - z_min) / (z_max - z_min) clamped to [0, 1].
double scale_da(double z, const DaScaler& scaler);

}  // namespace spanmetric
