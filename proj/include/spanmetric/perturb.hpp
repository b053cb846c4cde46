#pragma once

// Seeded corruption generators. Hallucination generators (detached_random,
// detached_similar, oscillatory) inject critical spans; the localized-error
// generators (add_text, negation, mask_infill, swap_num, swap_ne) inject
// major spans. Each generator either returns a changed translation with
// spans that land inside it, or throws NotApplicable.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spanmetric/annotations.hpp"
#include "spanmetric/rng.hpp"

namespace spanmetric::perturb {

enum class Kind : std::uint8_t {
  DetachedRandom,
  DetachedSimilar,
  Oscillatory,
  AddText,
  Negation,
  MaskInfill,
  SwapNum,
  SwapNe,
};

inline constexpr std::array<Kind, 8> kAllKinds = {
    Kind::DetachedRandom, Kind::DetachedSimilar, Kind::Oscillatory, Kind::AddText,
    Kind::Negation,       Kind::MaskInfill,      Kind::SwapNum,     Kind::SwapNe};

std::string_view to_string(Kind k);
std::optional<Kind> parse_kind(std::string_view name);
bool is_hallucination(Kind k);

struct PerturbedSegment {
  Segment base;
  std::string perturbed_translation;
  std::vector<ErrorSpan> injected_spans;
  Kind kind = Kind::DetachedRandom;
};

// Whitespace-delimited words with scalar-offset ranges.
std::vector<CharRange> words_of(std::string_view text);

using Similarity = std::function<double(std::string_view, std::string_view)>;

// Cosine similarity of character 3-gram count profiles. Texts shorter than
// three scalars form a single gram. Two empty texts have similarity 1, one
// empty text gives 0.
double trigram_cosine(std::string_view a, std::string_view b);

struct NegationRule {
  std::string from;
  std::string to;
};

// Lines of the form "from => to"; blank lines and '#' comments skipped.
// Both sides must be non-empty.
std::vector<NegationRule> parse_negation_lexicon(std::string_view text);
const std::vector<NegationRule>& default_negation_lexicon();

// Word counts over a corpus, sampled proportionally to frequency.
class UnigramTable {
 public:
  UnigramTable() = default;
  static UnigramTable from_texts(std::span<const std::string> texts);

  bool empty() const { return words_.empty(); }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::string& sample(Rng& rng) const;

 private:
  std::vector<std::string> words_;       // sorted
  std::vector<std::uint64_t> cumulative_;  // running counts, parallel to words_
};

PerturbedSegment hallucinate_random(const Segment& seg, std::span<const std::string> pool,
                                    Rng& rng);
PerturbedSegment hallucinate_similar(const Segment& seg, std::span<const std::string> pool,
                                     const Similarity& similarity = trigram_cosine);
PerturbedSegment hallucinate_oscillatory(const Segment& seg, Rng& rng);
PerturbedSegment swap_number(const Segment& seg, Rng& rng);
PerturbedSegment swap_entity(const Segment& seg, Rng& rng, std::span<const std::string> entity_pool);
PerturbedSegment negate(const Segment& seg, std::span<const NegationRule> lexicon, Rng& rng);
PerturbedSegment add_text(const Segment& seg, std::span<const std::string> pool, Rng& rng);
PerturbedSegment mask_infill(const Segment& seg, const UnigramTable& unigrams, Rng& rng);

struct Resources {
  std::vector<std::string> sentence_pool;
  std::vector<std::string> entity_pool;
  std::vector<NegationRule> negation_lexicon = default_negation_lexicon();
  UnigramTable unigrams;
  Similarity similarity = trigram_cosine;
};

// Names the resource a kind needs but `res` lacks, or nullopt.
std::optional<std::string> missing_resource(Kind kind, const Resources& res);

PerturbedSegment apply(Kind kind, const Segment& seg, const Resources& res, Rng& rng);

// Seed for one (segment, kind) item, independent of batch order.
std::uint64_t item_seed(std::uint64_t seed, std::string_view segment_id, Kind kind);

// "<base id>::<kind>"
std::string perturbed_id(std::string_view base_id, Kind kind);

// The perturbed segment as a standalone record. Gold spans are the injected
// spans; with keep_base_spans the base gold spans outside the edited region
// are carried over with shifted offsets. Hallucinations never keep base
// spans. gold_score is recomputed from the resulting spans.
Segment to_segment(const PerturbedSegment& p, bool keep_base_spans = false);

struct ScoredItem {
  double score = 0.0;
  std::vector<ErrorSpan> spans;
};

struct StressPair {
  Kind kind = Kind::AddText;
  ScoredItem original;
  ScoredItem perturbed;
};

struct DeltaSummary {
  // Deltas are 100 * (original - perturbed), in score points.
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double fraction_below_one_point = 0.0;
};

struct KindReport {
  Kind kind = Kind::AddText;
  std::size_t count = 0;
  std::size_t no_error = 0;
  double no_error_rate = 0.0;  // percent of perturbed items with no predicted span
  // Predicted spans on perturbed items, indexed by severity (OK slot unused).
  std::array<std::size_t, kSeverityCount> span_severity{};
  // Most severe predicted label per perturbed item, OK = no span.
  std::array<std::size_t, kSeverityCount> item_severity{};
  DeltaSummary delta;
  // Perturbed scores in ten equal bins over [0, 1].
  std::array<std::size_t, 10> score_histogram{};
};

// One report per kind present, in kAllKinds order.
std::vector<KindReport> stress_report(std::span<const StressPair> pairs);

// Linear-interpolation quantile of sorted data (q in [0, 1]).
double quantile_sorted(std::span<const double> sorted, double q);

}  // namespace spanmetric::perturb
