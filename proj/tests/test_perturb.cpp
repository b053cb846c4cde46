#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "perturb_checks.hpp"
#include "spanmetric/error.hpp"
#include "spanmetric/perturb.hpp"
#include "spanmetric/utf8.hpp"

using namespace spanmetric;
using namespace spanmetric::perturb;

namespace {

Segment english() {
  Segment s;
  s.id = "e1";
  s.source = "Le comité a approuvé 12 propositions à Genève";
  s.translation = "The committee is not ready to approve 12 proposals in Geneva today";
  s.reference = "The committee approved 12 proposals in Geneva";
  s.gold_spans = std::vector<ErrorSpan>{{0, 3, Severity::Minor, {}}, {61, 66, Severity::Major, {}}};
  s.gold_score = mqm_score(*s.gold_spans);
  return s;
}

Resources resources() {
  Resources r;
  r.sentence_pool = {"A storm closed the northern pass for two days",
                     "Prices rose sharply after the announcement",
                     "The museum opens a new wing next spring"};
  r.entity_pool = {"Paris", "Berlin", "Geneva", "Oslo"};
  const std::vector<std::string> texts = {english().translation, r.sentence_pool[0]};
  r.unigrams = UnigramTable::from_texts(texts);
  return r;
}

void expect_valid(const PerturbedSegment& p) {
  const std::size_t len = utf8::length(p.perturbed_translation);
  ASSERT_FALSE(p.injected_spans.empty());
  for (const auto& s : p.injected_spans) {
    EXPECT_TRUE(validate_span(s, len, "injected").empty())
        << to_string(p.kind) << " [" << s.start << ", " << s.end << ") in " << len;
    EXPECT_EQ(s.severity, is_hallucination(p.kind) ? Severity::Critical : Severity::Major);
  }
  EXPECT_NE(p.perturbed_translation, p.base.translation);
}

}  // namespace

TEST(Kinds, NamesRoundTrip) {
  for (auto k : kAllKinds) EXPECT_EQ(parse_kind(to_string(k)), k);
  EXPECT_FALSE(parse_kind("shuffle"));
  EXPECT_EQ(perturbed_id("a", Kind::SwapNum), "a::swap_num");
}

TEST(Trigram, HandComputedValues) {
  EXPECT_DOUBLE_EQ(trigram_cosine("abcd", "bcde"), 0.5);
  EXPECT_DOUBLE_EQ(trigram_cosine("abcabc", "abc"), 2.0 / std::sqrt(6.0));
  EXPECT_DOUBLE_EQ(trigram_cosine("xyz", "xyz"), 1.0);
  EXPECT_DOUBLE_EQ(trigram_cosine("ab", "ab"), 1.0);
  EXPECT_DOUBLE_EQ(trigram_cosine("ab", "abc"), 0.0);
  EXPECT_DOUBLE_EQ(trigram_cosine("", ""), 1.0);
  EXPECT_DOUBLE_EQ(trigram_cosine("", "abc"), 0.0);
}

TEST(Similar, PicksMostSimilarPoolSentence) {
  Segment s;
  s.id = "q";
  s.source = "the cat sat";
  s.translation = "le chat";
  const std::vector<std::string> pool = {"a dog ran", "the cat sits", "zebra"};
  // Hand-computed trigram cosines against the source.
  std::vector<double> sims;
  for (const auto& p : pool) sims.push_back(trigram_cosine(s.source, p));
  EXPECT_GT(sims[1], sims[0]);
  EXPECT_GT(sims[1], sims[2]);
  EXPECT_EQ(hallucinate_similar(s, pool).perturbed_translation, "the cat sits");
  std::vector<std::string> rotated = {pool[2], pool[1], pool[0]};
  EXPECT_EQ(hallucinate_similar(s, rotated).perturbed_translation, "the cat sits");
  const Similarity by_length = [](std::string_view, std::string_view b) {
    return -static_cast<double>(b.size());
  };
  EXPECT_EQ(hallucinate_similar(s, pool, by_length).perturbed_translation, "zebra");
}

TEST(Detached, ExcludesTranslationAndCoversAll) {
  Segment s = english();
  const std::vector<std::string> only_self = {s.translation, "   "};
  Rng rng(1);
  EXPECT_THROW(hallucinate_random(s, only_self, rng), NotApplicable);
  const auto p = hallucinate_random(s, resources().sentence_pool, rng);
  ASSERT_EQ(p.injected_spans.size(), 1u);
  EXPECT_EQ(p.injected_spans[0].start, 0u);
  EXPECT_EQ(p.injected_spans[0].end, utf8::length(p.perturbed_translation));
  EXPECT_EQ(to_segment(p, true).gold_spans->size(), 1u);
  EXPECT_EQ(*to_segment(p).gold_score, 0.6);
}

TEST(Oscillatory, RepeatsNgramAndNeedsTwoWords) {
  Segment s = english();
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    Rng rng(seed);
    const auto p = hallucinate_oscillatory(s, rng);
    expect_valid(p);
    EXPECT_GE(checks::oscillation_repeats(p), 2u) << p.perturbed_translation;
  }
  Segment one = s;
  one.translation = "word";
  Rng rng(0);
  EXPECT_THROW(hallucinate_oscillatory(one, rng), NotApplicable);
}

TEST(SwapNum, ReplacesDigitsOnly) {
  Segment s = english();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const auto p = swap_number(s, rng);
    expect_valid(p);
    const auto& sp = p.injected_spans[0];
    const auto repl = utf8::substr(p.perturbed_translation, sp.start, sp.end);
    EXPECT_NE(repl, "12");
    EXPECT_TRUE(std::all_of(repl.begin(), repl.end(), [](char c) { return c >= '0' && c <= '9'; }));
    EXPECT_TRUE(repl.size() == 1 || repl[0] != '0');
  }
  Segment none = s;
  none.translation = "no digits here";
  Rng rng(0);
  EXPECT_THROW(swap_number(none, rng), NotApplicable);
}

TEST(SwapEntity, UsesPoolAndSkipsSentenceStart) {
  Segment s = english();
  Rng rng(4);
  const auto p = swap_entity(s, rng, resources().entity_pool);
  expect_valid(p);
  EXPECT_EQ(p.perturbed_translation.find("Geneva"), std::string::npos);
  EXPECT_EQ(p.perturbed_translation.rfind("The committee", 0), 0u);
  Segment plain = s;
  plain.translation = "Lowercase words only here";
  EXPECT_THROW(swap_entity(plain, rng, resources().entity_pool), NotApplicable);
  EXPECT_THROW(swap_entity(s, rng, {}), ConfigError);
}

TEST(Negation, LongestRuleWinsAndCaseKept) {
  Segment s = english();
  Rng rng(5);
  const auto p = negate(s, default_negation_lexicon(), rng);
  expect_valid(p);
  EXPECT_EQ(p.perturbed_translation, "The committee is ready to approve 12 proposals in Geneva today");
  Segment cap = s;
  cap.translation = "Can you see it";
  EXPECT_EQ(negate(cap, default_negation_lexicon(), rng).perturbed_translation, "Cannot you see it");
  Segment none = s;
  none.translation = "Nothing matches here";
  EXPECT_THROW(negate(none, default_negation_lexicon(), rng), NotApplicable);
}

TEST(Negation, LexiconParsing) {
  const auto rules = parse_negation_lexicon("# comment\n\nfoo => bar\n  a b=>c  \n");
  ASSERT_EQ(rules.size(), 2u);
  EXPECT_EQ(rules[1].from, "a b");
  EXPECT_EQ(rules[1].to, "c");
  EXPECT_THROW(parse_negation_lexicon("foo bar\n"), ConfigError);
  EXPECT_THROW(parse_negation_lexicon("foo =>\n"), ConfigError);
}

TEST(AddText, SpanCoversFragmentAndJoin) {
  Segment s = english();
  const auto res = resources();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const auto p = add_text(s, res.sentence_pool, rng);
    expect_valid(p);
    const auto& sp = p.injected_spans[0];
    const auto len = utf8::length(p.perturbed_translation);
    const auto rest = sp.start == 0 ? utf8::substr(p.perturbed_translation, sp.end, len)
                                    : utf8::substr(p.perturbed_translation, 0, sp.start);
    EXPECT_EQ(rest, s.translation);
    const auto words = words_of(utf8::substr(p.perturbed_translation, sp.start, sp.end));
    EXPECT_GE(words.size(), 3u);
    EXPECT_LE(words.size(), 12u);
  }
}

TEST(MaskInfill, ReplacesWindowWithSamples) {
  Segment s = english();
  const auto res = resources();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const auto p = mask_infill(s, res.unigrams, rng);
    expect_valid(p);
    const auto& sp = p.injected_spans[0];
    const auto fill = utf8::substr(p.perturbed_translation, sp.start, sp.end);
    const auto words = words_of(fill);
    EXPECT_GE(words.size(), 1u);
    EXPECT_LE(words.size(), 4u);
    for (const auto& w : words) {
      const auto word = utf8::substr(fill, w.start, w.end);
      EXPECT_TRUE(std::binary_search(res.unigrams.words().begin(), res.unigrams.words().end(), word));
    }
  }
  Segment short_seg = s;
  short_seg.translation = "too short here";
  Rng rng(0);
  EXPECT_THROW(mask_infill(short_seg, res.unigrams, rng), NotApplicable);
  EXPECT_THROW(mask_infill(s, UnigramTable{}, rng), ConfigError);
}

TEST(Unigrams, SortedWithCounts) {
  const std::vector<std::string> texts = {"b a b", "c b"};
  const auto t = UnigramTable::from_texts(texts);
  EXPECT_EQ(t.words(), (std::vector<std::string>{"a", "b", "c"}));
  std::map<std::string, int> seen;
  Rng rng(6);
  for (int i = 0; i < 5000; ++i) seen[t.sample(rng)]++;
  EXPECT_NEAR(seen["b"] / 5000.0, 0.6, 0.03);
}

TEST(Generators, DeterministicUnderSeed) {
  const Segment s = english();
  const auto res = resources();
  for (auto k : kAllKinds) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng a(item_seed(seed, s.id, k)), b(item_seed(seed, s.id, k));
      const auto pa = apply(k, s, res, a);
      const auto pb = apply(k, s, res, b);
      expect_valid(pa);
      EXPECT_EQ(pa.perturbed_translation, pb.perturbed_translation);
      EXPECT_EQ(pa.injected_spans, pb.injected_spans);
    }
  }
}

TEST(ToSegment, KeepsBaseSpansOutsideEdit) {
  Segment s = english();
  Rng rng(7);
  const auto p = swap_number(s, rng);
  const auto kept = to_segment(p, true);
  ASSERT_EQ(kept.gold_spans->size(), 3u);
  EXPECT_EQ((*kept.gold_spans)[0], (*s.gold_spans)[0]);
  const auto& moved = (*kept.gold_spans)[2];
  EXPECT_EQ(utf8::substr(kept.translation, moved.start, moved.end), "today");
  EXPECT_DOUBLE_EQ(*kept.gold_score, mqm_score(*kept.gold_spans));
  EXPECT_EQ(to_segment(p).gold_spans->size(), 1u);
  EXPECT_EQ(kept.id, "e1::swap_num");
}

TEST(Resources, MissingNamesResource) {
  Resources r;
  EXPECT_EQ(missing_resource(Kind::AddText, r), "sentence pool");
  EXPECT_EQ(missing_resource(Kind::SwapNe, r), "entity pool");
  EXPECT_EQ(missing_resource(Kind::MaskInfill, r), "unigram table");
  EXPECT_FALSE(missing_resource(Kind::Negation, r));
  EXPECT_FALSE(missing_resource(Kind::Oscillatory, r));
}

TEST(Stress, ReportAggregatesPerKind) {
  std::vector<StressPair> pairs;
  pairs.push_back({Kind::SwapNum, {0.9, {}}, {0.5, {{0, 1, Severity::Major, {}}}}});
  pairs.push_back({Kind::SwapNum, {0.8, {}}, {0.795, {}}});
  pairs.push_back({Kind::Oscillatory, {1.0, {}}, {0.05, {{0, 1, Severity::Critical, {}}, {2, 3, Severity::Minor, {}}}}});
  const auto rep = stress_report(pairs);
  ASSERT_EQ(rep.size(), 2u);
  EXPECT_EQ(rep[0].kind, Kind::Oscillatory);
  EXPECT_EQ(rep[0].span_severity[3], 1u);
  EXPECT_EQ(rep[0].item_severity[3], 1u);
  EXPECT_EQ(rep[0].score_histogram[0], 1u);
  const auto& num = rep[1];
  EXPECT_EQ(num.count, 2u);
  EXPECT_EQ(num.no_error, 1u);
  EXPECT_DOUBLE_EQ(num.no_error_rate, 50.0);
  EXPECT_NEAR(num.delta.median, (40.0 + 0.5) / 2, 1e-9);
  EXPECT_NEAR(num.delta.min, 0.5, 1e-9);
  EXPECT_DOUBLE_EQ(num.delta.fraction_below_one_point, 0.5);
  const std::vector<double> v = {1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 1.0), 4.0);
}
