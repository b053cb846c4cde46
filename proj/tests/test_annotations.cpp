#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spanmetric/annotations.hpp"
#include "spanmetric/error.hpp"
#include "spanmetric/rng.hpp"
#include "spanmetric/utf8.hpp"

using namespace spanmetric;

namespace {

std::vector<CharRange> word_offsets(std::size_t n) {
  std::vector<CharRange> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({4 * i, 4 * i + 3});
  return out;
}

std::vector<ErrorSpan> random_spans(Rng& rng, std::size_t max_count) {
  std::vector<ErrorSpan> spans(rng.below(max_count + 1));
  for (auto& s : spans) {
    s.start = rng.below(50);
    s.end = s.start + 1 + rng.below(10);
    s.severity = severity_at(1 + rng.below(3));
  }
  return spans;
}

}  // namespace

TEST(Severity, NamesRoundTrip) {
  for (auto s : kAllSeverities) EXPECT_EQ(parse_severity(to_string(s)), s);
  EXPECT_EQ(parse_severity("MAJ"), Severity::Major);
  EXPECT_EQ(parse_severity("Crit"), Severity::Critical);
  EXPECT_EQ(parse_severity("min"), Severity::Minor);
  EXPECT_FALSE(parse_severity("fatal"));
}

TEST(Mqm, PenaltyMatchesOracle) {
  Rng rng(1);
  for (int t = 0; t < 2000; ++t) {
    const auto spans = random_spans(rng, 6);
    EXPECT_EQ(error_penalty(spans), oracle::penalty(spans));
    EXPECT_EQ(mqm_score(spans), oracle::mqm(spans));
  }
}

TEST(Mqm, Boundaries) {
  EXPECT_EQ(mqm_score({}), 1.0);
  std::vector<ErrorSpan> five(5, ErrorSpan{0, 1, Severity::Major, {}});
  EXPECT_EQ(mqm_score(five), 0.0);
  std::vector<ErrorSpan> four(4, ErrorSpan{0, 1, Severity::Major, {}});
  EXPECT_DOUBLE_EQ(mqm_score(four), 0.2);
  std::vector<ErrorSpan> many(3, ErrorSpan{0, 1, Severity::Critical, {}});
  EXPECT_EQ(error_penalty(many), 30);
  EXPECT_EQ(mqm_score(many), 0.0);
  EXPECT_DOUBLE_EQ(mqm_score(std::vector<ErrorSpan>{{0, 1, Severity::Minor, {}}}), 0.96);
}

TEST(Spans, RunsTakeMaxSeverity) {
  TokenTags t;
  t.offsets = word_offsets(6);
  t.tags = {Severity::Ok, Severity::Minor, Severity::Critical, Severity::Ok, Severity::Major,
            Severity::Minor};
  const auto spans = tags_to_spans(t);
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[0], (ErrorSpan{4, 11, Severity::Critical, {}}));
  EXPECT_EQ(spans[1], (ErrorSpan{16, 23, Severity::Major, {}}));
}

TEST(Spans, RoundTripPreservesMask) {
  Rng rng(2);
  for (int t = 0; t < 2000; ++t) {
    TokenTags tags;
    const std::size_t n = 1 + rng.below(20);
    tags.offsets = word_offsets(n);
    for (std::size_t i = 0; i < n; ++i) tags.tags.push_back(severity_at(rng.below(4)));
    const auto spans = tags_to_spans(tags);
    const auto back = spans_to_tags(spans, tags.offsets, 4 * n);
    EXPECT_EQ(oracle::mask(back.tags), oracle::mask(tags.tags));
  }
}

TEST(Spans, PartialOverlapLabelsToken) {
  const auto offs = word_offsets(3);
  const std::vector<ErrorSpan> spans = {{5, 6, Severity::Minor, {}}, {2, 5, Severity::Major, {}}};
  const auto tags = spans_to_tags(spans, offs, 12);
  EXPECT_EQ(tags.tags, (std::vector<Severity>{Severity::Major, Severity::Major, Severity::Ok}));
}

TEST(Spans, InvalidInputsThrow) {
  const auto offs = word_offsets(2);
  EXPECT_THROW(spans_to_tags(std::vector<ErrorSpan>{{3, 3, Severity::Minor, {}}}, offs, 8),
               ValidationError);
  EXPECT_THROW(spans_to_tags(std::vector<ErrorSpan>{{0, 9, Severity::Minor, {}}}, offs, 8),
               ValidationError);
  TokenTags bad;
  bad.offsets = {{0, 3}, {2, 5}};
  bad.tags = {Severity::Ok, Severity::Ok};
  EXPECT_THROW(tags_to_spans(bad), ValidationError);
  bad.offsets = {{0, 3}};
  EXPECT_THROW(tags_to_spans(bad), ValidationError);
}

TEST(Segment, ValidationCountsScalars) {
  Segment s;
  s.id = "x";
  s.translation = "caf\xc3\xa9";  // four scalars, five bytes
  s.gold_spans = std::vector<ErrorSpan>{{3, 4, Severity::Minor, {}}};
  s.gold_score = 0.96;
  EXPECT_TRUE(validate_segment(s).empty());
  s.gold_spans = std::vector<ErrorSpan>{{3, 5, Severity::Minor, {}}};
  EXPECT_EQ(validate_segment(s).size(), 1u);
  s.gold_spans.reset();
  s.gold_score = 1.5;
  EXPECT_EQ(validate_segment(s).front().field, "gold_score");
}

TEST(Utf8, LengthAndSubstr) {
  const std::string t = "a\xc3\xa9\xe2\x82\xac" "b";
  EXPECT_EQ(utf8::length(t), 4u);
  EXPECT_EQ(utf8::substr(t, 1, 3), "\xc3\xa9\xe2\x82\xac");
  EXPECT_EQ(utf8::encode(utf8::decode(t)), t);
  EXPECT_EQ(utf8::length("\xff"), 1u);
}
