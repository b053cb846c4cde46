#pragma once

// Severity labels, error spans, segments, and the span -> MQM algebra.
//
// All character offsets count Unicode scalar values of the UTF-8 text, so a
// span means the same region regardless of how the text is encoded.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spanmetric {

enum class Severity : std::uint8_t { Ok = 0, Minor = 1, Major = 2, Critical = 3 };

inline constexpr std::size_t kSeverityCount = 4;
inline constexpr std::array<Severity, kSeverityCount> kAllSeverities = {
    Severity::Ok, Severity::Minor, Severity::Major, Severity::Critical};

constexpr std::size_t index_of(Severity s) { return static_cast<std::size_t>(s); }
constexpr Severity severity_at(std::size_t i) { return static_cast<Severity>(i); }
constexpr Severity max_severity(Severity a, Severity b) { return a < b ? b : a; }

// MQM multipliers: OK 0, minor 1, major 5, critical 10.
constexpr int penalty_weight(Severity s) {
  switch (s) {
    case Severity::Minor:
      return 1;
    case Severity::Major:
      return 5;
    case Severity::Critical:
      return 10;
    case Severity::Ok:
      break;
  }
  return 0;
}

// On-disk names: "ok", "minor", "major", "critical".
std::string_view to_string(Severity s);
// Accepts the on-disk names plus the short forms OK/MIN/MAJ/CRIT (any case).
std::optional<Severity> parse_severity(std::string_view name);

struct CharRange {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive

  friend bool operator==(const CharRange&, const CharRange&) = default;
};

struct ErrorSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  Severity severity = Severity::Minor;
  std::optional<std::string> category;

  friend bool operator==(const ErrorSpan&, const ErrorSpan&) = default;
};

struct TokenTags {
  std::vector<Severity> tags;
  std::vector<CharRange> offsets;

  std::size_t size() const { return tags.size(); }
};

struct Segment {
  std::string id;
  std::string source;
  std::string translation;
  std::optional<std::string> reference;
  std::optional<std::vector<ErrorSpan>> gold_spans;
  std::optional<double> gold_score;
  std::optional<std::string> system;
  std::optional<std::string> annotator;
};

struct Violation {
  std::string field;
  std::string message;
};

// Throws ValidationError if tags and offsets disagree in length or offsets
// are not strictly increasing and non-overlapping.
void check_token_tags(const TokenTags& tags);

// Groups maximal runs of consecutive non-OK tokens into spans. Each span
// covers first-token start to last-token end and takes the most severe tag
// of its run.
std::vector<ErrorSpan> tags_to_spans(const TokenTags& tags);

// Labels each token with the most severe span overlapping it (partial
// overlap counts), OK otherwise. Spans are validated against text_length.
TokenTags spans_to_tags(std::span<const ErrorSpan> spans,
                        std::span<const CharRange> offsets,
                        std::size_t text_length);

int error_penalty(std::span<const ErrorSpan> spans);

// (25 - e) / 25 for e < 25, else 0.
double mqm_score(std::span<const ErrorSpan> spans);

std::vector<Violation> validate_span(const ErrorSpan& span, std::size_t text_length,
                                     std::string_view field);

std::vector<Violation> validate_segment(const Segment& seg);

}  // namespace spanmetric
