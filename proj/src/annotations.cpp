#include "spanmetric/annotations.hpp"

#include <algorithm>
#include <cctype>

#include "spanmetric/error.hpp"
#include "spanmetric/utf8.hpp"

namespace spanmetric {

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::Ok:
      return "ok";
    case Severity::Minor:
      return "minor";
    case Severity::Major:
      return "major";
    case Severity::Critical:
      return "critical";
  }
  return "ok";
}

std::optional<Severity> parse_severity(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "ok") return Severity::Ok;
  if (lower == "minor" || lower == "min") return Severity::Minor;
  if (lower == "major" || lower == "maj") return Severity::Major;
  if (lower == "critical" || lower == "crit") return Severity::Critical;
  return std::nullopt;
}

void check_token_tags(const TokenTags& tags) {
  if (tags.tags.size() != tags.offsets.size()) {
    throw ValidationError("token tags: " + std::to_string(tags.tags.size()) + " tags but " +
                          std::to_string(tags.offsets.size()) + " offsets");
  }
  for (std::size_t i = 0; i < tags.offsets.size(); ++i) {
    const auto& r = tags.offsets[i];
    if (r.start >= r.end) {
      throw ValidationError("token " + std::to_string(i) + " has an empty character range");
    }
    if (i > 0 && tags.offsets[i - 1].end > r.start) {
      throw ValidationError("token " + std::to_string(i) + " overlaps or precedes token " +
                            std::to_string(i - 1));
    }
  }
}

std::vector<ErrorSpan> tags_to_spans(const TokenTags& tags) {
  check_token_tags(tags);
  std::vector<ErrorSpan> spans;
  const std::size_t n = tags.size();
  std::size_t i = 0;
  while (i < n) {
    if (tags.tags[i] == Severity::Ok) {
      ++i;
      continue;
    }
    std::size_t j = i;
    Severity worst = tags.tags[i];
    while (j + 1 < n && tags.tags[j + 1] != Severity::Ok) {
      ++j;
      worst = max_severity(worst, tags.tags[j]);
    }
    spans.push_back(ErrorSpan{tags.offsets[i].start, tags.offsets[j].end, worst, std::nullopt});
    i = j + 1;
  }
  return spans;
}

TokenTags spans_to_tags(std::span<const ErrorSpan> spans, std::span<const CharRange> offsets,
                        std::size_t text_length) {
  for (std::size_t k = 0; k < spans.size(); ++k) {
    auto v = validate_span(spans[k], text_length, "spans[" + std::to_string(k) + "]");
    if (!v.empty()) throw ValidationError(v.front().field + ": " + v.front().message);
  }
  TokenTags out;
  out.offsets.assign(offsets.begin(), offsets.end());
  out.tags.assign(offsets.size(), Severity::Ok);
  for (const auto& span : spans) {
    // offsets are sorted, so only the tokens whose range intersects the span
    // need visiting.
    auto first = std::lower_bound(offsets.begin(), offsets.end(), span.start,
                                  [](const CharRange& r, std::size_t pos) { return r.end <= pos; });
    for (auto it = first; it != offsets.end() && it->start < span.end; ++it) {
      auto& tag = out.tags[static_cast<std::size_t>(it - offsets.begin())];
      tag = max_severity(tag, span.severity);
    }
  }
  check_token_tags(out);
  return out;
}

int error_penalty(std::span<const ErrorSpan> spans) {
  int minor = 0, major = 0, critical = 0;
  for (const auto& s : spans) {
    switch (s.severity) {
      case Severity::Minor:
        ++minor;
        break;
      case Severity::Major:
        ++major;
        break;
      case Severity::Critical:
        ++critical;
        break;
      case Severity::Ok:
        break;
    }
  }
  return minor + 5 * major + 10 * critical;
}

double mqm_score(std::span<const ErrorSpan> spans) {
  const int e = error_penalty(spans);
  if (e >= 25) return 0.0;
  return static_cast<double>(25 - e) / 25.0;
}

std::vector<Violation> validate_span(const ErrorSpan& span, std::size_t text_length,
                                     std::string_view field) {
  std::vector<Violation> out;
  const std::string f(field);
  if (span.start >= span.end) {
    out.push_back({f, "span [" + std::to_string(span.start) + ", " + std::to_string(span.end) +
                          ") is empty or reversed"});
  }
  if (span.end > text_length) {
    out.push_back({f, "span end " + std::to_string(span.end) + " exceeds text length " +
                          std::to_string(text_length)});
  }
  if (span.severity == Severity::Ok) {
    out.push_back({f, "span severity must not be ok"});
  }
  return out;
}

std::vector<Violation> validate_segment(const Segment& seg) {
  std::vector<Violation> out;
  if (seg.id.empty()) out.push_back({"id", "segment id is empty"});
  if (seg.gold_spans) {
    const std::size_t len = utf8::length(seg.translation);
    for (std::size_t k = 0; k < seg.gold_spans->size(); ++k) {
      auto v = validate_span((*seg.gold_spans)[k], len, "gold_spans[" + std::to_string(k) + "]");
      out.insert(out.end(), v.begin(), v.end());
    }
  }
  if (seg.gold_score) {
    const double g = *seg.gold_score;
    if (!(g >= 0.0 && g <= 1.0)) {
      out.push_back({"gold_score", "gold score " + std::to_string(g) + " outside [0, 1]"});
    }
  }
  return out;
}

}  // namespace spanmetric
