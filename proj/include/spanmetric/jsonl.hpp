#pragma once

// JSON-lines records for segments and spans. Keys are snake_case and match
// the Segment fields; severities are "minor" | "major" | "critical".

#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spanmetric/annotations.hpp"

namespace spanmetric::jsonl {

using json = nlohmann::ordered_json;

json span_to_json(const ErrorSpan& s);
json spans_to_json(std::span<const ErrorSpan> spans);
// Throws ParseError (line 0) on a malformed span object.
ErrorSpan span_from_json(const json& j);
std::vector<ErrorSpan> spans_from_json(const json& j);

json segment_to_json(const Segment& seg);
// Throws ParseError (line 0) on missing or mistyped fields.
Segment segment_from_json(const json& j);

struct SegmentRecord {
  Segment segment;
  std::optional<std::string> lp;  // optional language-pair grouping key
  json raw;
  std::size_t line = 0;
};

// Parses every non-blank line as one JSON object. ParseError carries the
// 1-based line number.
std::vector<std::pair<std::size_t, json>> read_objects(const std::string& path);

// Segments are also checked with validate_segment.
std::vector<SegmentRecord> read_segments(const std::string& path);

std::string to_lines(std::span<const json> records);
void write_records(const std::string& path, std::span<const json> records);

// Typed field access that throws ParseError naming the key.
std::string get_string(const json& j, const char* key);
std::optional<std::string> get_optional_string(const json& j, const char* key);
double get_number(const json& j, const char* key);
std::optional<double> get_optional_number(const json& j, const char* key);

}  // namespace spanmetric::jsonl
