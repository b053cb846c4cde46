#include "spanmetric/jsonl.hpp"

#include "spanmetric/error.hpp"
#include "spanmetric/io.hpp"

namespace spanmetric::jsonl {

std::string get_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing key '") + key + "'");
  if (!it->is_string()) throw ParseError(std::string("key '") + key + "' must be a string");
  return it->get<std::string>();
}

std::optional<std::string> get_optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ParseError(std::string("key '") + key + "' must be a string");
  return it->get<std::string>();
}

double get_number(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing key '") + key + "'");
  if (!it->is_number()) throw ParseError(std::string("key '") + key + "' must be a number");
  return it->get<double>();
}

std::optional<double> get_optional_number(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw ParseError(std::string("key '") + key + "' must be a number");
  return it->get<double>();
}

json span_to_json(const ErrorSpan& s) {
  json j;
  j["start"] = s.start;
  j["end"] = s.end;
  j["severity"] = std::string(to_string(s.severity));
  if (s.category) j["category"] = *s.category;
  return j;
}

json spans_to_json(std::span<const ErrorSpan> spans) {
  json arr = json::array();
  for (const auto& s : spans) arr.push_back(span_to_json(s));
  return arr;
}

ErrorSpan span_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("span must be an object");
  ErrorSpan s;
  for (const char* key : {"start", "end"}) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_integer() || it->get<long long>() < 0) {
      throw ParseError(std::string("span '") + key + "' must be a non-negative integer");
    }
  }
  s.start = j["start"].get<std::size_t>();
  s.end = j["end"].get<std::size_t>();
  const auto sev = parse_severity(get_string(j, "severity"));
  if (!sev || *sev == Severity::Ok) {
    throw ParseError("span severity must be minor, major or critical");
  }
  s.severity = *sev;
  s.category = get_optional_string(j, "category");
  return s;
}

std::vector<ErrorSpan> spans_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("spans must be an array");
  std::vector<ErrorSpan> out;
  for (const auto& e : j) out.push_back(span_from_json(e));
  return out;
}

json segment_to_json(const Segment& seg) {
  json j;
  j["id"] = seg.id;
  j["source"] = seg.source;
  j["translation"] = seg.translation;
  if (seg.reference) j["reference"] = *seg.reference;
  if (seg.gold_spans) j["gold_spans"] = spans_to_json(*seg.gold_spans);
  if (seg.gold_score) j["gold_score"] = *seg.gold_score;
  if (seg.system) j["system"] = *seg.system;
  if (seg.annotator) j["annotator"] = *seg.annotator;
  return j;
}

Segment segment_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("record must be a JSON object");
  Segment s;
  s.id = get_string(j, "id");
  s.source = get_string(j, "source");
  s.translation = get_string(j, "translation");
  s.reference = get_optional_string(j, "reference");
  if (auto it = j.find("gold_spans"); it != j.end() && !it->is_null()) {
    s.gold_spans = spans_from_json(*it);
  }
  s.gold_score = get_optional_number(j, "gold_score");
  s.system = get_optional_string(j, "system");
  s.annotator = get_optional_string(j, "annotator");
  return s;
}

std::vector<std::pair<std::size_t, json>> read_objects(const std::string& path) {
  const auto lines = io::read_lines(path);
  std::vector<std::pair<std::size_t, json>> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(lines[i]);
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(i + 1) + ": invalid JSON: " + e.what(), i + 1);
    }
    if (!j.is_object()) {
      throw ParseError(path + ":" + std::to_string(i + 1) + ": record must be a JSON object", i + 1);
    }
    out.emplace_back(i + 1, std::move(j));
  }
  return out;
}

std::vector<SegmentRecord> read_segments(const std::string& path) {
  std::vector<SegmentRecord> out;
  for (auto& [line, j] : read_objects(path)) {
    SegmentRecord r;
    try {
      r.segment = segment_from_json(j);
      r.lp = get_optional_string(j, "lp");
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(line) + ": " + e.what(), line);
    }
    const auto v = validate_segment(r.segment);
    if (!v.empty()) {
      throw ParseError(path + ":" + std::to_string(line) + ": " + v.front().field + ": " +
                           v.front().message,
                       line);
    }
    r.raw = std::move(j);
    r.line = line;
    out.push_back(std::move(r));
  }
  return out;
}

std::string to_lines(std::span<const json> records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

void write_records(const std::string& path, std::span<const json> records) {
  io::atomic_write(path, to_lines(records));
}

}  // namespace spanmetric::jsonl
