#include "spanmetric/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "spanmetric/error.hpp"

namespace spanmetric {

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Src:
      return "src";
    case Mode::Ref:
      return "ref";
    case Mode::SrcRef:
      return "src+ref";
    case Mode::Unified:
      return "unified";
  }
  return "unified";
}

std::optional<Mode> parse_mode(std::string_view name) {
  if (name == "src") return Mode::Src;
  if (name == "ref") return Mode::Ref;
  if (name == "src+ref" || name == "src_ref") return Mode::SrcRef;
  if (name == "unified") return Mode::Unified;
  return std::nullopt;
}

void check_distribution(const WordDistribution& dist) {
  for (std::size_t i = 0; i < dist.rows.size(); ++i) {
    double sum = 0.0;
    for (double p : dist.rows[i]) {
      if (!(p >= 0.0)) throw ValidationError("word distribution row " + std::to_string(i) +
                                             " has a negative or NaN entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ValidationError("word distribution row " + std::to_string(i) + " sums to " +
                            std::to_string(sum));
    }
  }
}

WordDistribution softmax_rows(std::span<const std::array<double, kSeverityCount>> logits) {
  WordDistribution out;
  out.rows.reserve(logits.size());
  for (const auto& row : logits) {
    const double m = *std::max_element(row.begin(), row.end());
    std::array<double, kSeverityCount> p{};
    double z = 0.0;
    for (std::size_t c = 0; c < kSeverityCount; ++c) {
      p[c] = std::exp(row[c] - m);
      z += p[c];
    }
    for (auto& v : p) v /= z;
    out.rows.push_back(p);
  }
  return out;
}

void AggregationWeights::validate() const {
  const std::array<double, 4> w = {w_src, w_ref, w_src_ref, w_mqm};
  double sum = 0.0;
  for (double v : w) {
    if (!(v >= 0.0)) throw ConfigError("aggregation weights must be nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw ConfigError("aggregation weights must sum to 1 (got " + std::to_string(sum) + ")");
  }
}

WordDistribution average_distributions(std::span<const WordDistribution> dists) {
  if (dists.empty()) throw ShapeError("average_distributions: no distributions given");
  const std::size_t n = dists.front().size();
  for (const auto& d : dists) {
    if (d.size() != n) {
      throw ShapeError("average_distributions: token counts differ (" + std::to_string(n) +
                       " vs " + std::to_string(d.size()) + ")");
    }
  }
  WordDistribution out;
  out.rows.assign(n, {});
  const double inv = 1.0 / static_cast<double>(dists.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < kSeverityCount; ++c) {
      double s = 0.0;
      for (const auto& d : dists) s += d.rows[i][c];
      out.rows[i][c] = s * inv;
    }
  }
  return out;
}

TokenTags decode_tags(const WordDistribution& dist, std::span<const CharRange> offsets) {
  if (dist.size() != offsets.size()) {
    throw ShapeError("decode_tags: " + std::to_string(dist.size()) + " rows but " +
                     std::to_string(offsets.size()) + " token offsets");
  }
  TokenTags out;
  out.offsets.assign(offsets.begin(), offsets.end());
  out.tags.reserve(dist.size());
  for (const auto& row : dist.rows) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < kSeverityCount; ++c) {
      if (row[c] > row[best]) best = c;  // strict: ties keep the milder label
    }
    out.tags.push_back(severity_at(best));
  }
  return out;
}

double aggregate(const ScoreBundle& bundle, const AggregationWeights& weights) {
  weights.validate();
  auto term = [](const std::optional<double>& v, double w, const char* name) {
    if (!v) {
      if (w != 0.0) {
        throw ConfigError(std::string("aggregate: component ") + name +
                          " is missing but has nonzero weight");
      }
      return 0.0;
    }
    return w * *v;
  };
  return term(bundle.y_src, weights.w_src, "y_src") + term(bundle.y_ref, weights.w_ref, "y_ref") +
         term(bundle.y_src_ref, weights.w_src_ref, "y_src_ref") + weights.w_mqm * bundle.y_mqm;
}

namespace {

const PassOutput& require(const std::optional<PassOutput>& pass, const char* name, Mode mode) {
  if (!pass) {
    throw ConfigError(std::string("compose_inference: mode ") + std::string(to_string(mode)) +
                      " requires the " + name + " pass");
  }
  return *pass;
}

}  // namespace

InferenceResult compose_inference(const PassSet& passes, std::span<const CharRange> offsets,
                                  Mode mode, const AggregationWeights& weights) {
  InferenceResult result;
  WordDistribution dist;
  switch (mode) {
    case Mode::Unified: {
      const auto& s = require(passes.src, "src", mode);
      const auto& r = require(passes.ref, "ref", mode);
      const auto& sr = require(passes.src_ref, "src+ref", mode);
      const std::array<WordDistribution, 3> all = {s.words, r.words, sr.words};
      dist = average_distributions(all);
      result.bundle.y_src = s.sentence_score;
      result.bundle.y_ref = r.sentence_score;
      result.bundle.y_src_ref = sr.sentence_score;
      break;
    }
    case Mode::Src: {
      const auto& s = require(passes.src, "src", mode);
      dist = s.words;
      result.bundle.y_src = s.sentence_score;
      break;
    }
    case Mode::Ref: {
      const auto& r = require(passes.ref, "ref", mode);
      dist = r.words;
      result.bundle.y_ref = r.sentence_score;
      break;
    }
    case Mode::SrcRef: {
      const auto& sr = require(passes.src_ref, "src+ref", mode);
      dist = sr.words;
      result.bundle.y_src_ref = sr.sentence_score;
      break;
    }
  }
  check_distribution(dist);
  result.tags = decode_tags(dist, offsets);
  result.spans = tags_to_spans(result.tags);
  result.bundle.y_mqm = mqm_score(result.spans);
  switch (mode) {
    case Mode::Unified:
      result.final_score = aggregate(result.bundle, weights);
      break;
    case Mode::Src:
      result.final_score = *result.bundle.y_src;
      break;
    case Mode::Ref:
      result.final_score = *result.bundle.y_ref;
      break;
    case Mode::SrcRef:
      result.final_score = *result.bundle.y_src_ref;
      break;
  }
  return result;
}

DaScaler fit_da_scaler(std::span<const DaAnnotation> annotations) {
  struct Group {
    std::vector<double> z;
    bool all_zero = true;
    bool all_hundred = true;
  };
  std::map<std::string, Group> groups;
  for (const auto& a : annotations) {
    auto& g = groups[a.segment_id];
    g.z.push_back(a.z);
    g.all_zero = g.all_zero && a.raw == 0.0;
    g.all_hundred = g.all_hundred && a.raw == 100.0;
  }
  double lo_sum = 0.0, hi_sum = 0.0;
  std::size_t lo_n = 0, hi_n = 0;
  for (const auto& [id, g] : groups) {
    if (g.z.size() < 2) continue;
    if (g.all_zero) {
      for (double z : g.z) lo_sum += z;
      lo_n += g.z.size();
    } else if (g.all_hundred) {
      for (double z : g.z) hi_sum += z;
      hi_n += g.z.size();
    }
  }
  if (lo_n == 0 || hi_n == 0) {
    throw ConfigError(
        "fit_da_scaler: need at least one multiply-annotated segment scored 0 by every annotator "
        "and one scored 100 by every annotator; supply z_min/z_max manually");
  }
  DaScaler s{lo_sum / static_cast<double>(lo_n), hi_sum / static_cast<double>(hi_n)};
  if (!(s.z_min < s.z_max)) {
    throw ConfigError("fit_da_scaler: fitted z_min is not below z_max; supply bounds manually");
  }
  return s;
}

double scale_da(double z, const DaScaler& scaler) {
  if (!(scaler.z_min < scaler.z_max)) throw ConfigError("scale_da: z_min must be below z_max");
  const double v = (z - scaler.z_min) / (scaler.z_max - scaler.z_min);
  return std::clamp(v, 0.0, 1.0);
}

}  // namespace spanmetric
