#include <map>

#include "common.hpp"
#include "spanmetric/checkpoint.hpp"
#include "spanmetric/error.hpp"
#include "spanmetric/inference.hpp"
#include "spanmetric/kernels.hpp"
#include "spanmetric/utf8.hpp"

namespace spanmetric::cli {

namespace {

struct ScoreOptions {
  std::string segments;
  std::string model;
  std::string predictions;
  std::string mode = "unified";
  std::vector<double> weights = {1.0 / 9.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 9.0};
  std::string out;
  bool serial = false;

  json to_json() const {
    json j;
    j["segments"] = segments;
    j["model"] = model.empty() ? json() : json(model);
    j["predictions"] = predictions.empty() ? json() : json(predictions);
    j["mode"] = mode;
    j["weights"] = weights;
    j["out"] = out;
    j["serial"] = serial;
    return j;
  }
};

PassOutput pass_from_json(const json& j, const std::string& name) {
  if (!j.is_object()) throw ParseError("pass '" + name + "' must be an object");
  PassOutput p;
  p.sentence_score = jsonl::get_number(j, "score");
  auto it = j.find("word_probs");
  if (it == j.end() || !it->is_array()) throw ParseError("pass '" + name + "' needs word_probs");
  for (const auto& row : *it) {
    if (!row.is_array() || row.size() != kSeverityCount) {
      throw ParseError("pass '" + name + "': every word_probs row needs four numbers");
    }
    std::array<double, kSeverityCount> r{};
    for (std::size_t k = 0; k < kSeverityCount; ++k) {
      if (!row[k].is_number()) throw ParseError("pass '" + name + "': non-numeric probability");
      r[k] = row[k].get<double>();
    }
    p.words.rows.push_back(r);
  }
  try {
    check_distribution(p.words);
  } catch (const ValidationError& e) {
    throw ParseError("pass '" + name + "': " + e.what());
  }
  return p;
}

struct Prediction {
  std::vector<CharRange> offsets;
  PassSet passes;
};

std::map<std::string, Prediction> read_predictions(const std::string& path) {
  std::map<std::string, Prediction> out;
  for (const auto& [line, j] : jsonl::read_objects(path)) {
    try {
      Prediction p;
      const auto id = jsonl::get_string(j, "id");
      auto off = j.find("offsets");
      if (off == j.end() || !off->is_array()) throw ParseError("missing offsets array");
      for (const auto& o : *off) {
        if (!o.is_array() || o.size() != 2 || !o[0].is_number_unsigned() || !o[1].is_number_unsigned()) {
          throw ParseError("offsets must be [start, end] pairs of non-negative integers");
        }
        p.offsets.push_back({o[0].get<std::size_t>(), o[1].get<std::size_t>()});
      }
      auto passes = j.find("passes");
      if (passes == j.end() || !passes->is_object()) throw ParseError("missing passes object");
      if (passes->contains("src")) p.passes.src = pass_from_json((*passes)["src"], "src");
      if (passes->contains("ref")) p.passes.ref = pass_from_json((*passes)["ref"], "ref");
      if (passes->contains("src_ref")) p.passes.src_ref = pass_from_json((*passes)["src_ref"], "src_ref");
      if (!out.emplace(id, std::move(p)).second) throw ParseError("duplicate id '" + id + "'");
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(line) + ": " + e.what(), line);
    }
  }
  return out;
}

bool passes_cover(const PassSet& p, Mode mode) {
  switch (mode) {
    case Mode::Src:
      return p.src.has_value();
    case Mode::Ref:
      return p.ref.has_value();
    case Mode::SrcRef:
      return p.src_ref.has_value();
    case Mode::Unified:
      return p.src && p.ref && p.src_ref;
  }
  return false;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(); }

json result_record(const jsonl::SegmentRecord& rec, Mode mode, const InferenceResult& r) {
  json j;
  j["id"] = rec.segment.id;
  if (rec.segment.system) j["system"] = *rec.segment.system;
  if (rec.lp) j["lp"] = *rec.lp;
  j["mode"] = std::string(to_string(mode));
  j["score"] = r.final_score;
  json b;
  b["src"] = optional_number(r.bundle.y_src);
  b["ref"] = optional_number(r.bundle.y_ref);
  b["src_ref"] = optional_number(r.bundle.y_src_ref);
  b["mqm"] = r.bundle.y_mqm;
  j["bundle"] = b;
  j["spans"] = jsonl::spans_to_json(r.spans);
  return j;
}

int run_score(const ScoreOptions& o, std::ostream& out) {
  const auto mode = parse_mode(o.mode);
  if (!mode) throw CommandError(kConfigFailure, "unknown mode '" + o.mode + "'");
  const auto weights = weights_from(o.weights);
  const auto records = jsonl::read_segments(o.segments);

  std::vector<std::string> unsatisfiable;
  for (const auto& r : records) {
    if (!net::mode_satisfiable(r.segment, *mode)) unsatisfiable.push_back(r.segment.id);
  }
  if (!unsatisfiable.empty()) {
    throw CommandError(kModeUnsatisfiable, "mode " + o.mode + " needs a reference; missing for " +
                                               summarize_ids(unsatisfiable));
  }

  std::vector<InferenceResult> results;
  if (!o.model.empty()) {
    const auto params = net::load_checkpoint(o.model);
    const net::Vocab vocab(static_cast<std::size_t>(params.config().bucket_count));
    std::vector<net::PreparedSegment> prepared;
    for (const auto& r : records) {
      prepared.push_back(net::prepare_segment(r.segment, vocab, *mode,
                                              static_cast<std::size_t>(params.config().max_length)));
    }
    results = o.serial ? kernels::serial::score_batch(params, prepared, *mode, weights)
                       : kernels::parallel::score_batch(params, prepared, *mode, weights);
  } else {
    const auto preds = read_predictions(o.predictions);
    std::vector<std::string> missing, short_passes;
    for (const auto& r : records) {
      auto it = preds.find(r.segment.id);
      if (it == preds.end()) {
        missing.push_back(r.segment.id);
      } else if (!passes_cover(it->second.passes, *mode)) {
        short_passes.push_back(r.segment.id);
      }
    }
    if (!missing.empty()) {
      throw CommandError(kAlignmentFailure, "no predictions for " + summarize_ids(missing));
    }
    if (!short_passes.empty()) {
      throw CommandError(kModeUnsatisfiable,
                         "predictions lack the passes mode " + o.mode + " needs for " +
                             summarize_ids(short_passes));
    }
    for (const auto& r : records) {
      const auto& p = preds.at(r.segment.id);
      const std::size_t len = utf8::length(r.segment.translation);
      for (std::size_t k = 0; k < p.offsets.size(); ++k) {
        const auto& off = p.offsets[k];
        if (off.start >= off.end || off.end > len || (k > 0 && p.offsets[k - 1].end > off.start)) {
          throw CommandError(kAlignmentFailure, "predictions for " + r.segment.id +
                                                    ": token offsets do not fit the translation");
        }
      }
      try {
        results.push_back(compose_inference(p.passes, p.offsets, *mode, weights));
      } catch (const ShapeError& e) {
        throw CommandError(kAlignmentFailure, "predictions for " + r.segment.id + ": " + e.what());
      }
    }
  }

  std::vector<json> lines;
  for (std::size_t i = 0; i < records.size(); ++i) lines.push_back(result_record(records[i], *mode, results[i]));
  jsonl::write_records(o.out, lines);
  write_sidecar(o.out, run_record("score", o.to_json()));
  out << "scored " << lines.size() << " segments (" << o.mode << ") -> " << o.out << "\n";
  return kOk;
}

}  // namespace

Command add_score(CLI::App& app, std::ostream& out) {
  auto o = std::make_shared<ScoreOptions>();
  auto* sub = app.add_subcommand("score", "Score segments with a checkpoint or exported predictions");
  add_config_option(sub);
  sub->add_option("--segments", o->segments, "Segments JSONL")->required();
  auto* model = sub->add_option("--model", o->model, "Model checkpoint");
  auto* preds = sub->add_option("--predictions", o->predictions,
                                "Per-pass predictions JSONL exported from any metric");
  model->excludes(preds);
  sub->add_option("--mode", o->mode, "src | ref | src+ref | unified")->capture_default_str();
  sub->add_option("--weights", o->weights, "Aggregation weights: src ref src+ref mqm")
      ->expected(4)
      ->capture_default_str();
  sub->add_option("--out", o->out, "Output scores JSONL")->required();
  sub->add_flag("--serial", o->serial, "Use the serial reference kernel");
  return [o, &out, model, preds]() {
    if (model->count() == 0 && preds->count() == 0) {
      throw CommandError(kConfigFailure, "score needs --model or --predictions");
    }
    return run_score(*o, out);
  };
}

}  // namespace spanmetric::cli
