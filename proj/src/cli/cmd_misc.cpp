#include <filesystem>
#include <map>

#include "common.hpp"
#include "spanmetric/error.hpp"
#include "spanmetric/io.hpp"
#include "spanmetric/synthetic.hpp"

namespace spanmetric::cli {

namespace {

struct SynthOptions {
  std::string out_dir;
  std::size_t segments = synthetic::Config{}.segments;
  std::uint64_t seed = synthetic::Config{}.seed;
  std::size_t detection_positives = synthetic::Config{}.detection_positives;
};

int run_synth(const SynthOptions& o, std::ostream& out) {
  synthetic::Config cfg;
  cfg.segments = o.segments;
  cfg.seed = o.seed;
  cfg.detection_positives = o.detection_positives;
  const auto corpus = synthetic::generate(cfg);
  std::filesystem::create_directories(o.out_dir);
  const std::filesystem::path dir(o.out_dir);
  auto write = [&](const std::string& name, const std::vector<Segment>& segs,
                   const std::vector<std::uint8_t>* positive) {
    std::vector<json> lines;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      json j = jsonl::segment_to_json(segs[i]);
      if (positive) j["hallucination"] = (*positive)[i] != 0;
      lines.push_back(std::move(j));
    }
    jsonl::write_records((dir / name).string(), lines);
    out << name << ": " << lines.size() << " segments\n";
  };
  write("phase1.jsonl", corpus.phase_one, nullptr);
  write("phase2.jsonl", corpus.phase_two, nullptr);
  write("phase3.jsonl", corpus.phase_three, nullptr);
  write("heldout.jsonl", corpus.held_out, nullptr);
  write("detection.jsonl", corpus.detection, &corpus.is_positive);
  json cfg_json;
  cfg_json["out_dir"] = o.out_dir;
  cfg_json["segments"] = o.segments;
  cfg_json["seed"] = o.seed;
  cfg_json["detection_positives"] = o.detection_positives;
  io::atomic_write((dir / "synth.run.json").string(), dump_pretty(run_record("synth", cfg_json)));
  return kOk;
}

struct DaOptions {
  std::string annotations;
  std::optional<double> z_min;
  std::optional<double> z_max;
  std::string out;
};

int run_da_scale(const DaOptions& o, std::ostream& out) {
  std::vector<DaAnnotation> anns;
  for (const auto& [line, j] : jsonl::read_objects(o.annotations)) {
    try {
      anns.push_back({jsonl::get_string(j, "segment_id"), jsonl::get_number(j, "raw"),
                      jsonl::get_number(j, "z")});
    } catch (const ParseError& e) {
      throw ParseError(o.annotations + ":" + std::to_string(line) + ": " + e.what(), line);
    }
  }
  DaScaler scaler;
  if (o.z_min && o.z_max) {
    scaler = {*o.z_min, *o.z_max};
  } else if (o.z_min || o.z_max) {
    throw CommandError(kConfigFailure, "give both --z-min and --z-max or neither");
  } else {
    scaler = fit_da_scaler(anns);
  }
  std::map<std::string, std::pair<double, std::size_t>> acc;
  std::vector<std::string> order;
  for (const auto& a : anns) {
    auto [it, fresh] = acc.emplace(a.segment_id, std::make_pair(0.0, std::size_t{0}));
    if (fresh) order.push_back(a.segment_id);
    it->second.first += scale_da(a.z, scaler);
    it->second.second += 1;
  }
  std::vector<json> lines;
  for (const auto& id : order) {
    const auto& [sum, n] = acc.at(id);
    json j;
    j["segment_id"] = id;
    j["gold_score"] = sum / static_cast<double>(n);
    j["annotations"] = n;
    lines.push_back(std::move(j));
  }
  jsonl::write_records(o.out, lines);
  json cfg;
  cfg["annotations"] = o.annotations;
  cfg["out"] = o.out;
  json rec = run_record("da-scale", cfg);
  rec["z_min"] = scaler.z_min;
  rec["z_max"] = scaler.z_max;
  write_sidecar(o.out, rec);
  out << "z_min " << scaler.z_min << " z_max " << scaler.z_max << ", " << lines.size() << " segments\n";
  return kOk;
}

}  // namespace

Command add_synth(CLI::App& app, std::ostream& out) {
  auto o = std::make_shared<SynthOptions>();
  auto* sub = app.add_subcommand("synth", "Write the generated training and evaluation corpus");
  add_config_option(sub);
  sub->add_option("--out-dir", o->out_dir, "Output directory")->required();
  sub->add_option("--segments", o->segments, "Segments across all splits")->capture_default_str();
  sub->add_option("--seed", o->seed, "Generation seed")->capture_default_str();
  sub->add_option("--detection-positives", o->detection_positives, "Detached hallucinations in the detection set")
      ->capture_default_str();
  return [o, &out]() { return run_synth(*o, out); };
}

Command add_da_scale(CLI::App& app, std::ostream& out) {
  auto o = std::make_shared<DaOptions>();
  auto* sub = app.add_subcommand("da-scale", "Min-max scale z-normalised direct assessments to [0, 1]");
  add_config_option(sub);
  sub->add_option("--annotations", o->annotations, "JSONL of {segment_id, raw, z}")->required();
  sub->add_option("--z-min", o->z_min, "Lower bound (default: fitted)");
  sub->add_option("--z-max", o->z_max, "Upper bound (default: fitted)");
  sub->add_option("--out", o->out, "Per-segment gold scores JSONL")->required();
  return [o, &out]() { return run_da_scale(*o, out); };
}

}  // namespace spanmetric::cli
