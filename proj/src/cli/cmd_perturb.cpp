#include <map>

#include "common.hpp"
#include "spanmetric/error.hpp"
#include "spanmetric/io.hpp"
#include "spanmetric/perturb.hpp"

namespace spanmetric::cli {

namespace {

struct PerturbOptions {
  std::string segments;
  std::vector<std::string> kinds;
  std::string sentence_pool;
  std::string entity_pool;
  std::string negation_lexicon;
  std::string unigrams_from;
  std::uint64_t seed = 0;
  bool keep_base_spans = false;
  std::string out;

  json to_json() const {
    json j;
    j["segments"] = segments;
    j["kinds"] = kinds;
    auto path = [](const std::string& p) { return p.empty() ? json() : json(p); };
    j["sentence_pool"] = path(sentence_pool);
    j["entity_pool"] = path(entity_pool);
    j["negation_lexicon"] = negation_lexicon.empty() ? json("builtin") : json(negation_lexicon);
    j["unigrams_from"] = unigrams_from.empty() ? json("segments") : json(unigrams_from);
    j["seed"] = seed;
    j["keep_base_spans"] = keep_base_spans;
    j["out"] = out;
    return j;
  }
};

std::vector<std::string> non_blank_lines(const std::string& path) {
  std::vector<std::string> out;
  for (auto& l : io::read_lines(path)) {
    if (l.find_first_not_of(" \t") != std::string::npos) out.push_back(std::move(l));
  }
  return out;
}

int run_perturb(PerturbOptions o, std::ostream& out) {
  std::vector<perturb::Kind> kinds;
  if (o.kinds.empty()) {
    kinds.assign(perturb::kAllKinds.begin(), perturb::kAllKinds.end());
    for (auto k : kinds) o.kinds.emplace_back(perturb::to_string(k));
  } else {
    for (const auto& name : o.kinds) {
      const auto k = perturb::parse_kind(name);
      if (!k) throw CommandError(kConfigFailure, "unknown perturbation kind '" + name + "'");
      kinds.push_back(*k);
    }
  }
  const auto records = jsonl::read_segments(o.segments);

  perturb::Resources res;
  if (!o.sentence_pool.empty()) res.sentence_pool = non_blank_lines(o.sentence_pool);
  if (!o.entity_pool.empty()) res.entity_pool = non_blank_lines(o.entity_pool);
  if (!o.negation_lexicon.empty()) {
    res.negation_lexicon = perturb::parse_negation_lexicon(io::read_file(o.negation_lexicon));
  }
  std::vector<std::string> texts;
  if (o.unigrams_from.empty()) {
    for (const auto& r : records) texts.push_back(r.segment.translation);
  } else {
    for (const auto& r : jsonl::read_segments(o.unigrams_from)) texts.push_back(r.segment.translation);
  }
  res.unigrams = perturb::UnigramTable::from_texts(texts);
  for (auto k : kinds) {
    if (auto missing = perturb::missing_resource(k, res)) {
      throw CommandError(kConfigFailure,
                         std::string(perturb::to_string(k)) + " needs a non-empty " + *missing);
    }
  }

  std::vector<json> lines;
  std::map<std::string, std::size_t> generated, skipped;
  for (auto k : kinds) {
    generated[std::string(perturb::to_string(k))] = 0;
    skipped[std::string(perturb::to_string(k))] = 0;
  }
  for (const auto& r : records) {
    for (auto k : kinds) {
      const std::string name(perturb::to_string(k));
      Rng rng(perturb::item_seed(o.seed, r.segment.id, k));
      try {
        const auto p = perturb::apply(k, r.segment, res, rng);
        const Segment seg = perturb::to_segment(p, o.keep_base_spans);
        const auto v = validate_segment(seg);
        if (!v.empty()) throw Error("generated record failed validation: " + v.front().message);
        json j = jsonl::segment_to_json(seg);
        j["kind"] = name;
        j["base_id"] = r.segment.id;
        if (r.lp) j["lp"] = *r.lp;
        lines.push_back(std::move(j));
        ++generated[name];
      } catch (const NotApplicable&) {
        ++skipped[name];
      }
    }
  }
  jsonl::write_records(o.out, lines);
  json rec = run_record("perturb", o.to_json());
  rec["generated"] = generated;
  rec["skipped"] = skipped;
  write_sidecar(o.out, rec);
  std::size_t total_skipped = 0;
  for (const auto& [k, n] : skipped) total_skipped += n;
  out << "generated " << lines.size() << " perturbed segments, skipped " << total_skipped << "\n";
  for (const auto& [k, n] : skipped) {
    out << "  " << k << ": " << generated[k] << " generated, " << n << " skipped\n";
  }
  return kOk;
}

}  // namespace

Command add_perturb(CLI::App& app, std::ostream& out) {
  auto o = std::make_shared<PerturbOptions>();
  auto* sub = app.add_subcommand("perturb", "Generate corrupted translations with gold error spans");
  add_config_option(sub);
  sub->add_option("--segments", o->segments, "Input segments JSONL")->required();
  sub->add_option("--kinds", o->kinds, "Perturbation kinds (default: all)")->delimiter(',');
  sub->add_option("--sentence-pool", o->sentence_pool, "Sentences, one per line");
  sub->add_option("--entity-pool", o->entity_pool, "Entities, one per line");
  sub->add_option("--negation-lexicon", o->negation_lexicon,
                  "Rules 'from => to', one per line (default: built-in English rules)");
  sub->add_option("--unigrams-from", o->unigrams_from,
                  "Segments whose translations define the in-fill vocabulary (default: input)");
  sub->add_option("--seed", o->seed, "Generation seed")->capture_default_str();
  sub->add_flag("--keep-base-spans", o->keep_base_spans,
                "Carry base gold spans outside the edit into the output");
  sub->add_option("--out", o->out, "Output JSONL")->required();
  return [o, &out]() { return run_perturb(*o, out); };
}

}  // namespace spanmetric::cli
