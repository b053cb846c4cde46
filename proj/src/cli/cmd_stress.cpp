#include <map>

#include "common.hpp"
#include "spanmetric/error.hpp"
#include "spanmetric/io.hpp"
#include "spanmetric/perturb.hpp"

namespace spanmetric::cli {

namespace {

struct StressOptions {
  std::string original;
  std::string perturbed;
  bool skip_unaligned = false;
  std::string out;
  std::string table;

  json to_json() const {
    json j;
    j["original"] = original;
    j["perturbed"] = perturbed;
    j["skip_unaligned"] = skip_unaligned;
    j["out"] = out;
    j["table"] = table;
    return j;
  }
};

perturb::ScoredItem item_of(const ScoreRecord& r, const std::string& file) {
  if (!r.spans) throw CommandError(kConfigFailure, file + ": record " + r.id + " has no spans");
  return {r.score, *r.spans};
}

json report_json(const std::string& label, const perturb::KindReport& k) {
  json j;
  j["kind"] = label;
  j["count"] = k.count;
  j["no_error"] = k.no_error;
  j["no_error_rate"] = k.no_error_rate;
  j["span_severity"] = {{"minor", k.span_severity[1]},
                        {"major", k.span_severity[2]},
                        {"critical", k.span_severity[3]}};
  j["item_severity"] = {{"ok", k.item_severity[0]},
                        {"minor", k.item_severity[1]},
                        {"major", k.item_severity[2]},
                        {"critical", k.item_severity[3]}};
  j["delta"] = {{"median", k.delta.median},
                {"q1", k.delta.q1},
                {"q3", k.delta.q3},
                {"mean", k.delta.mean},
                {"min", k.delta.min},
                {"max", k.delta.max},
                {"fraction_below_one_point", k.delta.fraction_below_one_point}};
  j["score_histogram"] = k.score_histogram;
  return j;
}

int run_stress(StressOptions o, std::ostream& out) {
  if (o.table.empty()) o.table = o.out + ".txt";
  std::map<std::string, ScoreRecord> originals;
  for (auto& r : read_scores(o.original)) {
    const std::string id = r.id;
    if (!originals.emplace(id, std::move(r)).second) {
      throw ParseError(o.original + ": duplicate id '" + id + "'");
    }
  }
  // Pairs grouped by kind label, labels in first-seen order of kAllKinds.
  std::map<std::string, std::vector<perturb::StressPair>> groups;
  std::vector<std::string> unaligned;
  for (const auto& r : read_scores(o.perturbed)) {
    std::string label, base = r.id;
    if (auto k = r.raw.find("kind"); k != r.raw.end() && k->is_string()) label = k->get<std::string>();
    if (auto b = r.raw.find("base_id"); b != r.raw.end() && b->is_string()) {
      base = b->get<std::string>();
    } else if (const auto sep = r.id.rfind("::"); sep != std::string::npos) {
      base = r.id.substr(0, sep);
      if (label.empty()) label = r.id.substr(sep + 2);
    }
    if (label.empty()) label = "unlabelled";
    auto it = originals.find(base);
    if (it == originals.end()) {
      unaligned.push_back(r.id);
      continue;
    }
    groups[label].push_back({perturb::Kind::AddText, item_of(it->second, o.original), item_of(r, o.perturbed)});
  }
  std::size_t pairs = 0;
  for (const auto& [l, v] : groups) pairs += v.size();
  if (pairs == 0) {
    throw CommandError(kAlignmentFailure, "no perturbed record aligns with an original record");
  }
  if (!unaligned.empty() && !o.skip_unaligned) {
    throw CommandError(kAlignmentFailure, "perturbed records without an original: " + summarize_ids(unaligned));
  }

  std::vector<std::string> labels;
  for (auto k : perturb::kAllKinds) {
    if (groups.count(std::string(perturb::to_string(k)))) labels.emplace_back(perturb::to_string(k));
  }
  for (const auto& [l, v] : groups) {
    if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
  }

  json report = run_record("stress", o.to_json());
  report["pairs"] = pairs;
  report["unaligned"] = unaligned.size();
  report["kinds"] = json::array();
  std::vector<std::vector<std::string>> rows;
  for (const auto& label : labels) {
    const auto reps = perturb::stress_report(groups[label]);
    const auto& k = reps.front();
    report["kinds"].push_back(report_json(label, k));
    rows.push_back({label, std::to_string(k.count), format_fixed(k.no_error_rate, 1),
                    std::to_string(k.span_severity[1]), std::to_string(k.span_severity[2]),
                    std::to_string(k.span_severity[3]), format_fixed(k.delta.median, 2),
                    format_fixed(k.delta.q1, 2), format_fixed(k.delta.q3, 2),
                    format_fixed(100.0 * k.delta.fraction_below_one_point, 1)});
  }
  std::string text = "spanmetric stress, toolkit " + report["toolkit_version"].get<std::string>() + ", " +
                     std::to_string(pairs) + " pairs\n\n";
  text += render_table({"kind", "n", "no-error %", "minor", "major", "critical", "median delta",
                        "q1", "q3", "delta<1 %"},
                       rows);
  text += "\nscore histogram of perturbed items (10 bins over [0, 1])\n";
  std::vector<std::vector<std::string>> hist;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::vector<std::string> row = {labels[i]};
    for (const auto& c : report["kinds"][i]["score_histogram"]) row.push_back(std::to_string(c.get<std::size_t>()));
    hist.push_back(row);
  }
  text += render_table({"kind", ".0", ".1", ".2", ".3", ".4", ".5", ".6", ".7", ".8", ".9"}, hist);
  io::atomic_write(o.out, dump_pretty(report));
  io::atomic_write(o.table, text);
  out << text;
  return kOk;
}

}  // namespace

Command add_stress(CLI::App& app, std::ostream& out) {
  auto o = std::make_shared<StressOptions>();
  auto* sub = app.add_subcommand("stress", "Compare scores of original and perturbed translations");
  add_config_option(sub);
  sub->add_option("--original", o->original, "Scores of the original segments")->required();
  sub->add_option("--perturbed", o->perturbed, "Scores of the perturbed segments")->required();
  sub->add_flag("--skip-unaligned", o->skip_unaligned,
                "Drop perturbed records without an original instead of failing");
  sub->add_option("--out", o->out, "JSON report path")->required();
  sub->add_option("--table", o->table, "Text table path (default: <out>.txt)");
  return [o, &out]() { return run_stress(*o, out); };
}

}  // namespace spanmetric::cli
