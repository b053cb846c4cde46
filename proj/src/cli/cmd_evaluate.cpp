#include <filesystem>
#include <map>
#include <set>

#include "common.hpp"
#include "spanmetric/error.hpp"
#include "spanmetric/io.hpp"
#include "spanmetric/perturb.hpp"
#include "spanmetric/rng.hpp"
#include "spanmetric/stats.hpp"
#include "spanmetric/utf8.hpp"

namespace spanmetric::cli {

namespace {

struct EvalOptions {
  std::string gold;
  std::vector<std::string> scores;
  std::string granularity = "segment";
  std::size_t resamples = 200;
  std::uint64_t seed = 0;
  double level = 0.05;
  bool per_annotation = false;
  std::string out;
  std::string table;

  json to_json() const {
    json j;
    j["gold"] = gold;
    j["scores"] = scores;
    j["granularity"] = granularity;
    j["resamples"] = resamples;
    j["seed"] = seed;
    j["level"] = level;
    j["gold_aggregation"] = per_annotation ? "per_annotation" : "mean_per_segment";
    j["out"] = out;
    j["table"] = table;
    return j;
  }
};

struct Annotation {
  std::optional<double> score;
  std::optional<std::vector<ErrorSpan>> spans;
};

struct GoldItem {
  std::string id;
  std::string lp = "all";
  std::optional<std::string> system;
  std::size_t length = 0;
  bool hallucination = false;
  std::string kind;  // hallucination kind when known
  std::vector<Annotation> annotations;

  std::optional<double> mean_score() const {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& a : annotations) {
      if (a.score) {
        s += *a.score;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return s / static_cast<double>(n);
  }
};

struct Metric {
  std::string name;
  std::map<std::string, ScoreRecord> by_id;
};

std::vector<GoldItem> load_gold(const std::string& path) {
  std::vector<GoldItem> items;
  std::map<std::string, std::size_t> index;
  for (const auto& r : jsonl::read_segments(path)) {
    auto [it, fresh] = index.emplace(r.segment.id, items.size());
    if (fresh) {
      GoldItem g;
      g.id = r.segment.id;
      if (r.lp) g.lp = *r.lp;
      g.system = r.segment.system;
      g.length = utf8::length(r.segment.translation);
      if (auto h = r.raw.find("hallucination"); h != r.raw.end() && h->is_boolean()) {
        g.hallucination = h->get<bool>();
        g.kind = "hallucination";
      }
      if (const auto sep = g.id.rfind("::"); sep != std::string::npos) {
        const auto k = perturb::parse_kind(g.id.substr(sep + 2));
        if (k && perturb::is_hallucination(*k)) {
          g.hallucination = true;
          g.kind = std::string(perturb::to_string(*k));
        }
      }
      items.push_back(std::move(g));
    }
    items[it->second].annotations.push_back({r.segment.gold_score, r.segment.gold_spans});
  }
  if (items.empty()) throw CommandError(kConfigFailure, path + ": no gold segments");
  return items;
}

Metric load_metric(const std::string& spec) {
  Metric m;
  std::string path = spec;
  if (const auto eq = spec.find('='); eq != std::string::npos) {
    m.name = spec.substr(0, eq);
    path = spec.substr(eq + 1);
  } else {
    m.name = std::filesystem::path(spec).stem().string();
  }
  for (auto& r : read_scores(path)) {
    const std::string id = r.id;
    if (!m.by_id.emplace(id, std::move(r)).second) {
      throw ParseError(path + ": duplicate id '" + id + "'");
    }
  }
  return m;
}

void check_alignment(const std::vector<GoldItem>& gold, const std::vector<Metric>& metrics) {
  std::set<std::string> gold_ids;
  for (const auto& g : gold) gold_ids.insert(g.id);
  std::string problems;
  for (const auto& m : metrics) {
    std::vector<std::string> missing, extra;
    for (const auto& id : gold_ids) {
      if (!m.by_id.count(id)) missing.push_back(id);
    }
    for (const auto& [id, r] : m.by_id) {
      if (!gold_ids.count(id)) extra.push_back(id);
    }
    if (!missing.empty()) problems += "\n  " + m.name + " lacks " + summarize_ids(missing);
    if (!extra.empty()) problems += "\n  " + m.name + " has ids not in gold: " + summarize_ids(extra);
  }
  if (!problems.empty()) throw CommandError(kAlignmentFailure, "ids do not align:" + problems);
}

json optional_stat(const std::function<double()>& f) {
  try {
    return f();
  } catch (const UndefinedStatistic&) {
    return json();
  }
}

json test_json(const stats::PairwiseTest& t) {
  json j;
  j["better"] = t.better;
  j["worse"] = t.worse;
  j["observed_difference"] = t.result.observed;
  j["p_value"] = t.result.p_value;
  j["resamples"] = t.result.resamples;
  j["level"] = t.result.level;
  j["significant"] = t.result.significant;
  return j;
}

std::string cell(const json& v, bool marked) {
  if (v.is_null()) return "n/a";
  return format_fixed(v.get<double>(), 4) + (marked ? "*" : " ");
}

struct Evaluator {
  const EvalOptions& o;
  const std::vector<GoldItem>& gold;
  const std::vector<Metric>& metrics;
  std::string text;

  std::map<std::string, std::vector<const GoldItem*>> groups() const {
    std::map<std::string, std::vector<const GoldItem*>> g;
    for (const auto& item : gold) g[item.lp].push_back(&item);
    return g;
  }

  std::uint64_t group_seed(const std::string& lp, const std::string& what) const {
    return derive_seed(o.seed, lp + "/" + what);
  }

  // Significance block shared by segment and system level; returns cluster
  // members per correlation name.
  std::map<std::string, std::set<std::string>> clusters(
      json& group, const std::string& lp, const std::vector<stats::NamedScores>& named,
      const std::vector<double>& human,
      const std::vector<std::pair<std::string, kernels::CorrelationFn>>& fns) const {
    std::map<std::string, std::set<std::string>> members;
    if (named.size() < 2) {
      group["significance"] = nullptr;
      return members;
    }
    json sig;
    for (const auto& [name, fn] : fns) {
      // Metrics whose statistic is undefined (constant scores) take no part.
      std::vector<stats::NamedScores> defined;
      std::vector<std::string> excluded;
      for (const auto& n : named) {
        if (optional_stat([&] { return fn(n.scores, human); }).is_null()) {
          excluded.push_back(n.name);
        } else {
          defined.push_back(n);
        }
      }
      json block;
      block["excluded"] = excluded;
      if (defined.size() < 2) {
        std::set<std::string> solo;
        for (const auto& n : defined) solo.insert(n.name);
        block["top_cluster"] = std::vector<std::string>(solo.begin(), solo.end());
        block["tests"] = json::array();
        members[name] = solo;
        sig[name] = block;
        continue;
      }
      try {
        const auto res = stats::top_cluster(defined, human, fn, o.level, o.resamples, group_seed(lp, name));
        json tests = json::array();
        for (const auto& t : res.tests) tests.push_back(test_json(t));
        block["top_cluster"] = std::vector<std::string>(res.members.begin(), res.members.end());
        block["tests"] = tests;
        members[name] = res.members;
      } catch (const UndefinedStatistic&) {
        block["top_cluster"] = nullptr;
        block["tests"] = nullptr;
      }
      sig[name] = block;
    }
    group["significance"] = sig;
    return members;
  }

  std::string mark_note() const {
    return "* top cluster: not beaten by a higher-scoring metric (Perm-Both, " +
           std::to_string(o.resamples) + " resamples, p < " + format_fixed(o.level, 2) + ")\n";
  }

  json segment_level() {
    json groups_json = json::array();
    for (const auto& [lp, items] : groups()) {
      std::vector<double> human;
      std::vector<stats::NamedScores> named;
      for (const auto& m : metrics) named.push_back({m.name, {}});
      for (const auto* g : items) {
        std::vector<double> golds;
        if (o.per_annotation) {
          for (const auto& a : g->annotations) {
            if (a.score) golds.push_back(*a.score);
          }
        } else if (auto s = g->mean_score()) {
          golds.push_back(*s);
        }
        if (golds.empty()) throw CommandError(kConfigFailure, "gold segment " + g->id + " has no gold_score");
        for (double h : golds) {
          human.push_back(h);
          for (std::size_t k = 0; k < metrics.size(); ++k) named[k].scores.push_back(metrics[k].by_id.at(g->id).score);
        }
      }
      json group;
      group["lp"] = lp;
      group["items"] = human.size();
      const auto marks = clusters(group, lp, named, human,
                                  {{"pearson", stats::pearson_fn()}, {"kendall", stats::kendall_fn()}});
      json ms = json::array();
      std::vector<std::vector<std::string>> rows;
      for (const auto& n : named) {
        json m;
        m["name"] = n.name;
        m["pearson"] = optional_stat([&] { return stats::pearson(n.scores, human); });
        m["kendall"] = optional_stat([&] { return stats::kendall(n.scores, human); });
        const bool in_p = marks.count("pearson") && marks.at("pearson").count(n.name);
        const bool in_k = marks.count("kendall") && marks.at("kendall").count(n.name);
        if (!marks.empty()) {
          m["top_cluster"] = {{"pearson", in_p}, {"kendall", in_k}};
        }
        rows.push_back({n.name, cell(m["pearson"], in_p), cell(m["kendall"], in_k)});
        ms.push_back(m);
      }
      group["metrics"] = ms;
      groups_json.push_back(group);
      text += "segment level, lp " + lp + ", " + std::to_string(human.size()) + " items\n";
      text += render_table({"metric", "pearson", "kendall"}, rows);
      if (!marks.empty()) text += mark_note();
      text += "\n";
    }
    return groups_json;
  }

  json system_level() {
    json groups_json = json::array();
    for (const auto& [lp, items] : groups()) {
      std::map<std::string, std::pair<double, std::size_t>> human_acc;
      std::vector<std::map<std::string, std::pair<double, std::size_t>>> metric_acc(metrics.size());
      for (const auto* g : items) {
        if (!g->system) throw CommandError(kConfigFailure, "gold segment " + g->id + " has no system");
        const auto h = g->mean_score();
        if (!h) throw CommandError(kConfigFailure, "gold segment " + g->id + " has no gold_score");
        auto& ha = human_acc[*g->system];
        ha.first += *h;
        ha.second += 1;
        for (std::size_t k = 0; k < metrics.size(); ++k) {
          auto& ma = metric_acc[k][*g->system];
          ma.first += metrics[k].by_id.at(g->id).score;
          ma.second += 1;
        }
      }
      std::vector<std::string> systems;
      std::vector<double> human;
      for (const auto& [sys, acc] : human_acc) {
        systems.push_back(sys);
        human.push_back(acc.first / static_cast<double>(acc.second));
      }
      std::vector<stats::NamedScores> named;
      for (std::size_t k = 0; k < metrics.size(); ++k) {
        stats::NamedScores n{metrics[k].name, {}};
        for (const auto& sys : systems) {
          const auto& a = metric_acc[k].at(sys);
          n.scores.push_back(a.first / static_cast<double>(a.second));
        }
        named.push_back(std::move(n));
      }
      json group;
      group["lp"] = lp;
      group["systems"] = systems;
      group["human"] = human;
      const auto marks = clusters(group, lp, named, human, {{"pairwise_accuracy", stats::pairwise_accuracy_fn()}});
      json ms = json::array();
      std::vector<std::vector<std::string>> rows;
      for (const auto& n : named) {
        json m;
        m["name"] = n.name;
        m["system_scores"] = n.scores;
        m["pairwise_accuracy"] = optional_stat([&] { return stats::pairwise_accuracy(n.scores, human); });
        const bool in = marks.count("pairwise_accuracy") && marks.at("pairwise_accuracy").count(n.name);
        if (!marks.empty()) m["top_cluster"] = {{"pairwise_accuracy", in}};
        rows.push_back({n.name, cell(m["pairwise_accuracy"], in)});
        ms.push_back(m);
      }
      group["metrics"] = ms;
      groups_json.push_back(group);
      text += "system level, lp " + lp + ", " + std::to_string(systems.size()) + " systems\n";
      text += render_table({"metric", "pairwise acc"}, rows);
      if (!marks.empty()) text += mark_note();
      text += "\n";
    }
    return groups_json;
  }

  json span_level() {
    json groups_json = json::array();
    for (const auto& [lp, items] : groups()) {
      json group;
      group["lp"] = lp;
      json ms = json::array();
      std::vector<std::vector<std::string>> rows;
      for (const auto& m : metrics) {
        stats::CharF1Accumulator acc;
        std::size_t annotations = 0;
        for (const auto* g : items) {
          const auto& rec = m.by_id.at(g->id);
          if (!rec.spans) throw CommandError(kConfigFailure, m.name + ": record " + g->id + " has no spans");
          for (const auto& a : g->annotations) {
            if (!a.spans) throw CommandError(kConfigFailure, "gold segment " + g->id + " has no gold_spans");
            try {
              acc.add(*rec.spans, *a.spans, g->length);
            } catch (const ValidationError& e) {
              throw CommandError(kParseFailure, m.name + ": record " + g->id + ": " + e.what());
            }
            ++annotations;
            if (!o.per_annotation) break;
          }
        }
        const auto f = acc.result();
        auto cls = [](const stats::ClassF1& c) {
          json j;
          j["precision"] = c.precision;
          j["recall"] = c.recall;
          j["f1"] = c.f1;
          j["true_positive_chars"] = c.true_positive;
          j["predicted_chars"] = c.predicted;
          j["gold_chars"] = c.gold;
          return j;
        };
        json mj;
        mj["name"] = m.name;
        mj["annotations"] = annotations;
        mj["minor"] = cls(f.minor);
        mj["major"] = cls(f.major);
        mj["f1_minor"] = f.f1_minor;
        mj["f1_major"] = f.f1_major;
        mj["f1_overall"] = f.f1_overall;
        ms.push_back(mj);
        rows.push_back({m.name, format_fixed(f.f1_minor, 4), format_fixed(f.f1_major, 4),
                        format_fixed(f.f1_overall, 4)});
      }
      group["metrics"] = ms;
      groups_json.push_back(group);
      text += "span level (character F1, critical scored as major), lp " + lp + "\n";
      text += render_table({"metric", "f1 minor", "f1 major", "f1"}, rows);
      text += "\n";
    }
    return groups_json;
  }

  json detection() {
    json groups_json = json::array();
    for (const auto& [lp, items] : groups()) {
      std::set<std::string> kinds;
      for (const auto* g : items) {
        if (g->hallucination) kinds.insert(g->kind);
      }
      json group;
      group["lp"] = lp;
      std::size_t positives = 0;
      for (const auto* g : items) positives += g->hallucination ? 1 : 0;
      group["positives"] = positives;
      group["negatives"] = items.size() - positives;
      json ms = json::array();
      std::vector<std::vector<std::string>> rows;
      std::vector<std::string> header = {"metric", "auroc"};
      for (const auto& k : kinds) header.push_back(k);
      for (const auto& m : metrics) {
        auto compute = [&](const std::string* only_kind) {
          std::vector<double> s;
          std::vector<std::uint8_t> pos;
          for (const auto* g : items) {
            if (g->hallucination && only_kind && g->kind != *only_kind) continue;
            s.push_back(m.by_id.at(g->id).score);
            pos.push_back(g->hallucination ? 1 : 0);
          }
          return optional_stat([&] { return stats::auroc(s, pos); });
        };
        json mj;
        mj["name"] = m.name;
        mj["auroc"] = compute(nullptr);
        json per;
        std::vector<std::string> row = {m.name, cell(mj["auroc"], false)};
        for (const auto& k : kinds) {
          per[k] = compute(&k);
          row.push_back(cell(per[k], false));
        }
        mj["auroc_by_kind"] = kinds.empty() ? json::object() : per;
        ms.push_back(mj);
        rows.push_back(row);
      }
      group["metrics"] = ms;
      groups_json.push_back(group);
      text += "hallucination detection (AUROC, lower score = hallucination), lp " + lp + ", " +
              std::to_string(positives) + " positives\n";
      text += render_table(header, rows);
      text += "\n";
    }
    return groups_json;
  }
};

int run_evaluate(EvalOptions o, std::ostream& out) {
  if (o.scores.empty()) throw CommandError(kConfigFailure, "evaluate needs at least one --scores");
  if (o.resamples == 0) throw CommandError(kConfigFailure, "--resamples must be positive");
  if (o.table.empty()) o.table = o.out + ".txt";
  const auto gold = load_gold(o.gold);
  std::vector<Metric> metrics;
  std::set<std::string> names;
  for (const auto& s : o.scores) {
    metrics.push_back(load_metric(s));
    if (!names.insert(metrics.back().name).second) {
      throw CommandError(kConfigFailure, "metric name '" + metrics.back().name + "' given twice");
    }
  }
  check_alignment(gold, metrics);

  Evaluator ev{o, gold, metrics, ""};
  json report = run_record("evaluate", o.to_json());
  report["granularity"] = o.granularity;
  if (o.granularity == "segment") {
    report["groups"] = ev.segment_level();
  } else if (o.granularity == "system") {
    report["groups"] = ev.system_level();
  } else if (o.granularity == "spans") {
    report["groups"] = ev.span_level();
  } else if (o.granularity == "detection") {
    report["groups"] = ev.detection();
  } else {
    throw CommandError(kConfigFailure, "unknown granularity '" + o.granularity + "'");
  }
  io::atomic_write(o.out, dump_pretty(report));
  const std::string header = "spanmetric evaluate, toolkit " + report["toolkit_version"].get<std::string>() +
                             ", granularity " + o.granularity + "\n\n";
  io::atomic_write(o.table, header + ev.text);
  out << ev.text;
  return kOk;
}

}  // namespace

Command add_evaluate(CLI::App& app, std::ostream& out) {
  auto o = std::make_shared<EvalOptions>();
  auto* sub = app.add_subcommand("evaluate", "Meta-evaluate metric scores against gold annotations");
  add_config_option(sub);
  sub->add_option("--gold", o->gold, "Gold segments JSONL")->required();
  sub->add_option("--scores", o->scores, "Metric scores as NAME=PATH (repeatable)")->required();
  sub->add_option("--granularity", o->granularity, "segment | system | spans | detection")
      ->capture_default_str();
  sub->add_option("--resamples", o->resamples, "Perm-Both resamples")->capture_default_str();
  sub->add_option("--seed", o->seed, "Resampling seed")->capture_default_str();
  sub->add_option("--level", o->level, "Significance level")->capture_default_str();
  sub->add_flag("--per-annotation", o->per_annotation,
                "Correlate every annotation separately instead of averaging gold per segment");
  sub->add_option("--out", o->out, "JSON report path")->required();
  sub->add_option("--table", o->table, "Text table path (default: <out>.txt)");
  return [o, &out]() { return run_evaluate(*o, out); };
}

}  // namespace spanmetric::cli
