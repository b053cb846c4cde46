#include "common.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <set>

#include "spanmetric/error.hpp"
#include "spanmetric/io.hpp"
#include "spanmetric/version.hpp"

namespace spanmetric::cli {

namespace {

std::string scalar_text(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return v.dump();
  throw CommandError(kConfigFailure, "config key '" + key + "' has an unsupported value type");
}

}  // namespace

std::vector<std::string> expand_config(const std::vector<std::string>& args,
                                       const std::vector<std::string>& subcommands) {
  std::size_t sub = args.size();
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (std::find(subcommands.begin(), subcommands.end(), args[i]) != subcommands.end()) {
      sub = i;
      break;
    }
  }
  if (sub == args.size()) return args;
  std::optional<std::string> path;
  std::set<std::string> given;
  for (std::size_t i = sub + 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0) continue;
    const auto eq = a.find('=');
    const std::string name = a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
    given.insert(name);
    if (name == "config") {
      if (eq != std::string::npos) {
        path = a.substr(eq + 1);
      } else if (i + 1 < args.size()) {
        path = args[i + 1];
      }
    }
  }
  if (!path) return args;
  json cfg;
  try {
    cfg = json::parse(io::read_file(*path));
  } catch (const json::exception& e) {
    throw CommandError(kParseFailure, *path + ": invalid JSON config: " + e.what());
  }
  if (!cfg.is_object()) throw CommandError(kParseFailure, *path + ": config must be a JSON object");
  std::vector<std::string> extra;
  for (const auto& [key, v] : cfg.items()) {
    if (key == "config" || given.count(key)) continue;
    if (v.is_null() || (v.is_boolean() && !v.get<bool>())) continue;
    if (v.is_boolean()) {
      extra.push_back("--" + key);
    } else if (v.is_array()) {
      extra.push_back("--" + key);
      for (const auto& e : v) extra.push_back(scalar_text(e, key));
    } else {
      extra.push_back("--" + key);
      extra.push_back(scalar_text(v, key));
    }
  }
  std::vector<std::string> out(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(sub) + 1);
  out.insert(out.end(), extra.begin(), extra.end());
  out.insert(out.end(), args.begin() + static_cast<std::ptrdiff_t>(sub) + 1, args.end());
  return out;
}

void add_config_option(CLI::App* sub) {
  sub->add_option("--config", "JSON object of option values; command-line flags take precedence")
      ->type_name("FILE")
      ->expected(1);
}

json run_record(const std::string& command, json config) {
  json j;
  j["command"] = command;
  j["toolkit_version"] = std::string(kVersion);
  j["config"] = std::move(config);
  return j;
}

std::string dump_pretty(const json& j) { return j.dump(2) + "\n"; }

void write_sidecar(const std::string& path, const json& record) {
  io::atomic_write(path + ".run.json", dump_pretty(record));
}

std::vector<ScoreRecord> read_scores(const std::string& path) {
  std::vector<ScoreRecord> out;
  for (auto& [line, j] : jsonl::read_objects(path)) {
    ScoreRecord r;
    try {
      r.id = jsonl::get_string(j, "id");
      r.score = jsonl::get_number(j, "score");
      if (auto it = j.find("spans"); it != j.end() && !it->is_null()) {
        r.spans = jsonl::spans_from_json(*it);
      }
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(line) + ": " + e.what(), line);
    }
    r.raw = std::move(j);
    out.push_back(std::move(r));
  }
  return out;
}

std::string summarize_ids(const std::vector<std::string>& ids, std::size_t shown) {
  std::string s;
  for (std::size_t i = 0; i < ids.size() && i < shown; ++i) {
    if (i) s += ", ";
    s += ids[i];
  }
  if (ids.size() > shown) s += " and " + std::to_string(ids.size() - shown) + " more";
  return s;
}

AggregationWeights weights_from(const std::vector<double>& w) {
  if (w.size() != 4) throw CommandError(kConfigFailure, "--weights needs exactly four values");
  AggregationWeights a{w[0], w[1], w[2], w[3]};
  a.validate();
  return a;
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Span-level translation quality metric toolkit", "spanmetric"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads; 0 keeps the runtime default")
      ->check(CLI::NonNegativeNumber);

  std::map<std::string, Command> commands;
  commands["score"] = add_score(app, out);
  commands["train"] = add_train(app, out);
  commands["evaluate"] = add_evaluate(app, out);
  commands["perturb"] = add_perturb(app, out);
  commands["stress"] = add_stress(app, out);
  commands["synth"] = add_synth(app, out);
  commands["da-scale"] = add_da_scale(app, out);

  try {
    std::vector<std::string> names;
    for (const auto& [name, cmd] : commands) names.push_back(name);
    auto expanded = expand_config(args, names);
    std::reverse(expanded.begin(), expanded.end());
    app.parse(expanded);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kParseFailure;
  } catch (const CommandError& e) {
    err << "error: " << e.what() << "\n";
    return e.code();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kConfigFailure;
  }
  if (threads > 0) omp_set_num_threads(threads);

  for (const auto& [name, cmd] : commands) {
    if (!app.got_subcommand(name)) continue;
    try {
      return cmd();
    } catch (const CommandError& e) {
      err << "error: " << e.what() << "\n";
      return e.code();
    } catch (const ParseError& e) {
      err << "error: " << e.what() << "\n";
      return kParseFailure;
    } catch (const SupervisionError& e) {
      err << "error: " << e.what() << "\n";
      return kSupervisionMismatch;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kConfigFailure;
    }
  }
  return kParseFailure;
}

}  // namespace spanmetric::cli

namespace spanmetric::cli {

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  auto measure = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], r[c].size());
  };
  measure(header);
  for (const auto& r : rows) measure(r);
  auto line = [&](const std::vector<std::string>& r) {
    std::string s;
    for (std::size_t c = 0; c < width.size(); ++c) {
      const std::string cell = c < r.size() ? r[c] : "";
      const std::string pad(width[c] - cell.size(), ' ');
      if (c) s += "  ";
      s += c == 0 ? cell + pad : pad + cell;
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + "\n";
  };
  std::string out = line(header);
  std::size_t total = 0;
  for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c ? 2 : 0);
  out += std::string(total, '-') + "\n";
  for (const auto& r : rows) out += line(r);
  return out;
}

}  // namespace spanmetric::cli
