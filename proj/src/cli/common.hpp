#pragma once

#include <CLI11.hpp>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "spanmetric/cli.hpp"
#include "spanmetric/jsonl.hpp"
#include "spanmetric/scoring.hpp"

namespace spanmetric::cli {

using jsonl::json;

// Raised by commands to leave with a specific exit code.
class CommandError : public std::runtime_error {
 public:
  CommandError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

// Expands `<subcommand> --config FILE` into flags: each key of the flat
// JSON object becomes `--key value...` unless that flag is already on the
// command line. true adds a bare flag, false and null add nothing.
std::vector<std::string> expand_config(const std::vector<std::string>& args,
                                       const std::vector<std::string>& subcommands);

// The --config option itself, so CLI11 accepts and documents it.
void add_config_option(CLI::App* sub);

// {"command", "toolkit_version", "config"}.
json run_record(const std::string& command, json config);

// Writes `<path>.run.json` next to an output file.
void write_sidecar(const std::string& path, const json& record);

std::string dump_pretty(const json& j);

// One scored record: what `score` writes and what evaluate/stress read.
struct ScoreRecord {
  std::string id;
  double score = 0.0;
  std::optional<std::vector<ErrorSpan>> spans;
  json raw;
};

std::vector<ScoreRecord> read_scores(const std::string& path);

// "a, b and 3 more"
std::string summarize_ids(const std::vector<std::string>& ids, std::size_t shown = 10);

AggregationWeights weights_from(const std::vector<double>& w);

std::string format_fixed(double v, int digits);

// Each registers a subcommand and returns the action run when it is chosen.
using Command = std::function<int()>;

Command add_score(CLI::App& app, std::ostream& out);
Command add_train(CLI::App& app, std::ostream& out);
Command add_evaluate(CLI::App& app, std::ostream& out);
Command add_perturb(CLI::App& app, std::ostream& out);
Command add_stress(CLI::App& app, std::ostream& out);
Command add_synth(CLI::App& app, std::ostream& out);
Command add_da_scale(CLI::App& app, std::ostream& out);

}  // namespace spanmetric::cli

namespace spanmetric::cli {

// Left-aligns the first column, right-aligns the rest, two-space gutters.
std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows);

}  // namespace spanmetric::cli
