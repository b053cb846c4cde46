#include <gtest/gtest.h>

#include <json.hpp>

#include "cli_harness.hpp"
#include "golden_cases.hpp"
#include "spanmetric/cli.hpp"
#include "spanmetric/io.hpp"
#include "spanmetric/version.hpp"

using harness::Sandbox;
using json = nlohmann::ordered_json;

namespace {

std::vector<json> read_jsonl(const std::string& text) {
  std::vector<json> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    out.push_back(json::parse(text.substr(pos, nl - pos)));
    pos = nl + 1;
  }
  return out;
}

}  // namespace

TEST(Cli, VersionAndUsage) {
  Sandbox box;
  auto r = box.run({"--version"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find(spanmetric::kVersion), std::string::npos);
  EXPECT_EQ(box.run({}).code, 2);
  EXPECT_EQ(box.run({"score", "--bogus"}).code, 2);
  EXPECT_EQ(box.run({"score", "--help"}).code, 0);
}

TEST(Cli, MalformedLineReportsLineNumber) {
  Sandbox box;
  box.write("bad.jsonl", box.read("segments.jsonl") + "{\"id\": \"f4\", \"source\": 3}\n");
  const auto r = box.run({"score", "--segments", "bad.jsonl", "--predictions", "predictions.jsonl",
                          "--out", "o.jsonl"});
  EXPECT_EQ(r.code, spanmetric::cli::kParseFailure);
  EXPECT_NE(r.err.find("bad.jsonl:4:"), std::string::npos) << r.err;
}

TEST(Cli, ModeNeedsReference) {
  Sandbox box;
  const auto r = box.run({"score", "--segments", "segments_noref.jsonl", "--predictions",
                          "predictions.jsonl", "--out", "o.jsonl"});
  EXPECT_EQ(r.code, spanmetric::cli::kModeUnsatisfiable);
  EXPECT_NE(r.err.find("f1"), std::string::npos);
  const auto src = box.run({"score", "--segments", "segments.jsonl", "--predictions",
                            "predictions_src.jsonl", "--mode", "ref", "--out", "o.jsonl"});
  EXPECT_EQ(src.code, spanmetric::cli::kModeUnsatisfiable);
  EXPECT_EQ(box.run({"score", "--segments", "segments.jsonl", "--predictions", "predictions.jsonl",
                     "--mode", "both", "--out", "o.jsonl"})
                .code,
            spanmetric::cli::kConfigFailure);
}

TEST(Cli, PredictionAlignment) {
  Sandbox box;
  const auto preds = box.read("predictions.jsonl");
  box.write("two.jsonl", preds.substr(0, preds.rfind("{\"id\"")));
  auto r = box.run({"score", "--segments", "segments.jsonl", "--predictions", "two.jsonl", "--out",
                    "o.jsonl"});
  EXPECT_EQ(r.code, spanmetric::cli::kAlignmentFailure);
  EXPECT_NE(r.err.find("f3"), std::string::npos);
  auto lines = read_jsonl(preds);
  lines[0]["offsets"][5][1] = 99;
  std::string text;
  for (const auto& l : lines) text += l.dump() + "\n";
  box.write("off.jsonl", text);
  r = box.run({"score", "--segments", "segments.jsonl", "--predictions", "off.jsonl", "--out", "o.jsonl"});
  EXPECT_EQ(r.code, spanmetric::cli::kAlignmentFailure);
}

TEST(Cli, ConfigFileAndPrecedence) {
  Sandbox box;
  box.write("cfg.json", R"({"segments": "segments_noref.jsonl", "predictions": "predictions_src.jsonl",
                            "mode": "src", "out": "from_config.jsonl", "serial": false})");
  auto r = box.run({"score", "--config", "cfg.json", "--out", "from_cli.jsonl"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(box.dir() / "from_cli.jsonl"));
  EXPECT_FALSE(std::filesystem::exists(box.dir() / "from_config.jsonl"));
  const auto side = json::parse(box.read("from_cli.jsonl.run.json"));
  EXPECT_EQ(side["config"]["mode"], "src");
  EXPECT_EQ(side["command"], "score");
  box.write("broken.json", "{");
  EXPECT_EQ(box.run({"score", "--config", "broken.json"}).code, spanmetric::cli::kParseFailure);
  EXPECT_EQ(box.run({"score", "--config", "missing.json"}).code, spanmetric::cli::kConfigFailure);
}

TEST(Cli, EvaluateAlignmentFailure) {
  Sandbox box;
  const auto a = box.read("metric_a.jsonl");
  box.write("short.jsonl", a.substr(0, a.rfind("{\"id\"")));
  const auto r = box.run({"evaluate", "--gold", "gold.jsonl", "--scores", "a=short.jsonl", "--out", "e.json"});
  EXPECT_EQ(r.code, spanmetric::cli::kAlignmentFailure);
  EXPECT_NE(r.err.find("e12"), std::string::npos) << r.err;
}

TEST(Cli, EvaluateReportsUndefinedStatistic) {
  Sandbox box;
  std::string flat;
  for (const auto& line : spanmetric::io::read_lines("metric_a.jsonl")) {
    auto j = json::parse(line);
    j["score"] = 0.5;
    flat += j.dump() + "\n";
  }
  box.write("flat.jsonl", flat);
  const auto r = box.run({"evaluate", "--gold", "gold.jsonl", "--scores", "a=metric_a.jsonl",
                          "k=flat.jsonl", "--granularity", "segment", "--resamples", "20", "--out", "e.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = json::parse(box.read("e.json"));
  for (const auto& g : rep["groups"]) {
    ASSERT_EQ(g["metrics"].size(), 2u);
    EXPECT_TRUE(g["metrics"][0]["pearson"].is_number());
    EXPECT_TRUE(g["metrics"][1]["pearson"].is_null());
    EXPECT_TRUE(g["metrics"][1]["kendall"].is_null());
    EXPECT_EQ(g["significance"]["pearson"]["excluded"], json::array({"k"}));
    EXPECT_EQ(g["significance"]["pearson"]["top_cluster"], json::array({"a"}));
  }
}

TEST(Cli, PerturbSkipsInapplicable) {
  Sandbox box;
  const auto r = box.run({"perturb", "--segments", "digit_free.jsonl", "--kinds", "swap_num", "--out", "p.jsonl"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(box.read("p.jsonl"), "");
  EXPECT_NE(r.out.find("skipped 1"), std::string::npos) << r.out;
  const auto side = json::parse(box.read("p.jsonl.run.json"));
  EXPECT_EQ(side["skipped"]["swap_num"], 1);
  const auto missing = box.run({"perturb", "--segments", "digit_free.jsonl", "--kinds", "add_text", "--out", "p.jsonl"});
  EXPECT_EQ(missing.code, spanmetric::cli::kConfigFailure);
  const auto unknown = box.run({"perturb", "--segments", "digit_free.jsonl", "--kinds", "shuffle", "--out", "p.jsonl"});
  EXPECT_EQ(unknown.code, spanmetric::cli::kConfigFailure);
}

TEST(Cli, PerturbCustomLexicon) {
  Sandbox box;
  const auto r = box.run({"perturb", "--segments", "perturb_segments.jsonl", "--kinds", "negation",
                          "--negation-lexicon", "negation.txt", "--out", "n.jsonl"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = read_jsonl(box.read("n.jsonl"));
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0]["translation"], "The council is sure it voted on 3 motions in Lyon");
  EXPECT_EQ(lines[1]["translation"], "She cannot come tomorrow with Marie");
  EXPECT_EQ(lines[0]["kind"], "negation");
  EXPECT_EQ(lines[0]["base_id"], "p1");
}

TEST(Cli, StressAlignment) {
  Sandbox box;
  box.write("orig2.jsonl", "{\"id\":\"p1\",\"score\":0.9,\"spans\":[]}\n");
  auto r = box.run({"stress", "--original", "orig2.jsonl", "--perturbed", "stress_perturbed.jsonl",
                    "--out", "s.json"});
  EXPECT_EQ(r.code, spanmetric::cli::kAlignmentFailure);
  r = box.run({"stress", "--original", "orig2.jsonl", "--perturbed", "stress_perturbed.jsonl",
               "--skip-unaligned", "--out", "s.json"});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST(Cli, DaScaleBounds) {
  Sandbox box;
  box.write("flat.jsonl", "{\"segment_id\":\"a\",\"raw\":50,\"z\":0.1}\n");
  EXPECT_EQ(box.run({"da-scale", "--annotations", "flat.jsonl", "--out", "d.jsonl"}).code,
            spanmetric::cli::kConfigFailure);
  const auto r = box.run({"da-scale", "--annotations", "flat.jsonl", "--z-min", "-1", "--z-max", "1",
                          "--out", "d.jsonl"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_DOUBLE_EQ(read_jsonl(box.read("d.jsonl"))[0]["gold_score"].get<double>(), 0.55);
}

TEST(Cli, TrainScoreEndToEnd) {
  Sandbox box;
  ASSERT_EQ(box.run({"synth", "--out-dir", "syn", "--segments", "160", "--detection-positives", "4"}).code, 0);
  const std::vector<std::string> tiny = {"--epochs", "1", "1", "1", "--model-dim", "8", "--ff-dim",
                                         "16", "--layers", "1", "--buckets", "256", "--batch-size", "16"};
  std::vector<std::string> train = {"train", "--phase1", "syn/phase1.jsonl", "--phase2",
                                    "syn/phase2.jsonl", "--phase3", "syn/phase3.jsonl", "--out-dir", "m"};
  train.insert(train.end(), tiny.begin(), tiny.end());
  auto r = box.run(train);
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"m/phase1.ckpt", "m/phase2.ckpt", "m/phase3.ckpt", "m/model.ckpt", "m/train_report.json"}) {
    EXPECT_TRUE(std::filesystem::exists(box.dir() / f)) << f;
  }
  // Phase 2 trained from the span-free phase 1 corpus must be refused up front.
  std::vector<std::string> bad = {"train", "--phase1", "syn/phase1.jsonl", "--phase2",
                                  "syn/phase1.jsonl", "--phase3", "syn/phase3.jsonl", "--out-dir", "bad"};
  bad.insert(bad.end(), tiny.begin(), tiny.end());
  EXPECT_EQ(box.run(bad).code, spanmetric::cli::kSupervisionMismatch);
  EXPECT_FALSE(std::filesystem::exists(box.dir() / "bad" / "phase1.ckpt"));

  const std::vector<std::string> score = {"score", "--segments", "syn/heldout.jsonl", "--model", "m/model.ckpt"};
  auto with = [&](std::vector<std::string> extra) {
    auto a = score;
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  };
  ASSERT_EQ(box.run(with({"--out", "s1.jsonl"})).code, 0);
  ASSERT_EQ(box.run(with({"--out", "s2.jsonl"})).code, 0);
  ASSERT_EQ(box.run(with({"--out", "s3.jsonl", "--serial"})).code, 0);
  EXPECT_EQ(box.read("s1.jsonl"), box.read("s2.jsonl"));
  EXPECT_EQ(box.read("s1.jsonl"), box.read("s3.jsonl"));
  ASSERT_EQ(box.run(with({"--out", "s4.jsonl", "--mode", "src"})).code, 0);

  r = box.run({"evaluate", "--gold", "syn/heldout.jsonl", "--scores", "uni=s1.jsonl", "src=s4.jsonl",
               "--resamples", "50", "--out", "ev.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  r = box.run({"evaluate", "--gold", "syn/detection.jsonl", "--scores", "m=s4.jsonl", "--granularity",
               "detection", "--out", "det.json"});
  EXPECT_EQ(r.code, spanmetric::cli::kAlignmentFailure);
}

TEST(Cli, RerunsAreByteIdentical) {
  for (const auto& c : golden::cases()) {
    Sandbox a;
    Sandbox b;
    ASSERT_EQ(a.run(c.args).code, 0) << c.name;
    ASSERT_EQ(b.run(c.args).code, 0) << c.name;
    for (const auto& [produced, gold] : c.outputs) {
      EXPECT_EQ(a.read(produced), b.read(produced)) << c.name << " " << produced;
    }
  }
}

class Golden : public ::testing::TestWithParam<golden::Case> {};

TEST_P(Golden, MatchesPinnedOutput) {
  const auto& c = GetParam();
  Sandbox box;
  const auto r = box.run(c.args);
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& [produced, gold] : c.outputs) {
    EXPECT_EQ(harness::compare_golden(box, produced, gold), "");
  }
}

INSTANTIATE_TEST_SUITE_P(Reports, Golden, ::testing::ValuesIn(golden::cases()),
                         [](const auto& info) { return info.param.name; });
