#include <filesystem>

#include "common.hpp"
#include "spanmetric/checkpoint.hpp"
#include "spanmetric/error.hpp"
#include "spanmetric/io.hpp"
#include "spanmetric/trainer.hpp"

namespace spanmetric::cli {

namespace {

struct TrainOptions {
  std::vector<std::string> corpora = {"", "", ""};
  std::string out_dir;
  std::uint64_t seed = 42;
  std::vector<int> epochs = {10, 10, 10};
  int batch_size = 32;
  double lr = 1e-2;
  double encoder_lr = 5e-3;
  net::EncoderConfig encoder;
  bool serial = false;
};

json phase_json(const net::PhaseSpec& p) {
  json j;
  j["name"] = p.name;
  j["lambda"] = p.lambda;
  j["class_weights"] = p.class_weights;
  j["learning_rate"] = p.learning_rate;
  j["encoder_learning_rate"] = p.encoder_learning_rate;
  j["layerwise_decay"] = p.layerwise_decay;
  j["frozen_fraction"] = p.frozen_fraction;
  j["epochs"] = p.epochs;
  j["batch_size"] = p.batch_size;
  j["word_level_training"] = p.word_level_training;
  j["max_grad_norm"] = p.max_grad_norm;
  return j;
}

json encoder_json(const net::EncoderConfig& c) {
  json j;
  j["bucket_count"] = c.bucket_count;
  j["model_dim"] = c.model_dim;
  j["layers"] = c.layers;
  j["heads"] = c.heads;
  j["ff_dim"] = c.ff_dim;
  j["max_length"] = c.max_length;
  j["head_hidden"] = c.head_hidden;
  j["layer_mix"] = c.layer_mix;
  return j;
}

int run_train(const TrainOptions& o, std::ostream& out) {
  if (o.epochs.size() != 3) throw CommandError(kConfigFailure, "--epochs needs three values");
  o.encoder.validate();
  auto specs = net::default_curriculum();
  for (std::size_t p = 0; p < 3; ++p) {
    specs[p].epochs = o.epochs[p];
    specs[p].batch_size = o.batch_size;
    specs[p].learning_rate = o.lr;
    specs[p].encoder_learning_rate = o.encoder_lr;
    specs[p].validate();
  }

  const net::Vocab vocab(static_cast<std::size_t>(o.encoder.bucket_count));
  std::array<std::vector<net::TrainingExample>, 3> corpora;
  for (std::size_t p = 0; p < 3; ++p) {
    for (const auto& r : jsonl::read_segments(o.corpora[p])) {
      corpora[p].push_back(
          net::make_training_example(r.segment, vocab, static_cast<std::size_t>(o.encoder.max_length)));
    }
    if (corpora[p].empty()) throw CommandError(kConfigFailure, o.corpora[p] + ": corpus is empty");
  }
  // Every phase is checked before any training starts.
  for (std::size_t p = 0; p < 3; ++p) net::check_supervision(corpora[p], specs[p]);

  std::filesystem::create_directories(o.out_dir);
  const std::filesystem::path dir(o.out_dir);

  json config;
  config["corpora"] = o.corpora;
  config["out_dir"] = o.out_dir;
  config["seed"] = o.seed;
  config["serial"] = o.serial;
  config["encoder"] = encoder_json(o.encoder);
  config["phases"] = json::array();
  for (const auto& s : specs) config["phases"].push_back(phase_json(s));

  net::TrainOptions topt;
  topt.seed = o.seed;
  topt.parallel = !o.serial;
  topt.log = [&out](std::string_view m) { out << m << "\n"; };
  auto result = net::run_curriculum(
      {corpora[0], corpora[1], corpora[2]}, specs, net::Parameters::initialize(o.encoder, o.seed), topt,
      [&dir](std::size_t phase, const net::Parameters& params, const net::PhaseReport&) {
        net::save_checkpoint(params, (dir / ("phase" + std::to_string(phase + 1) + ".ckpt")).string());
      });
  net::save_checkpoint(result.params, (dir / "model.ckpt").string());

  json report = run_record("train", config);
  report["phases"] = json::array();
  for (const auto& ph : result.phases) {
    json j;
    j["spec"] = phase_json(ph.spec);
    j["examples"] = ph.examples;
    j["initial_loss"] = ph.initial_loss;
    j["epoch_losses"] = ph.epoch_losses;
    j["steps"] = ph.steps;
    j["frozen_steps"] = ph.frozen_steps;
    report["phases"].push_back(j);
  }
  io::atomic_write((dir / "train_report.json").string(), dump_pretty(report));
  out << "checkpoint -> " << (dir / "model.ckpt").string() << "\n";
  return kOk;
}

}  // namespace

Command add_train(CLI::App& app, std::ostream& out) {
  auto o = std::make_shared<TrainOptions>();
  auto* sub = app.add_subcommand("train", "Run the three-phase training curriculum on the toy encoder");
  add_config_option(sub);
  sub->add_option("--phase1", o->corpora[0], "Phase 1 corpus (gold scores)")->required();
  sub->add_option("--phase2", o->corpora[1], "Phase 2 corpus (gold scores and spans)")->required();
  sub->add_option("--phase3", o->corpora[2], "Phase 3 corpus (gold scores and spans)")->required();
  sub->add_option("--out-dir", o->out_dir, "Directory for checkpoints and the report")->required();
  sub->add_option("--seed", o->seed, "Initialisation and shuffling seed")->capture_default_str();
  sub->add_option("--epochs", o->epochs, "Epochs per phase")->expected(3)->capture_default_str();
  sub->add_option("--batch-size", o->batch_size, "Minibatch size")->capture_default_str();
  sub->add_option("--lr", o->lr, "Head learning rate")->capture_default_str();
  sub->add_option("--encoder-lr", o->encoder_lr, "Top encoder layer learning rate")->capture_default_str();
  sub->add_option("--buckets", o->encoder.bucket_count, "Hashed vocabulary size")->capture_default_str();
  sub->add_option("--model-dim", o->encoder.model_dim, "Hidden width")->capture_default_str();
  sub->add_option("--layers", o->encoder.layers, "Transformer layers")->capture_default_str();
  sub->add_option("--heads", o->encoder.heads, "Attention heads")->capture_default_str();
  sub->add_option("--ff-dim", o->encoder.ff_dim, "Feed-forward width")->capture_default_str();
  sub->add_option("--max-length", o->encoder.max_length, "Maximum input tokens")->capture_default_str();
  sub->add_flag("--serial", o->serial, "Use the serial gradient kernel");
  return [o, &out]() { return run_train(*o, out); };
}

}  // namespace spanmetric::cli
