#include <gtest/gtest.h>

#include <set>

#include "model_fixtures.hpp"
#include "perturb_checks.hpp"
#include "spanmetric/error.hpp"
#include "spanmetric/synthetic.hpp"
#include "spanmetric/trainer.hpp"
#include "spanmetric/utf8.hpp"

using namespace spanmetric;
using namespace spanmetric::net;

namespace {

EncoderConfig tiny() {
  EncoderConfig cfg;
  cfg.bucket_count = 512;
  cfg.model_dim = 16;
  cfg.ff_dim = 32;
  cfg.head_hidden = 16;
  cfg.layers = 1;
  return cfg;
}

}  // namespace

TEST(Curriculum, DefaultConstants) {
  const auto c = default_curriculum();
  EXPECT_EQ(c[0].word_level_training, false);
  EXPECT_EQ(c[0].lambda, 0.0);
  EXPECT_EQ(c[1].lambda, 0.983);
  EXPECT_EQ(c[2].lambda, 0.055);
  for (const auto& p : c) {
    EXPECT_EQ(p.class_weights, (std::array<double, 4>{0.08, 0.486, 0.505, 0.533}));
    EXPECT_EQ(p.layerwise_decay, 0.983);
    EXPECT_EQ(p.frozen_fraction, 0.3);
  }
}

TEST(Training, LossDropsAndRunsAreReproducible) {
  const auto cfg = tiny();
  const auto data = fixtures::small_batch(64, cfg);
  PhaseSpec ph = PhaseSpec::phase_two();
  ph.epochs = 4;
  ph.batch_size = 16;
  auto a = Parameters::initialize(cfg, 1);
  auto b = a;
  auto c = a;
  TrainOptions opt;
  const auto ra = train_phase(data, ph, a, opt);
  const auto rb = train_phase(data, ph, b, opt);
  opt.parallel = false;
  const auto rc = train_phase(data, ph, c, opt);
  EXPECT_LT(ra.epoch_losses.back(), ra.initial_loss);
  EXPECT_TRUE(a == b);
  EXPECT_TRUE(a == c);
  EXPECT_EQ(ra.epoch_losses, rc.epoch_losses);
  EXPECT_EQ(ra.steps, 16u);
  EXPECT_EQ(ra.frozen_steps, 2u);
}

TEST(Training, SupervisionChecked) {
  const auto cfg = tiny();
  auto data = fixtures::small_batch(4, cfg);
  data[2].gold_tags.reset();
  EXPECT_NO_THROW(check_supervision(data, PhaseSpec::phase_one()));
  EXPECT_THROW(check_supervision(data, PhaseSpec::phase_two()), SupervisionError);
  data[1].gold_score.reset();
  EXPECT_THROW(check_supervision(data, PhaseSpec::phase_one()), SupervisionError);
  std::vector<TrainingExample> none;
  auto p = Parameters::initialize(cfg, 1);
  EXPECT_THROW(train_phase(none, PhaseSpec::phase_one(), p), TrainingError);
}

TEST(Synthetic, SplitsAndGoldAreConsistent) {
  synthetic::Config sc;
  sc.segments = 600;
  sc.detection_positives = 30;
  const auto c = synthetic::generate(sc);
  EXPECT_EQ(c.size(), 600u);
  EXPECT_EQ(c.phase_one.size(), 150u);
  EXPECT_EQ(c.phase_two.size(), 180u);
  for (const auto& s : c.phase_one) EXPECT_FALSE(s.gold_spans);
  std::set<std::string> ids;
  std::size_t with_errors = 0;
  for (const auto* split : {&c.phase_two, &c.phase_three, &c.held_out}) {
    for (const auto& s : *split) {
      EXPECT_TRUE(validate_segment(s).empty()) << s.id;
      ASSERT_TRUE(s.gold_spans && s.gold_score && s.reference);
      EXPECT_EQ(*s.gold_score, mqm_score(*s.gold_spans));
      with_errors += !s.gold_spans->empty();
      EXPECT_TRUE(ids.insert(s.id).second);
    }
  }
  EXPECT_GT(with_errors, 200u);
  std::size_t positives = 0;
  for (std::size_t i = 0; i < c.detection.size(); ++i) {
    if (!c.is_positive[i]) {
      EXPECT_GE(*c.detection[i].gold_score, 0.76);
      continue;
    }
    ++positives;
    const auto& sp = *c.detection[i].gold_spans;
    ASSERT_EQ(sp.size(), 1u);
    EXPECT_EQ(sp[0].severity, Severity::Critical);
    EXPECT_EQ(sp[0].end, utf8::length(c.detection[i].translation));
  }
  EXPECT_EQ(positives, 30u);
  const auto again = synthetic::generate(sc);
  EXPECT_EQ(again.held_out.back().translation, c.held_out.back().translation);
}

TEST(Synthetic, RejectsBadConfig) {
  synthetic::Config sc;
  sc.min_words = 2;
  EXPECT_THROW(synthetic::generate(sc), ConfigError);
  sc = synthetic::Config{};
  sc.phase_one_fraction = 0.5;
  sc.phase_two_fraction = 0.5;
  EXPECT_THROW(synthetic::generate(sc), ConfigError);
}
