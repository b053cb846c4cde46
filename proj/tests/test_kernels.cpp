#include <gtest/gtest.h>
#include <omp.h>

#include "model_fixtures.hpp"
#include "spanmetric/inference.hpp"
#include "spanmetric/kernels.hpp"
#include "spanmetric/rng.hpp"
#include "spanmetric/stats.hpp"
#include "spanmetric/synthetic.hpp"

using namespace spanmetric;
using namespace spanmetric::kernels;

namespace {

class ThreadCounts : public ::testing::TestWithParam<int> {
 protected:
  void SetUp() override {
    saved_ = omp_get_max_threads();
    omp_set_num_threads(GetParam());
  }
  void TearDown() override { omp_set_num_threads(saved_); }

 private:
  int saved_ = 1;
};

net::EncoderConfig small_config() {
  net::EncoderConfig cfg;
  cfg.bucket_count = 256;
  cfg.model_dim = 16;
  cfg.ff_dim = 32;
  cfg.head_hidden = 16;
  return cfg;
}

}  // namespace

TEST_P(ThreadCounts, PairCountsIdentical) {
  Rng rng(20);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 1 + rng.below(300);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.below(20));
      y[i] = static_cast<double>(rng.below(20));
    }
    EXPECT_EQ(serial::pair_counts(x, y), parallel::pair_counts(x, y));
  }
}

TEST_P(ThreadCounts, PermutationNullIdentical) {
  Rng rng(21);
  std::vector<double> a(60), b(60), h(60);
  for (std::size_t i = 0; i < h.size(); ++i) {
    h[i] = rng.normal();
    a[i] = h[i] + rng.normal();
    b[i] = h[i] + rng.normal();
  }
  for (const auto& corr : {stats::pearson_fn(), stats::kendall_fn()}) {
    const auto s = serial::permutation_null(a, b, h, corr, 150, 8);
    const auto p = parallel::permutation_null(a, b, h, corr, 150, 8);
    EXPECT_EQ(s, p);
  }
}

TEST_P(ThreadCounts, ScoreBatchIdentical) {
  const auto cfg = small_config();
  const auto params = net::Parameters::initialize(cfg, 3);
  synthetic::Config sc;
  sc.segments = 80;
  sc.detection_positives = 0;
  const auto corpus = synthetic::generate(sc);
  net::Vocab vocab(cfg.bucket_count);
  std::vector<net::PreparedSegment> prepared;
  for (const auto& s : corpus.phase_two) prepared.push_back(net::prepare_segment(s, vocab, Mode::Unified, 256));
  const auto a = serial::score_batch(params, prepared, Mode::Unified, {});
  const auto b = parallel::score_batch(params, prepared, Mode::Unified, {});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].final_score, b[i].final_score);
    EXPECT_EQ(a[i].spans, b[i].spans);
    EXPECT_EQ(a[i].bundle.y_ref, b[i].bundle.y_ref);
  }
}

TEST_P(ThreadCounts, BatchGradientIdentical) {
  const auto cfg = small_config();
  const auto params = net::Parameters::initialize(cfg, 4);
  const auto examples = fixtures::small_batch(20, cfg);
  std::vector<const net::TrainingExample*> batch;
  for (const auto& e : examples) batch.push_back(&e);
  for (const auto& phase : {net::PhaseSpec::phase_one(), net::PhaseSpec::phase_two()}) {
    GradientScratch s1, s2;
    auto g1 = params.zeros_like();
    auto g2 = params.zeros_like();
    const double l1 = serial::batch_gradient(params, batch, phase, s1, g1);
    const double l2 = parallel::batch_gradient(params, batch, phase, s2, g2);
    EXPECT_EQ(l1, l2);
    EXPECT_TRUE(g1 == g2);
  }
}

INSTANTIATE_TEST_SUITE_P(Threads, ThreadCounts, ::testing::Values(1, 2, 4, 7));

TEST(SwapMask, DeterministicPerResample) {
  EXPECT_EQ(swap_mask(5, 3, 100), swap_mask(5, 3, 100));
  EXPECT_NE(swap_mask(5, 3, 100), swap_mask(5, 4, 100));
  const auto m = swap_mask(1, 0, 4000);
  std::size_t ones = 0;
  for (auto v : m) ones += v;
  EXPECT_NEAR(ones / 4000.0, 0.5, 0.05);
}
