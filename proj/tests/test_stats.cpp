#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "oracles.hpp"
#include "spanmetric/error.hpp"
#include "spanmetric/kernels.hpp"
#include "spanmetric/rng.hpp"
#include "spanmetric/stats.hpp"

using namespace spanmetric;

namespace {

// Coarse values so ties are common.
std::vector<double> coarse(Rng& rng, std::size_t n, int levels) {
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(rng.below(levels)) / levels;
  return v;
}

std::vector<ErrorSpan> spans_in(Rng& rng, std::size_t len) {
  std::vector<ErrorSpan> out(rng.below(4));
  for (auto& s : out) {
    s.start = rng.below(len);
    s.end = s.start + 1 + rng.below(len - s.start);
    s.severity = severity_at(1 + rng.below(3));
  }
  return out;
}

}  // namespace

TEST(Pearson, MatchesLongDoubleOracle) {
  Rng rng(10);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.below(40);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.normal();
      y[i] = 0.5 * x[i] + rng.normal();
    }
    EXPECT_NEAR(stats::pearson(x, y), oracle::pearson(x, y), 1e-12);
  }
  const std::vector<double> c = {1, 1, 1};
  const std::vector<double> d = {1, 2, 3};
  EXPECT_THROW(stats::pearson(c, d), UndefinedStatistic);
  EXPECT_THROW(stats::pearson(std::vector<double>{1}, std::vector<double>{1}), UndefinedStatistic);
  EXPECT_THROW(stats::pearson(c, std::vector<double>{1, 2}), ShapeError);
  EXPECT_DOUBLE_EQ(stats::pearson(d, d), 1.0);
}

TEST(Kendall, MatchesPairEnumeration) {
  Rng rng(11);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + rng.below(29);
    auto x = coarse(rng, n, 5);
    auto y = coarse(rng, n, 4);
    x[0] = 0.0;
    x[1] = 1.0;
    y[0] = 1.0;
    y[1] = 0.0;
    EXPECT_EQ(stats::kendall(x, y), oracle::kendall_tau_b(x, y));
  }
}

TEST(Kendall, KnownValuesAndErrors) {
  const std::vector<double> a = {1, 2, 3, 4};
  const std::vector<double> b = {4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(stats::kendall(a, a), 1.0);
  EXPECT_DOUBLE_EQ(stats::kendall(a, b), -1.0);
  const std::vector<double> x = {1, 2, 2, 3};
  const std::vector<double> y = {1, 2, 3, 3};
  // C = 4, D = 0, one x-tie, one y-tie among six pairs.
  EXPECT_DOUBLE_EQ(stats::kendall(x, y), 4.0 / 5.0);
  EXPECT_THROW(stats::kendall(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}),
               UndefinedStatistic);
}

TEST(PairwiseAccuracy, MatchesOracleOnSystemMeans) {
  Rng rng(12);
  for (int t = 0; t < 500; ++t) {
    const std::size_t systems = 2 + rng.below(7);
    std::map<std::string, std::vector<double>> seg_m, seg_h;
    const std::size_t n = systems + rng.below(31 - systems);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string sys = "s" + std::to_string(i % systems);
      seg_m[sys].push_back(static_cast<double>(rng.below(5)));
      seg_h[sys].push_back(static_cast<double>(rng.below(5)));
    }
    std::map<std::string, double> mm, hh;
    std::vector<double> mv, hv;
    for (auto& [sys, v] : seg_m) {
      double sm = 0, sh = 0;
      for (double x : v) sm += x;
      for (double x : seg_h[sys]) sh += x;
      mm[sys] = sm / v.size();
      hh[sys] = sh / seg_h[sys].size();
      mv.push_back(mm[sys]);
      hv.push_back(hh[sys]);
    }
    EXPECT_EQ(stats::pairwise_accuracy(mm, hh), oracle::pairwise_accuracy(mv, hv));
  }
}

TEST(PairwiseAccuracy, TiesOnOneSideMismatch) {
  EXPECT_DOUBLE_EQ(stats::pairwise_accuracy(std::vector<double>{1, 1}, std::vector<double>{1, 2}), 0.0);
  EXPECT_DOUBLE_EQ(stats::pairwise_accuracy(std::vector<double>{1, 1}, std::vector<double>{2, 2}), 1.0);
  std::map<std::string, double> m = {{"a", 1}, {"b", 2}};
  std::map<std::string, double> h = {{"a", 1}, {"c", 2}};
  EXPECT_THROW(stats::pairwise_accuracy(m, h), ShapeError);
}

TEST(CharF1, MatchesPerCharOracle) {
  Rng rng(13);
  for (int t = 0; t < 500; ++t) {
    stats::CharF1Accumulator acc;
    oracle::F1Counts counts;
    const std::size_t segs = 1 + rng.below(4);
    for (std::size_t k = 0; k < segs; ++k) {
      const std::size_t len = 1 + rng.below(30);
      const auto p = spans_in(rng, len);
      const auto g = spans_in(rng, len);
      acc.add(p, g, len);
      oracle::count_chars(counts, p, g, len);
    }
    const auto r = acc.result();
    EXPECT_EQ(r.minor.true_positive, counts.tp[0]);
    EXPECT_EQ(r.major.gold, counts.gold[1]);
    EXPECT_EQ(r.major.predicted, counts.pred[1]);
    EXPECT_EQ(r.f1_minor, oracle::f1_of(counts.tp[0], counts.pred[0], counts.gold[0]));
    EXPECT_EQ(r.f1_major, oracle::f1_of(counts.tp[1], counts.pred[1], counts.gold[1]));
    EXPECT_EQ(r.f1_overall, oracle::f1_overall(counts));
  }
}

TEST(CharF1, EdgeCases) {
  EXPECT_EQ(stats::char_f1({}, {}, 5).f1_overall, 1.0);
  const std::vector<ErrorSpan> one = {{0, 2, Severity::Minor, {}}};
  EXPECT_EQ(stats::char_f1(one, {}, 5).f1_overall, 0.0);
  EXPECT_EQ(stats::char_f1({}, one, 5).f1_overall, 0.0);
  const std::vector<ErrorSpan> crit = {{0, 2, Severity::Critical, {}}};
  const std::vector<ErrorSpan> maj = {{0, 2, Severity::Major, {}}};
  EXPECT_EQ(stats::char_f1(crit, maj, 5).f1_major, 1.0);
  EXPECT_THROW(stats::char_f1(std::vector<ErrorSpan>{{0, 9, Severity::Minor, {}}}, {}, 5),
               ValidationError);
}

TEST(Auroc, MatchesPairEnumeration) {
  Rng rng(14);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + rng.below(29);
    auto s = coarse(rng, n, 6);
    std::vector<std::uint8_t> pos(n);
    for (auto& p : pos) p = rng.coin();
    pos[0] = 1;
    pos[1] = 0;
    EXPECT_EQ(stats::auroc(s, pos), oracle::auroc(s, pos));
  }
  const std::vector<double> s = {0.1, 0.2};
  EXPECT_EQ(stats::auroc(s, std::vector<std::uint8_t>{1, 0}), 1.0);
  EXPECT_EQ(stats::auroc(s, std::vector<std::uint8_t>{0, 1}), 0.0);
  EXPECT_THROW(stats::auroc(s, std::vector<std::uint8_t>{1, 1}), UndefinedStatistic);
}

TEST(PermBoth, IdenticalMetricsGivePOne) {
  Rng rng(15);
  std::vector<double> h(40), m(40);
  for (std::size_t i = 0; i < h.size(); ++i) {
    h[i] = rng.normal();
    m[i] = h[i] + rng.normal();
  }
  const auto r = stats::perm_both(m, m, h, stats::pearson_fn(), 100, 3);
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_FALSE(r.significant);
}

TEST(PermBoth, PValueFromExplicitSwaps) {
  Rng rng(16);
  const std::size_t n = 25;
  std::vector<double> h(n), a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    h[i] = rng.normal();
    a[i] = h[i] + 0.5 * rng.normal();
    b[i] = h[i] + 1.5 * rng.normal();
  }
  const std::size_t R = 150;
  const std::uint64_t seed = 99;
  const double obs = oracle::pearson(a, h) - oracle::pearson(b, h);
  std::size_t extreme = 0;
  for (std::size_t r = 0; r < R; ++r) {
    const auto mask = kernels::swap_mask(seed, r, n);
    std::vector<double> x = a, y = b;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i]) std::swap(x[i], y[i]);
    }
    const double d = stats::pearson(x, h) - stats::pearson(y, h);
    if (std::abs(d) >= std::abs(stats::pearson(a, h) - stats::pearson(b, h))) ++extreme;
  }
  const auto res = stats::perm_both(a, b, h, stats::pearson_fn(), R, seed);
  EXPECT_NEAR(res.observed, obs, 1e-12);
  EXPECT_EQ(res.p_value, static_cast<double>(extreme + 1) / static_cast<double>(R + 1));
  const auto serial = stats::perm_both(a, b, h, stats::pearson_fn(), R, seed, 0.05, false);
  EXPECT_EQ(serial.p_value, res.p_value);
  EXPECT_THROW(stats::perm_both(a, b, h, stats::pearson_fn(), 0), ConfigError);
}

TEST(TopCluster, ClearlyWorseMetricDropsOut) {
  Rng rng(17);
  const std::size_t n = 200;
  std::vector<double> h(n);
  std::vector<stats::NamedScores> metrics = {{"good", {}}, {"twin", {}}, {"noise", {}}};
  for (std::size_t i = 0; i < n; ++i) {
    h[i] = rng.normal();
    metrics[0].scores.push_back(h[i] + 0.3 * rng.normal());
    metrics[1].scores.push_back(h[i] + 0.3 * rng.normal());
    metrics[2].scores.push_back(rng.normal());
  }
  const auto c = stats::top_cluster(metrics, h, stats::pearson_fn(), 0.05, 200, 1);
  EXPECT_TRUE(c.members.count("good"));
  EXPECT_TRUE(c.members.count("twin"));
  EXPECT_FALSE(c.members.count("noise"));
  EXPECT_EQ(c.tests.size(), 3u);
  const auto again = stats::top_cluster(metrics, h, stats::pearson_fn(), 0.05, 200, 1);
  for (std::size_t i = 0; i < c.tests.size(); ++i) {
    EXPECT_EQ(c.tests[i].result.p_value, again.tests[i].result.p_value);
  }
}

