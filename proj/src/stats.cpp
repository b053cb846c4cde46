#include "spanmetric/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spanmetric/error.hpp"
#include "spanmetric/rng.hpp"

namespace spanmetric::stats {

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("pearson: vectors differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw UndefinedStatistic("pearson: need at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedStatistic("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double tau_b(const kernels::PairCounts& c) {
  const double n0 = static_cast<double>(c.pairs);
  const double dx = n0 - static_cast<double>(c.tied_x);
  const double dy = n0 - static_cast<double>(c.tied_y);
  if (c.pairs == 0 || dx == 0.0 || dy == 0.0) {
    throw UndefinedStatistic("kendall: a vector is entirely tied");
  }
  return static_cast<double>(c.concordant - c.discordant) / std::sqrt(dx * dy);
}

double kendall(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("kendall: vectors differ in length");
  if (x.size() < 2) throw UndefinedStatistic("kendall: need at least two points");
  return tau_b(kernels::parallel::pair_counts(x, y));
}

SignificanceResult perm_both(std::span<const double> metric_a, std::span<const double> metric_b,
                             std::span<const double> human, const kernels::CorrelationFn& corr,
                             std::size_t resamples, std::uint64_t seed, double level,
                             bool parallel) {
  if (resamples == 0) throw ConfigError("perm_both: need at least one resample");
  SignificanceResult res;
  res.resamples = resamples;
  res.level = level;
  res.observed = corr(metric_a, human) - corr(metric_b, human);
  const auto null = parallel
                        ? kernels::parallel::permutation_null(metric_a, metric_b, human, corr,
                                                              resamples, seed)
                        : kernels::serial::permutation_null(metric_a, metric_b, human, corr,
                                                            resamples, seed);
  const double obs = std::abs(res.observed);
  std::size_t extreme = 0;
  for (double v : null) {
    if (std::abs(v) >= obs) ++extreme;
  }
  res.p_value = static_cast<double>(extreme + 1) / static_cast<double>(resamples + 1);
  res.significant = res.p_value < level;
  return res;
}

ClusterResult top_cluster(std::span<const NamedScores> metrics, std::span<const double> human,
                          const kernels::CorrelationFn& corr, double level, std::size_t resamples,
                          std::uint64_t seed) {
  if (metrics.empty()) throw ConfigError("top_cluster: no metrics");
  ClusterResult out;
  std::vector<double> c(metrics.size());
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    c[i] = corr(metrics[i].scores, human);
    out.correlation[metrics[i].name] = c[i];
  }
  std::vector<bool> beaten(metrics.size(), false);
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    for (std::size_t j = i + 1; j < metrics.size(); ++j) {
      if (c[i] == c[j]) continue;
      const std::size_t hi = c[i] > c[j] ? i : j;
      const std::size_t lo = hi == i ? j : i;
      const auto pair_seed =
          derive_seed(seed, metrics[hi].name + "\x1f" + metrics[lo].name);
      auto r = perm_both(metrics[hi].scores, metrics[lo].scores, human, corr, resamples,
                         pair_seed, level);
      if (r.significant) beaten[lo] = true;
      out.tests.push_back({metrics[hi].name, metrics[lo].name, r});
    }
  }
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    if (!beaten[i]) out.members.insert(metrics[i].name);
  }
  return out;
}

double pairwise_accuracy(std::span<const double> metric, std::span<const double> human) {
  if (metric.size() != human.size()) throw ShapeError("pairwise_accuracy: size mismatch");
  if (metric.size() < 2) throw UndefinedStatistic("pairwise_accuracy: need at least two systems");
  std::int64_t agree = 0, total = 0;
  for (std::size_t i = 0; i < metric.size(); ++i) {
    for (std::size_t j = i + 1; j < metric.size(); ++j) {
      const int sm = (metric[i] > metric[j]) - (metric[i] < metric[j]);
      const int sh = (human[i] > human[j]) - (human[i] < human[j]);
      ++total;
      if (sm == sh) ++agree;
    }
  }
  return static_cast<double>(agree) / static_cast<double>(total);
}

double pairwise_accuracy(const std::map<std::string, double>& system_metric,
                         const std::map<std::string, double>& system_human) {
  if (system_metric.size() != system_human.size()) {
    throw ShapeError("pairwise_accuracy: metric and human cover different systems");
  }
  std::vector<double> m, h;
  for (const auto& [sys, v] : system_metric) {
    auto it = system_human.find(sys);
    if (it == system_human.end()) {
      throw ShapeError("pairwise_accuracy: system " + sys + " has no human score");
    }
    m.push_back(v);
    h.push_back(it->second);
  }
  return pairwise_accuracy(m, h);
}

namespace {

// 0 = OK, 1 = minor, 2 = major (critical folded into major).
std::vector<std::uint8_t> char_labels(std::span<const ErrorSpan> spans, std::size_t len,
                                      const char* side) {
  std::vector<std::uint8_t> labels(len, 0);
  for (std::size_t k = 0; k < spans.size(); ++k) {
    const auto v = validate_span(spans[k], len, std::string(side) + "[" + std::to_string(k) + "]");
    if (!v.empty()) throw ValidationError(v.front().field + ": " + v.front().message);
    const std::uint8_t lab = spans[k].severity == Severity::Minor ? 1 : 2;
    for (std::size_t c = spans[k].start; c < spans[k].end; ++c) {
      labels[c] = std::max(labels[c], lab);
    }
  }
  return labels;
}

ClassF1 finish(std::int64_t tp, std::int64_t pred, std::int64_t gold) {
  ClassF1 c;
  c.true_positive = tp;
  c.predicted = pred;
  c.gold = gold;
  if (pred == 0 && gold == 0) {
    c.precision = c.recall = c.f1 = 1.0;
    return c;
  }
  c.precision = pred > 0 ? static_cast<double>(tp) / static_cast<double>(pred) : 0.0;
  c.recall = gold > 0 ? static_cast<double>(tp) / static_cast<double>(gold) : 0.0;
  c.f1 = (c.precision + c.recall) > 0.0
             ? 2.0 * c.precision * c.recall / (c.precision + c.recall)
             : 0.0;
  return c;
}

}  // namespace

void CharF1Accumulator::add(std::span<const ErrorSpan> predicted, std::span<const ErrorSpan> gold,
                            std::size_t text_length) {
  const auto p = char_labels(predicted, text_length, "predicted");
  const auto g = char_labels(gold, text_length, "gold");
  for (std::size_t i = 0; i < text_length; ++i) {
    if (p[i]) ++pred_[p[i] - 1];
    if (g[i]) ++gold_[g[i] - 1];
    if (p[i] && p[i] == g[i]) ++tp_[p[i] - 1];
  }
}

CharF1 CharF1Accumulator::result() const {
  CharF1 r;
  r.minor = finish(tp_[0], pred_[0], gold_[0]);
  r.major = finish(tp_[1], pred_[1], gold_[1]);
  r.f1_minor = r.minor.f1;
  r.f1_major = r.major.f1;
  const std::int64_t gold_total = gold_[0] + gold_[1];
  if (gold_total == 0) {
    r.f1_overall = (pred_[0] + pred_[1]) == 0 ? 1.0 : 0.0;
  } else {
    r.f1_overall = (static_cast<double>(gold_[0]) * r.minor.f1 +
                    static_cast<double>(gold_[1]) * r.major.f1) /
                   static_cast<double>(gold_total);
  }
  return r;
}

CharF1 char_f1(std::span<const ErrorSpan> predicted, std::span<const ErrorSpan> gold,
               std::size_t text_length) {
  CharF1Accumulator acc;
  acc.add(predicted, gold, text_length);
  return acc.result();
}

double auroc(std::span<const double> scores, std::span<const std::uint8_t> is_positive) {
  if (scores.size() != is_positive.size()) throw ShapeError("auroc: size mismatch");
  std::int64_t pos = 0, neg = 0;
  for (auto p : is_positive) (p ? pos : neg) += 1;
  if (pos == 0 || neg == 0) throw UndefinedStatistic("auroc: need both positive and negative labels");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the Mann-Whitney U of the negatives: doubled midranks are integers.
  std::int64_t twice_rank_sum = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const auto doubled_midrank = static_cast<std::int64_t>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      if (!is_positive[order[k]]) twice_rank_sum += doubled_midrank;
    }
    i = j + 1;
  }
  const std::int64_t twice_u = twice_rank_sum - neg * (neg + 1);
  return static_cast<double>(twice_u) / static_cast<double>(2 * pos * neg);
}

kernels::CorrelationFn pearson_fn() {
  return [](std::span<const double> a, std::span<const double> b) { return pearson(a, b); };
}

kernels::CorrelationFn kendall_fn() {
  // Serial pair counts inside resamples: the outer loop is already parallel.
  return [](std::span<const double> a, std::span<const double> b) {
    return tau_b(kernels::serial::pair_counts(a, b));
  };
}

kernels::CorrelationFn pairwise_accuracy_fn() {
  return [](std::span<const double> a, std::span<const double> b) {
    return pairwise_accuracy(a, b);
  };
}

}  // namespace spanmetric::stats
