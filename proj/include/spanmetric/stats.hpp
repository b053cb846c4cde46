#pragma once

// Meta-evaluation statistics: correlations, paired permutation significance,
// top-cluster marking, system pairwise accuracy, character-level span F1 and
// AUROC.

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "spanmetric/annotations.hpp"
#include "spanmetric/kernels.hpp"

namespace spanmetric::stats {

// Throws UndefinedStatistic for fewer than two points or zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

// Kendall tau-b. Throws UndefinedStatistic when either side is all tied.
double kendall(std::span<const double> x, std::span<const double> y);
double tau_b(const kernels::PairCounts& counts);

struct SignificanceResult {
  double observed = 0.0;  // corr(a, human) - corr(b, human)
  double p_value = 1.0;
  std::size_t resamples = 0;
  double level = 0.05;
  bool significant = false;  // p_value < level
};

// Paired sign-flip permutation test on the difference of two metrics'
// correlations with the human scores. Two-sided, add-one smoothed:
// p = (#{|null| >= |observed|} + 1) / (R + 1).
SignificanceResult perm_both(std::span<const double> metric_a, std::span<const double> metric_b,
                             std::span<const double> human, const kernels::CorrelationFn& corr,
                             std::size_t resamples = 200, std::uint64_t seed = 0,
                             double level = 0.05, bool parallel = true);

struct NamedScores {
  std::string name;
  std::vector<double> scores;
};

struct PairwiseTest {
  std::string better;  // higher observed correlation
  std::string worse;
  SignificanceResult result;
};

struct ClusterResult {
  std::set<std::string> members;
  std::map<std::string, double> correlation;
  std::vector<PairwiseTest> tests;
};

// A metric belongs to the cluster unless some metric with a higher
// correlation beats it at p < level. The best metric is always a member.
ClusterResult top_cluster(std::span<const NamedScores> metrics, std::span<const double> human,
                          const kernels::CorrelationFn& corr, double level = 0.05,
                          std::size_t resamples = 200, std::uint64_t seed = 0);

// Fraction of unordered system pairs whose metric ordering agrees with the
// human ordering. A zero difference on one side only counts as a mismatch;
// zero on both sides counts as agreement.
double pairwise_accuracy(std::span<const double> metric, std::span<const double> human);
double pairwise_accuracy(const std::map<std::string, double>& system_metric,
                         const std::map<std::string, double>& system_human);

struct ClassF1 {
  std::int64_t true_positive = 0;
  std::int64_t predicted = 0;
  std::int64_t gold = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct CharF1 {
  ClassF1 minor;
  ClassF1 major;
  double f1_minor = 0.0;
  double f1_major = 0.0;
  double f1_overall = 0.0;
};

// Character-level counts accumulated over one or many segments. Critical
// spans are scored as major on both sides; overlapping spans label a
// character with the most severe of them.
class CharF1Accumulator {
 public:
  void add(std::span<const ErrorSpan> predicted, std::span<const ErrorSpan> gold,
           std::size_t text_length);
  CharF1 result() const;

 private:
  std::int64_t tp_[2] = {0, 0};
  std::int64_t pred_[2] = {0, 0};
  std::int64_t gold_[2] = {0, 0};
};

CharF1 char_f1(std::span<const ErrorSpan> predicted, std::span<const ErrorSpan> gold,
               std::size_t text_length);

// Positives are expected to score LOWER. Fraction of (positive, negative)
// pairs with positive < negative, ties counting one half.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> is_positive);

// Shared correlation functions for perm_both / top_cluster.
kernels::CorrelationFn pearson_fn();
kernels::CorrelationFn kendall_fn();
kernels::CorrelationFn pairwise_accuracy_fn();

}  // namespace spanmetric::stats
