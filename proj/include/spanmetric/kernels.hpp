#pragma once

// Data-parallel inner loops. Every kernel exists twice: a plain serial
// reference in `serial` and an OpenMP version in `parallel`. The two are
// required to produce bitwise-identical results for any thread count, so
// the parallel versions only split work whose partial results are either
// exact (integer counts) or written to per-item slots and reduced in a
// fixed order.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "spanmetric/inference.hpp"
#include "spanmetric/loss.hpp"
#include "spanmetric/model.hpp"
#include "spanmetric/scoring.hpp"

namespace spanmetric::kernels {

struct PairCounts {
  std::int64_t pairs = 0;
  std::int64_t concordant = 0;
  std::int64_t discordant = 0;
  std::int64_t tied_x = 0;  // pairs tied in x, joint ties included
  std::int64_t tied_y = 0;  // pairs tied in y, joint ties included

  friend bool operator==(const PairCounts&, const PairCounts&) = default;
};

using CorrelationFn = std::function<double(std::span<const double>, std::span<const double>)>;

// Swap mask for resample r: item i takes metric b's value when bit is set.
// Drawn from a substream keyed by (seed, r).
std::vector<std::uint8_t> swap_mask(std::uint64_t seed, std::size_t resample, std::size_t n);

// Per-example gradient buffers reused across batches.
struct GradientScratch {
  std::vector<net::Parameters> buffers;
  std::vector<double> losses;
};

namespace serial {

PairCounts pair_counts(std::span<const double> x, std::span<const double> y);

// corr(a', human) - corr(b', human) for each resample's swapped pair (a', b').
std::vector<double> permutation_null(std::span<const double> a, std::span<const double> b,
                                     std::span<const double> human, const CorrelationFn& corr,
                                     std::size_t resamples, std::uint64_t seed);

std::vector<InferenceResult> score_batch(const net::Parameters& params,
                                         std::span<const net::PreparedSegment> segments, Mode mode,
                                         const AggregationWeights& weights);

// Mean loss of the batch; grads receives the mean gradient.
double batch_gradient(const net::Parameters& params,
                      std::span<const net::TrainingExample* const> batch,
                      const net::PhaseSpec& phase, GradientScratch& scratch,
                      net::Parameters& grads);

}  // namespace serial

namespace parallel {

PairCounts pair_counts(std::span<const double> x, std::span<const double> y);

std::vector<double> permutation_null(std::span<const double> a, std::span<const double> b,
                                     std::span<const double> human, const CorrelationFn& corr,
                                     std::size_t resamples, std::uint64_t seed);

std::vector<InferenceResult> score_batch(const net::Parameters& params,
                                         std::span<const net::PreparedSegment> segments, Mode mode,
                                         const AggregationWeights& weights);

double batch_gradient(const net::Parameters& params,
                      std::span<const net::TrainingExample* const> batch,
                      const net::PhaseSpec& phase, GradientScratch& scratch,
                      net::Parameters& grads);

}  // namespace parallel

}  // namespace spanmetric::kernels
