#include <omp.h>

#include <exception>

#include "kernels_detail.hpp"
#include "spanmetric/error.hpp"

namespace spanmetric::kernels::parallel {

namespace {

// Keeps the exception of the lowest failing index so the error reported
// does not depend on scheduling.
class FirstError {
 public:
  void record(std::size_t index, std::exception_ptr e) {
#pragma omp critical(spanmetric_first_error)
    {
      if (!error_ || index < index_) {
        error_ = e;
        index_ = index;
      }
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
  std::size_t index_ = 0;
};

}  // namespace

PairCounts pair_counts(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("pair_counts: vectors differ in length");
  const auto n = static_cast<std::int64_t>(x.size());
  std::int64_t pairs = 0, conc = 0, disc = 0, tx = 0, ty = 0;
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : pairs, conc, disc, tx, ty)
  for (std::int64_t i = 0; i < n; ++i) {
    PairCounts c;
    for (std::int64_t j = i + 1; j < n; ++j) {
      detail::count_pair(x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(j)],
                         y[static_cast<std::size_t>(i)], y[static_cast<std::size_t>(j)], c);
    }
    pairs += c.pairs;
    conc += c.concordant;
    disc += c.discordant;
    tx += c.tied_x;
    ty += c.tied_y;
  }
  return PairCounts{pairs, conc, disc, tx, ty};
}

std::vector<double> permutation_null(std::span<const double> a, std::span<const double> b,
                                     std::span<const double> human, const CorrelationFn& corr,
                                     std::size_t resamples, std::uint64_t seed) {
  detail::check_lengths(a, b, human);
  std::vector<double> out(resamples);
  FirstError err;
  const auto R = static_cast<std::int64_t>(resamples);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < R; ++r) {
    try {
      out[static_cast<std::size_t>(r)] =
          detail::resample_statistic(a, b, human, corr, static_cast<std::size_t>(r), seed);
    } catch (...) {
      err.record(static_cast<std::size_t>(r), std::current_exception());
    }
  }
  err.rethrow();
  return out;
}

std::vector<InferenceResult> score_batch(const net::Parameters& params,
                                         std::span<const net::PreparedSegment> segments, Mode mode,
                                         const AggregationWeights& weights) {
  std::vector<InferenceResult> out(segments.size());
  FirstError err;
  const auto n = static_cast<std::int64_t>(segments.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          net::score_prepared(params, segments[static_cast<std::size_t>(i)], mode, weights);
    } catch (...) {
      err.record(static_cast<std::size_t>(i), std::current_exception());
    }
  }
  err.rethrow();
  return out;
}

double batch_gradient(const net::Parameters& params,
                      std::span<const net::TrainingExample* const> batch,
                      const net::PhaseSpec& phase, GradientScratch& scratch,
                      net::Parameters& grads) {
  if (batch.empty()) throw ConfigError("batch_gradient: empty batch");
  detail::prepare_scratch(params, batch.size(), scratch);
  FirstError err;
  const auto n = static_cast<std::int64_t>(batch.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto b = static_cast<std::size_t>(i);
    try {
      scratch.buffers[b].set_zero();
      scratch.losses[b] =
          net::accumulate_example_gradient(params, *batch[b], phase, 1.0, scratch.buffers[b]);
    } catch (...) {
      err.record(b, std::current_exception());
    }
  }
  err.rethrow();
  return detail::reduce_gradients(scratch, batch.size(), grads);
}

}  // namespace spanmetric::kernels::parallel
