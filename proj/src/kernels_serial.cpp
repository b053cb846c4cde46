#include <stdexcept>
#include <string>

#include "kernels_detail.hpp"
#include "spanmetric/error.hpp"
#include "spanmetric/rng.hpp"

namespace spanmetric::kernels {

std::vector<std::uint8_t> swap_mask(std::uint64_t seed, std::size_t resample, std::size_t n) {
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(resample)));
  std::vector<std::uint8_t> mask(n);
  for (auto& m : mask) m = rng.coin() ? 1 : 0;
  return mask;
}

namespace detail {

void check_lengths(std::span<const double> a, std::span<const double> b,
                   std::span<const double> human) {
  if (a.size() != b.size() || a.size() != human.size()) {
    throw ShapeError("permutation test: metric and human vectors differ in length");
  }
}

double resample_statistic(std::span<const double> a, std::span<const double> b,
                          std::span<const double> human, const CorrelationFn& corr,
                          std::size_t resample, std::uint64_t seed) {
  const auto mask = swap_mask(seed, resample, a.size());
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) std::swap(sa[i], sb[i]);
  }
  return corr(sa, human) - corr(sb, human);
}

void prepare_scratch(const net::Parameters& params, std::size_t batch, GradientScratch& scratch) {
  while (scratch.buffers.size() < batch) scratch.buffers.push_back(params.zeros_like());
  for (std::size_t i = 0; i < batch; ++i) {
    if (scratch.buffers[i].size() != params.size()) scratch.buffers[i] = params.zeros_like();
  }
  scratch.losses.assign(batch, 0.0);
}

double reduce_gradients(GradientScratch& scratch, std::size_t batch, net::Parameters& grads) {
  grads.set_zero();
  auto out = grads.values();
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    auto g = scratch.buffers[b].values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += g[i];
    loss += scratch.losses[b];
  }
  const double inv = 1.0 / static_cast<double>(batch);
  for (auto& v : out) v *= inv;
  return loss * inv;
}

}  // namespace detail

namespace serial {

PairCounts pair_counts(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("pair_counts: vectors differ in length");
  PairCounts c;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) detail::count_pair(x[i], x[j], y[i], y[j], c);
  return c;
}

std::vector<double> permutation_null(std::span<const double> a, std::span<const double> b,
                                     std::span<const double> human, const CorrelationFn& corr,
                                     std::size_t resamples, std::uint64_t seed) {
  detail::check_lengths(a, b, human);
  std::vector<double> out(resamples);
  for (std::size_t r = 0; r < resamples; ++r) {
    out[r] = detail::resample_statistic(a, b, human, corr, r, seed);
  }
  return out;
}

std::vector<InferenceResult> score_batch(const net::Parameters& params,
                                         std::span<const net::PreparedSegment> segments, Mode mode,
                                         const AggregationWeights& weights) {
  std::vector<InferenceResult> out;
  out.reserve(segments.size());
  for (const auto& seg : segments) out.push_back(net::score_prepared(params, seg, mode, weights));
  return out;
}

double batch_gradient(const net::Parameters& params,
                      std::span<const net::TrainingExample* const> batch,
                      const net::PhaseSpec& phase, GradientScratch& scratch,
                      net::Parameters& grads) {
  if (batch.empty()) throw ConfigError("batch_gradient: empty batch");
  detail::prepare_scratch(params, batch.size(), scratch);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    scratch.buffers[b].set_zero();
    scratch.losses[b] =
        net::accumulate_example_gradient(params, *batch[b], phase, 1.0, scratch.buffers[b]);
  }
  return detail::reduce_gradients(scratch, batch.size(), grads);
}

}  // namespace serial

}  // namespace spanmetric::kernels
