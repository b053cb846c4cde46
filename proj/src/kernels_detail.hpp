#pragma once

// Shared by the serial and OpenMP kernels so both run identical arithmetic
// per item.

#include <cstdint>
#include <span>

#include "spanmetric/kernels.hpp"

namespace spanmetric::kernels::detail {

// Comparison of pair (i, j); adds into counts.
inline void count_pair(double xi, double xj, double yi, double yj, PairCounts& c) {
  const int sx = (xi > xj) - (xi < xj);
  const int sy = (yi > yj) - (yi < yj);
  ++c.pairs;
  if (sx == 0) ++c.tied_x;
  if (sy == 0) ++c.tied_y;
  if (sx != 0 && sy != 0) {
    if (sx == sy) {
      ++c.concordant;
    } else {
      ++c.discordant;
    }
  }
}

double resample_statistic(std::span<const double> a, std::span<const double> b,
                          std::span<const double> human, const CorrelationFn& corr,
                          std::size_t resample, std::uint64_t seed);

void prepare_scratch(const net::Parameters& params, std::size_t batch, GradientScratch& scratch);

double reduce_gradients(GradientScratch& scratch, std::size_t batch, net::Parameters& grads);

void check_lengths(std::span<const double> a, std::span<const double> b,
                   std::span<const double> human);

}  // namespace spanmetric::kernels::detail
