#pragma once

// Counter-based Gaussian noise. Every increment is a pure function of
// (seed, stream_index, refinement level, position), so a trajectory's noise
// does not depend on which thread runs it or in what order.

#include <array>
#include <cstdint>
#include <vector>

namespace dpmag {

/// Philox4x32-10 block cipher (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

struct NoiseSource {
  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;

  /// Standard normal variate addressed by (level, position).
  double normal(std::uint32_t level, std::uint64_t position) const;
};

/// Wiener increments on [0, tau] with n_steps equal steps.
///
/// The coarse path has base_steps increments; each extra level of
/// refinement splits every interval in two by Brownian-bridge sampling, so
/// sums over pairs of fine increments reproduce the coarse ones exactly (up
/// to rounding). n_steps must equal base_steps * 2^L for some L >= 0;
/// base_steps = 0 means base_steps = n_steps.
std::vector<double> wiener_increments(const NoiseSource& noise, double tau, int n_steps,
                                      int base_steps = 0);

}  // namespace dpmag
