#include "dpmag/noise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dpmag {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// (0, 1]
inline double to_unit_open_closed(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c,
                                        std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c[0], hi0, lo0);
    mulhilo(kPhiloxM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kPhiloxW0;
    k[1] += kPhiloxW1;
  }
  return c;
}

double NoiseSource::normal(std::uint32_t level, std::uint64_t position) const {
  const auto r = philox4x32(
      {static_cast<std::uint32_t>(position), static_cast<std::uint32_t>(position >> 32), level,
       static_cast<std::uint32_t>(stream_index)},
      {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32) ^
                                             static_cast<std::uint32_t>(stream_index >> 32)});
  const double u1 = to_unit_open_closed((static_cast<std::uint64_t>(r[0]) << 32) | r[1]);
  const double u2 = to_unit_open_closed((static_cast<std::uint64_t>(r[2]) << 32) | r[3]);
  // Box-Muller
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<double> wiener_increments(const NoiseSource& noise, double tau, int n_steps,
                                      int base_steps) {
  if (n_steps < 1 || !(tau > 0.0)) throw std::invalid_argument("wiener_increments: bad grid");
  if (base_steps == 0) base_steps = n_steps;
  if (base_steps < 1 || n_steps % base_steps != 0) {
    throw std::invalid_argument("wiener_increments: n_steps must be base_steps * 2^L");
  }
  int ratio = n_steps / base_steps;
  int levels = 0;
  while (ratio > 1) {
    if (ratio % 2 != 0) throw std::invalid_argument("wiener_increments: n_steps must be base_steps * 2^L");
    ratio /= 2;
    ++levels;
  }

  double h = tau / base_steps;
  std::vector<double> dw(static_cast<std::size_t>(base_steps));
  for (int k = 0; k < base_steps; ++k) dw[k] = std::sqrt(h) * noise.normal(0, k);

  for (int level = 1; level <= levels; ++level) {
    std::vector<double> fine(dw.size() * 2);
    const double bridge_sd = 0.5 * std::sqrt(h);
    for (std::size_t j = 0; j < dw.size(); ++j) {
      const double first = 0.5 * dw[j] + bridge_sd * noise.normal(level, j);
      fine[2 * j] = first;
      fine[2 * j + 1] = dw[j] - first;
    }
    dw = std::move(fine);
    h *= 0.5;
  }
  return dw;
}

}  // namespace dpmag
