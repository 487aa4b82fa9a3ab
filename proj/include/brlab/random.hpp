#pragma once

// Seeded test ensembles. The generator is fixed so that reports are portable:
// mt19937_64, 53-bit uniforms (x >> 11) * 2^-53, Box-Muller normals, and
// complex amplitudes (g1 + i g2) / sqrt(2).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "brlab/errors.hpp"
#include "brlab/grid.hpp"

namespace brlab {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  cplx complex_normal() {
    const double a = normal();
    const double b = normal();
    return cplx(a, b) * (1.0 / std::numbers::sqrt2);
  }

  // Uniform integer in [lo, hi].
  int integer(int lo, int hi) {
    const double u = uniform();
    return lo + std::min(hi - lo, static_cast<int>(u * (hi - lo + 1)));
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Every lattice frequency with integer radius in [r_lo, r_hi] gets an
// independent complex Gaussian coefficient.
inline Field annulus_white_noise(const GridSpec& grid, Rng& rng, double r_lo, double r_hi) {
  if (!(r_lo >= 0.0) || !(r_hi >= r_lo)) throw DomainError("annulus_white_noise: need 0 <= r_lo <= r_hi");
  if (!(r_hi < 0.5 * grid.N())) throw NyquistError("annulus_white_noise: outer radius reaches the Nyquist limit");
  Spectrum spec(grid);
  const double lo2 = r_lo * r_lo;
  const double hi2 = r_hi * r_hi;
  spec.for_each_frequency([&](std::size_t flat, const int* xi) {
    double r2 = 0.0;
    for (int d = 0; d < grid.n(); ++d) r2 += static_cast<double>(xi[d]) * xi[d];
    if (r2 >= lo2 && r2 <= hi2) spec[flat] = rng.complex_normal();
  });
  return inverse_dft(spec);
}

// count modes at uniformly drawn lattice frequencies with radius in
// [r_lo, r_hi] (rejection from the bounding cube), complex Gaussian amplitudes.
inline std::vector<Mode> random_modes(const GridSpec& grid, Rng& rng, int count, double r_lo, double r_hi) {
  if (!(r_hi < 0.5 * grid.N())) throw NyquistError("random_modes: outer radius reaches the Nyquist limit");
  if (!(r_hi >= r_lo) || !(r_lo >= 0.0)) throw DomainError("random_modes: need 0 <= r_lo <= r_hi");
  const int box = static_cast<int>(std::floor(r_hi));
  std::vector<Mode> modes;
  int attempts = 0;
  while (static_cast<int>(modes.size()) < count) {
    if (++attempts > 1000000) throw DomainError("random_modes: annulus contains no lattice points");
    Mode m;
    m.freq.resize(static_cast<std::size_t>(grid.n()));
    double r2 = 0.0;
    for (int& v : m.freq) {
      v = rng.integer(-box, box);
      r2 += static_cast<double>(v) * v;
    }
    if (r2 < r_lo * r_lo || r2 > r_hi * r_hi) continue;
    m.amplitude = rng.complex_normal();
    modes.push_back(std::move(m));
  }
  return modes;
}

}  // namespace brlab
