#pragma once

// Shared Fourier-multiplier machinery. A spectrum is prepared once; each
// symbol is then sampled only at the distinct integer radii present and the
// inverse transform is skipped when the sampled symbol vanishes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <sstream>
#include <vector>

#include "brlab/errors.hpp"
#include "brlab/grid.hpp"

namespace brlab {

// Default desk limits for product grids.
struct Budget {
  int max_dim = 6;
  std::uint64_t max_points = std::uint64_t{1} << 26;
};

inline void check_budget(int n, int k, int N, const Budget& budget) {
  const int dim = n * k;
  const double points = std::pow(static_cast<double>(N), dim);
  if (dim > budget.max_dim || points > static_cast<double>(budget.max_points)) {
    std::ostringstream os;
    os << "product grid of dimension " << dim << " with N = " << N << " needs " << points
       << " lattice points; budget is dimension <= " << budget.max_dim << " and " << budget.max_points << " points";
    throw BudgetError(os.str(), static_cast<std::uint64_t>(points));
  }
}

// Rejects a symbol whose support radius (physical frequency) reaches the
// representable range of the grid.
inline void require_nyquist_safe(const GridSpec& grid, double support_radius, const char* what) {
  if (!(support_radius * grid.L() < 0.5 * grid.N())) {
    std::ostringstream os;
    os << what << ": symbol support radius " << support_radius << " (lattice radius " << support_radius * grid.L()
       << ") is not strictly inside the representable range N/2 = " << grid.N() / 2 << " of grid "
       << detail::describe(grid);
    throw NyquistError(os.str());
  }
}

class SymbolEngine {
 public:
  // blocks > 1: spec lives on the blocks-fold product of an n-dimensional grid.
  explicit SymbolEngine(const Spectrum& spec, int blocks = 1) : grid_(spec.grid()), blocks_(blocks) {
    if (blocks < 1 || grid_.n() % blocks != 0) throw DomainError("SymbolEngine: dimension not divisible by block count");
    const int bn = grid_.n() / blocks;
    // Coefficients at the transform's round-off level are dropped so that
    // symbol supports are judged on the genuine spectrum.
    double peak = 0.0;
    for (const cplx& c : spec.coeffs()) peak = std::max(peak, std::abs(c));
    const double floor = 1e-15 * peak;
    std::vector<std::uint32_t> total;
    spec.for_each_frequency([&](std::size_t flat, const int* xi) {
      const cplx c = spec[flat];
      if (!(std::abs(c) > floor)) return;
      std::uint32_t sum = 0;
      for (int b = 0; b < blocks; ++b) {
        std::uint32_t r2 = 0;
        for (int d = 0; d < bn; ++d) {
          const int v = xi[b * bn + d];
          r2 += static_cast<std::uint32_t>(v * v);
        }
        if (blocks > 1) block_r2_.push_back(r2);
        sum += r2;
      }
      flat_.push_back(static_cast<std::uint64_t>(flat));
      coeff_.push_back(c);
      total.push_back(sum);
    });
    radii_ = total;
    std::sort(radii_.begin(), radii_.end());
    radii_.erase(std::unique(radii_.begin(), radii_.end()), radii_.end());
    slot_.resize(total.size());
    for (std::size_t i = 0; i < total.size(); ++i) {
      slot_[i] = static_cast<std::uint32_t>(std::lower_bound(radii_.begin(), radii_.end(), total[i]) - radii_.begin());
    }
  }

  const GridSpec& grid() const noexcept { return grid_; }
  int blocks() const noexcept { return blocks_; }
  std::size_t nonzero() const noexcept { return flat_.size(); }
  // Distinct integer |xi|^2 values carrying nonzero coefficients, ascending.
  std::span<const std::uint32_t> radii_squared() const noexcept { return radii_; }

  // Largest lattice radius carrying a coefficient (0 for an empty spectrum).
  double max_radius() const { return radii_.empty() ? 0.0 : std::sqrt(static_cast<double>(radii_.back())); }

  // Multiplies by m(|xi|^2) with m a function of the integer squared radius,
  // then inverts. Returns false (and leaves out untouched) when m vanishes on
  // every coefficient.
  bool apply_radial(const std::function<double(double)>& m, Field& out) const {
    std::vector<double> vals(radii_.size());
    bool any = false;
    for (std::size_t u = 0; u < radii_.size(); ++u) {
      vals[u] = m(static_cast<double>(radii_[u]));
      if (!std::isfinite(vals[u])) throw DomainError("SymbolEngine: symbol is not finite at |xi|^2 = " + std::to_string(radii_[u]));
      any = any || vals[u] != 0.0;
    }
    return finish(out, any, [&](std::size_t i) { return vals[slot_[i]]; });
  }

  // Multiplies by m(|xi_1|^2, ..., |xi_k|^2) with integer block radii.
  bool apply_blocks(const std::function<double(std::span<const double>)>& m, Field& out) const {
    std::vector<double> vals(flat_.size());
    std::vector<double> r2(static_cast<std::size_t>(blocks_));
    bool any = false;
    for (std::size_t i = 0; i < flat_.size(); ++i) {
      for (int b = 0; b < blocks_; ++b) {
        r2[static_cast<std::size_t>(b)] =
            blocks_ > 1 ? static_cast<double>(block_r2_[i * static_cast<std::size_t>(blocks_) + static_cast<std::size_t>(b)])
                        : static_cast<double>(radii_[slot_[i]]);
      }
      vals[i] = m(r2);
      if (!std::isfinite(vals[i])) throw DomainError("SymbolEngine: block symbol is not finite");
      any = any || vals[i] != 0.0;
    }
    return finish(out, any, [&](std::size_t i) { return vals[i]; });
  }

  // Output restricted to the diagonal when the engine runs on a product grid.
  Field diagonal(const Field& big) const { return blocks_ > 1 ? restrict_diagonal(big, blocks_) : big; }

 private:
  template <class Val>
  bool finish(Field& out, bool any, Val&& val) const {
    if (!any) return false;
    Spectrum s(grid_);
    for (std::size_t i = 0; i < flat_.size(); ++i) s[static_cast<std::size_t>(flat_[i])] = coeff_[i] * val(i);
    out = inverse_dft(s);
    return true;
  }

  GridSpec grid_;
  int blocks_;
  std::vector<std::uint64_t> flat_;
  std::vector<cplx> coeff_;
  std::vector<std::uint32_t> block_r2_;
  std::vector<std::uint32_t> radii_;
  std::vector<std::uint32_t> slot_;
};

}  // namespace brlab
