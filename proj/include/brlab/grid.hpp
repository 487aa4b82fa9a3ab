#pragma once

// Periodic sampling of functions on R^n and their discrete Fourier
// coefficients.
//
// Conventions. A grid has N samples per axis on the cube [-L/2, L/2)^n,
// spacing h = L/N. Sample index i_d in [0, N) sits at x_d = -L/2 + i_d h and
// coefficient index k_d in [0, N) carries the integer frequency
// xi_d = k_d - N/2, i.e. the physical frequency xi_d / L. Both arrays are
// row-major with the last axis fastest. The transforms are normalized so that
//
//     f(x) = sum_xi fhat(xi) exp(2 pi i x.xi / L),
//
// hence the constant field 1 has the single coefficient 1 at xi = 0 and
// sum |f|^2 h^n = L^n sum |fhat|^2.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <tuple>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "brlab/errors.hpp"

namespace brlab {

using cplx = std::complex<double>;

// Largest lattice dimension the library accepts (n*k <= 6 for k-linear work).
inline constexpr int kMaxDim = 6;

class GridSpec {
 public:
  GridSpec(int n, double L, int N) : n_(n), L_(L), N_(N) {
    if (n < 1 || n > kMaxDim) {
      throw DomainError("GridSpec: dimension must be in [1, 6], got " + std::to_string(n));
    }
    if (!(L > 0.0) || !std::isfinite(L)) {
      throw DomainError("GridSpec: period L must be positive and finite");
    }
    if (N < 2 || (N & (N - 1)) != 0) {
      throw DomainError("GridSpec: N must be a power of two >= 2, got " + std::to_string(N));
    }
  }

  int n() const noexcept { return n_; }
  double L() const noexcept { return L_; }
  int N() const noexcept { return N_; }
  double h() const noexcept { return L_ / N_; }

  std::size_t size() const noexcept {
    std::size_t s = 1;
    for (int d = 0; d < n_; ++d) s *= static_cast<std::size_t>(N_);
    return s;
  }

  // Physical frequency of the largest representable radius, N / (2L).
  double nyquist() const noexcept { return 0.5 * N_ / L_; }

  // Same N and L per block, dimension n*k.
  GridSpec product(int k) const { return GridSpec(n_ * k, L_, N_); }

  bool operator==(const GridSpec&) const = default;

 private:
  int n_;
  double L_;
  int N_;
};

namespace detail {

// Odometer over the multi-indices of a grid, last axis fastest.
template <class Fn>
void for_each_index(const GridSpec& g, Fn&& fn) {
  const int n = g.n();
  const int N = g.N();
  int idx[kMaxDim] = {0, 0, 0, 0, 0, 0};
  const std::size_t total = g.size();
  for (std::size_t flat = 0; flat < total; ++flat) {
    fn(flat, static_cast<const int*>(idx));
    for (int d = n - 1; d >= 0; --d) {
      if (++idx[d] < N) break;
      idx[d] = 0;
    }
  }
}

inline std::string describe(const GridSpec& g) {
  std::ostringstream os;
  os << "(n=" << g.n() << ", L=" << g.L() << ", N=" << g.N() << ")";
  return os.str();
}

}  // namespace detail

class Field {
 public:
  explicit Field(GridSpec grid) : grid_(grid), samples_(grid.size(), cplx(0.0, 0.0)) {}

  Field(GridSpec grid, std::vector<cplx> samples) : grid_(grid), samples_(std::move(samples)) {
    if (samples_.size() != grid_.size()) {
      throw DomainError("Field: sample count " + std::to_string(samples_.size()) +
                        " does not match grid size " + std::to_string(grid_.size()));
    }
    for (const cplx& v : samples_) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        throw DomainError("Field: samples must be finite");
      }
    }
  }

  const GridSpec& grid() const noexcept { return grid_; }
  std::span<const cplx> samples() const noexcept { return samples_; }
  std::span<cplx> samples() noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  const cplx& operator[](std::size_t i) const { return samples_[i]; }
  cplx& operator[](std::size_t i) { return samples_[i]; }

  // Coordinates of the lattice point with the given flat index.
  std::vector<double> point(std::size_t flat) const {
    std::vector<double> x(static_cast<std::size_t>(grid_.n()));
    const auto N = static_cast<std::size_t>(grid_.N());
    for (int d = grid_.n() - 1; d >= 0; --d) {
      x[static_cast<std::size_t>(d)] = -0.5 * grid_.L() + static_cast<double>(flat % N) * grid_.h();
      flat /= N;
    }
    return x;
  }

  Field& operator*=(cplx c) {
    for (cplx& v : samples_) v *= c;
    return *this;
  }

  Field& operator+=(const Field& other) {
    if (!(other.grid_ == grid_)) throw DomainError("Field: grid mismatch in addition");
    for (std::size_t i = 0; i < samples_.size(); ++i) samples_[i] += other.samples_[i];
    return *this;
  }

 private:
  GridSpec grid_;
  std::vector<cplx> samples_;
};

// Nonnegative real output of maximal operators and square functions.
struct RealField {
  GridSpec grid;
  std::vector<double> values;

  explicit RealField(GridSpec g) : grid(g), values(g.size(), 0.0) {}
  RealField(GridSpec g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw DomainError("RealField: value count does not match grid size");
  }

  double max() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }
};

inline RealField modulus(const Field& f) {
  RealField out(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) out.values[i] = std::abs(f[i]);
  return out;
}

inline Field operator*(cplx c, Field f) { return f *= c; }
inline Field operator+(Field a, const Field& b) { return a += b; }

class Spectrum {
 public:
  explicit Spectrum(GridSpec grid) : grid_(grid), coeffs_(grid.size(), cplx(0.0, 0.0)) {}

  Spectrum(GridSpec grid, std::vector<cplx> coeffs) : grid_(grid), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != grid_.size()) {
      throw DomainError("Spectrum: coefficient count does not match grid size");
    }
  }

  const GridSpec& grid() const noexcept { return grid_; }
  std::span<const cplx> coeffs() const noexcept { return coeffs_; }
  std::span<cplx> coeffs() noexcept { return coeffs_; }
  std::size_t size() const noexcept { return coeffs_.size(); }
  const cplx& operator[](std::size_t i) const { return coeffs_[i]; }
  cplx& operator[](std::size_t i) { return coeffs_[i]; }

  bool representable(std::span<const int> xi) const noexcept {
    if (static_cast<int>(xi.size()) != grid_.n()) return false;
    const int half = grid_.N() / 2;
    return std::all_of(xi.begin(), xi.end(), [half](int v) { return v >= -half && v < half; });
  }

  std::size_t index_of(std::span<const int> xi) const {
    if (!representable(xi)) {
      std::ostringstream os;
      os << "Spectrum: frequency (";
      for (std::size_t d = 0; d < xi.size(); ++d) os << (d ? "," : "") << xi[d];
      os << ") outside the representable range [-N/2, N/2) of grid " << detail::describe(grid_);
      throw NyquistError(os.str());
    }
    const int half = grid_.N() / 2;
    std::size_t flat = 0;
    for (int v : xi) flat = flat * static_cast<std::size_t>(grid_.N()) + static_cast<std::size_t>(v + half);
    return flat;
  }

  cplx coeff(std::span<const int> xi) const { return coeffs_[index_of(xi)]; }
  cplx& coeff(std::span<const int> xi) { return coeffs_[index_of(xi)]; }

  // Calls fn(flat, xi) with the integer frequency vector of each coefficient.
  template <class Fn>
  void for_each_frequency(Fn&& fn) const {
    const int half = grid_.N() / 2;
    int xi[kMaxDim];
    detail::for_each_index(grid_, [&](std::size_t flat, const int* idx) {
      for (int d = 0; d < grid_.n(); ++d) xi[d] = idx[d] - half;
      fn(flat, static_cast<const int*>(xi));
    });
  }

  // Squared integer radius |xi|^2 of every coefficient.
  std::vector<double> radius_squared() const {
    std::vector<double> r2(coeffs_.size());
    for_each_frequency([&](std::size_t flat, const int* xi) {
      double s = 0.0;
      for (int d = 0; d < grid_.n(); ++d) s += static_cast<double>(xi[d]) * xi[d];
      r2[flat] = s;
    });
    return r2;
  }

 private:
  GridSpec grid_;
  std::vector<cplx> coeffs_;
};

namespace detail {

// FFTW planning is not thread-safe; plans are created once per shape under a
// lock and then executed concurrently through the new-array interface.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(const GridSpec& g, int sign) {
    const auto key = std::make_tuple(g.n(), g.N(), sign);
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    int dims[kMaxDim];
    for (int d = 0; d < g.n(); ++d) dims[d] = g.N();
    auto* scratch = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * g.size()));
    fftw_plan p = fftw_plan_dft(g.n(), dims, scratch, scratch, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    plans_.emplace(key, p);
    return p;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, p] : plans_) fftw_destroy_plan(p);
  }

  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

// (-1)^(sum of indices) for every flat index, computed on the fly.
template <class Fn>
void for_each_parity(const GridSpec& g, Fn&& fn) {
  for_each_index(g, [&](std::size_t flat, const int* idx) {
    int s = 0;
    for (int d = 0; d < g.n(); ++d) s += idx[d];
    fn(flat, (s & 1) ? -1.0 : 1.0);
  });
}

inline void execute_inplace(const GridSpec& g, std::vector<cplx>& data, int sign) {
  fftw_plan p = PlanCache::instance().get(g, sign);
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(p, ptr, ptr);
}

}  // namespace detail

inline Spectrum forward_dft(const Field& field) {
  const GridSpec& g = field.grid();
  std::vector<cplx> data(field.samples().begin(), field.samples().end());
  detail::for_each_parity(g, [&](std::size_t i, double s) { data[i] *= s; });
  detail::execute_inplace(g, data, FFTW_FORWARD);
  // Output sign (-1)^(sum k_d + n N/2) and the 1/N^n normalization.
  const double scale = 1.0 / static_cast<double>(g.size());
  const double shift = ((g.n() * (g.N() / 2)) & 1) ? -1.0 : 1.0;
  detail::for_each_parity(g, [&](std::size_t k, double s) { data[k] *= s * shift * scale; });
  return Spectrum(g, std::move(data));
}

inline Field inverse_dft(const Spectrum& spec) {
  const GridSpec& g = spec.grid();
  std::vector<cplx> data(spec.coeffs().begin(), spec.coeffs().end());
  const double shift = ((g.n() * (g.N() / 2)) & 1) ? -1.0 : 1.0;
  detail::for_each_parity(g, [&](std::size_t k, double s) { data[k] *= s * shift; });
  detail::execute_inplace(g, data, FFTW_BACKWARD);
  detail::for_each_parity(g, [&](std::size_t i, double s) { data[i] *= s; });
  return Field(g, std::move(data));
}

struct Mode {
  std::vector<int> freq;
  cplx amplitude;
};

// Trigonometric polynomial with exactly the given coefficients; repeated
// frequencies accumulate.
inline Field make_band_limited(const GridSpec& grid, std::span<const Mode> modes) {
  Spectrum spec(grid);
  for (const Mode& m : modes) spec.coeff(m.freq) += m.amplitude;
  return inverse_dft(spec);
}

// Rank-one spectrum fhat_1(xi_1) ... fhat_k(xi_k) on the product grid.
inline Spectrum tensor_spectrum(std::span<const Spectrum> parts) {
  if (parts.empty()) throw DomainError("tensor_spectrum: need at least one factor");
  const GridSpec base = parts.front().grid();
  for (const Spectrum& s : parts) {
    if (!(s.grid() == base)) throw DomainError("tensor_spectrum: factors live on different grids");
  }
  const int k = static_cast<int>(parts.size());
  const GridSpec big = base.product(k);
  std::vector<cplx> out(1, cplx(1.0, 0.0));
  for (const Spectrum& s : parts) {
    std::vector<cplx> next;
    next.reserve(out.size() * s.size());
    for (const cplx& a : out) {
      for (const cplx& b : s.coeffs()) next.push_back(a * b);
    }
    out = std::move(next);
  }
  return Spectrum(big, std::move(out));
}

// out(x) = big(x, x, ..., x) for a field on the k-fold product grid.
inline Field restrict_diagonal(const Field& big, int k) {
  const GridSpec& bg = big.grid();
  if (k < 1 || bg.n() % k != 0) {
    throw DomainError("restrict_diagonal: dimension " + std::to_string(bg.n()) +
                      " is not divisible by k = " + std::to_string(k));
  }
  const GridSpec small(bg.n() / k, bg.L(), bg.N());
  const std::size_t block = small.size();
  std::size_t stride = 0;
  std::size_t p = 1;
  for (int b = 0; b < k; ++b) {
    stride += p;
    p *= block;
  }
  std::vector<cplx> out(block);
  for (std::size_t i = 0; i < block; ++i) out[i] = big[i * stride];
  return Field(small, std::move(out));
}

}  // namespace brlab
