#pragma once

// Linear Bochner-Riesz means, their maximal operator, the square functions
// G and G-tilde, dyadic band pieces and the kernel K_j.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "brlab/engine.hpp"
#include "brlab/errors.hpp"
#include "brlab/grid.hpp"
#include "brlab/multipliers.hpp"
#include "brlab/quadrature.hpp"
#include "brlab/special.hpp"

namespace brlab {

enum class ScaleKind { sup_grid, dt, dt_over_t, mean_on_0R };

inline const char* to_string(ScaleKind k) {
  switch (k) {
    case ScaleKind::sup_grid: return "sup_grid";
    case ScaleKind::dt: return "dt";
    case ScaleKind::dt_over_t: return "dt_over_t";
    case ScaleKind::mean_on_0R: return "mean_on_0R";
  }
  return "?";
}

// Radii or times with quadrature weights for the integral their kind names.
struct ScaleSet {
  std::vector<double> values;
  std::vector<double> weights;
  ScaleKind kind = ScaleKind::sup_grid;

  std::size_t size() const noexcept { return values.size(); }
  bool empty() const noexcept { return values.empty(); }
  double max() const { return values.empty() ? 0.0 : values.back(); }

  void validate() const {
    if (weights.size() != values.size()) throw DomainError("ScaleSet: weight count differs from value count");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] > 0.0) || !std::isfinite(values[i])) throw DomainError("ScaleSet: values must be positive and finite");
      if (i > 0 && !(values[i] > values[i - 1])) throw DomainError("ScaleSet: values must be strictly increasing");
      if (!(weights[i] >= 0.0)) throw DomainError("ScaleSet: weights must be non-negative");
    }
  }

  static ScaleSet single(double R) {
    ScaleSet s{{R}, {1.0}, ScaleKind::sup_grid};
    s.validate();
    return s;
  }

  // lo, lo q, lo q^2, ... up to hi; hi itself is appended when the ratio
  // does not land on it. For dt_over_t the weights are the trapezoid rule in
  // log t.
  static ScaleSet geometric(double lo, double hi, double ratio = std::exp2(1.0 / 16.0),
                            ScaleKind kind = ScaleKind::sup_grid) {
    if (!(lo > 0.0) || !(hi >= lo) || !(ratio > 1.0)) throw DomainError("ScaleSet::geometric: need 0 < lo <= hi, ratio > 1");
    ScaleSet s;
    s.kind = kind;
    const auto steps = static_cast<long>(std::floor(std::log(hi / lo) / std::log(ratio) + 1e-9));
    // Ratios 2^(1/m) use exact exponents i/m so that refined grids contain
    // the coarse nodes bit for bit.
    const double per_octave = 1.0 / std::log2(ratio);
    const double m = std::round(per_octave);
    const bool octave = std::fabs(per_octave - m) < 1e-9;
    for (long i = 0; i <= steps; ++i) {
      const auto di = static_cast<double>(i);
      s.values.push_back(octave ? lo * std::exp2(di / m) : lo * std::pow(ratio, di));
    }
    if (s.values.back() < hi * (1.0 - 1e-12)) s.values.push_back(hi);
    s.weights.assign(s.values.size(), 1.0);
    if (kind == ScaleKind::dt_over_t) {
      std::fill(s.weights.begin(), s.weights.end(), 0.0);
      for (std::size_t i = 0; i + 1 < s.values.size(); ++i) {
        const double w = 0.5 * std::log(s.values[i + 1] / s.values[i]);
        s.weights[i] += w;
        s.weights[i + 1] += w;
      }
    }
    s.validate();
    return s;
  }

  // Uniform times spacing, 2 spacing, ... up to the first node >= t_max, for
  // running means (1/R) int_0^R. Weights are trapezoid weights on [0, t_K]
  // (the t = 0 endpoint is handled by the operators).
  static ScaleSet uniform_mean(double t_max, double spacing) {
    if (!(t_max > 0.0) || !(spacing > 0.0)) throw DomainError("ScaleSet::uniform_mean: need t_max > 0, spacing > 0");
    ScaleSet s;
    s.kind = ScaleKind::mean_on_0R;
    const auto count = static_cast<long>(std::ceil(t_max / spacing - 1e-9));
    for (long i = 1; i <= std::max(count, 1L); ++i) {
      s.values.push_back(spacing * static_cast<double>(i));
      s.weights.push_back(spacing);
    }
    s.weights.back() = 0.5 * spacing;
    s.validate();
    return s;
  }

  // count equally spaced values lo .. hi for suprema.
  static ScaleSet uniform(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 2) throw DomainError("ScaleSet::uniform: need 0 < lo < hi, count >= 2");
    ScaleSet s;
    for (int i = 0; i < count; ++i) s.values.push_back(lo + (hi - lo) * i / (count - 1));
    s.weights.assign(s.values.size(), 1.0);
    s.validate();
    return s;
  }

  // Gauss-Legendre nodes on (a, b) for int dt.
  static ScaleSet gauss_dt(double a, double b, int count) {
    if (!(a >= 0.0) || !(b > a)) throw DomainError("ScaleSet::gauss_dt: need 0 <= a < b");
    const quad::Rule r = quad::gauss_legendre(count, a, b);
    ScaleSet s{r.nodes, r.weights, ScaleKind::dt};
    s.validate();
    return s;
  }
};

// A symbol family xi -> m(xi / s). radial(r2, s) receives the squared
// physical radius |xi|^2 and the scale s; blocks(r2s, s) receives the
// squared physical block radii. support is the symbol's radius in units of s.
struct ScaledSymbol {
  std::function<double(double, double)> radial;
  std::function<double(std::span<const double>, double)> blocks;
  double support = 1.0;
};

namespace detail {

inline bool apply_scaled(const SymbolEngine& e, const ScaledSymbol& sym, double s, Field& out, const char* what) {
  const GridSpec& g = e.grid();
  require_nyquist_safe(g, sym.support * s, what);
  const double inv_l2 = 1.0 / (g.L() * g.L());
  if (sym.radial) return e.apply_radial([&](double r2) { return sym.radial(r2 * inv_l2, s); }, out);
  std::vector<double> phys(static_cast<std::size_t>(e.blocks()));
  return e.apply_blocks(
      [&](std::span<const double> r2) {
        for (std::size_t b = 0; b < phys.size(); ++b) phys[b] = r2[b] * inv_l2;
        return sym.blocks(phys, s);
      },
      out);
}

// The t -> 0+ limit of the family: only xi = 0 survives, with m(0).
inline bool apply_scale_zero_limit(const SymbolEngine& e, const ScaledSymbol& sym, Field& out) {
  if (sym.radial) {
    const double m0 = sym.radial(0.0, 1.0);
    return e.apply_radial([&](double r2) { return r2 == 0.0 ? m0 : 0.0; }, out);
  }
  std::vector<double> zero(static_cast<std::size_t>(e.blocks()), 0.0);
  const double m0 = sym.blocks(zero, 1.0);
  return e.apply_blocks(
      [&](std::span<const double> r2) {
        for (double v : r2) {
          if (v != 0.0) return 0.0;
        }
        return m0;
      },
      out);
}

inline void check_kind(const ScaleSet& s, ScaleKind kind, const char* what) {
  s.validate();
  if (s.empty()) throw DomainError(std::string(what) + ": empty scale set");
  if (s.kind != kind) {
    throw DomainError(std::string(what) + ": scale set kind must be " + to_string(kind) + ", got " + to_string(s.kind));
  }
}

// sup over Rset of |T_R f| on the diagonal.
inline RealField sup_modulus(const SymbolEngine& e, const ScaledSymbol& sym, const ScaleSet& Rset, const char* what) {
  check_kind(Rset, ScaleKind::sup_grid, what);
  require_nyquist_safe(e.grid(), sym.support * Rset.max(), what);
  const GridSpec small(e.grid().n() / e.blocks(), e.grid().L(), e.grid().N());
  RealField out(small);
  Field big(e.grid());
  for (double R : Rset.values) {
    if (!apply_scaled(e, sym, R, big, what)) continue;
    const Field d = e.diagonal(big);
    for (std::size_t i = 0; i < d.size(); ++i) out.values[i] = std::max(out.values[i], std::abs(d[i]));
  }
  return out;
}

// sup over R in Rset of ((1/R) int_0^R |T_t f|^2 dt)^(1/2) with the
// trapezoid rule on the uniform t-nodes, the last partial interval closed by
// linear interpolation of the integrand.
inline RealField running_mean_sup(const SymbolEngine& e, const ScaledSymbol& sym, const ScaleSet& Rset,
                                  const ScaleSet& tset, const char* what) {
  check_kind(Rset, ScaleKind::sup_grid, what);
  check_kind(tset, ScaleKind::mean_on_0R, what);
  const double spacing = tset.values.front();
  for (std::size_t i = 1; i < tset.size(); ++i) {
    if (std::fabs(tset.values[i] - spacing * static_cast<double>(i + 1)) > 1e-9 * tset.values[i]) {
      throw DomainError(std::string(what) + ": t-nodes must be uniform starting at the spacing");
    }
  }
  if (Rset.max() > tset.max() * (1.0 + 1e-12)) {
    throw DomainError(std::string(what) + ": t-nodes end at " + std::to_string(tset.max()) +
                      " before the largest R = " + std::to_string(Rset.max()));
  }
  const double r_top = Rset.max();
  require_nyquist_safe(e.grid(), sym.support * r_top, what);

  const GridSpec small(e.grid().n() / e.blocks(), e.grid().L(), e.grid().N());
  const std::size_t m = small.size();
  std::vector<double> prev(m, 0.0), cur(m, 0.0), integral(m, 0.0), best(m, 0.0);
  Field big(e.grid());
  bool prev_nonzero = apply_scale_zero_limit(e, sym, big);
  if (prev_nonzero) {
    const Field d = e.diagonal(big);
    for (std::size_t i = 0; i < m; ++i) prev[i] = std::norm(d[i]);
  }

  std::size_t next_r = 0;
  double t_prev = 0.0;
  bool cur_dirty = false;  // cur holds nonzero values from an earlier node
  for (std::size_t node = 0; node < tset.size() && next_r < Rset.size(); ++node) {
    const double t = tset.values[node];
    const bool nonzero = apply_scaled(e, sym, t, big, what);
    if (nonzero) {
      const Field d = e.diagonal(big);
      for (std::size_t i = 0; i < m; ++i) cur[i] = std::norm(d[i]);
    } else if (cur_dirty) {
      std::fill(cur.begin(), cur.end(), 0.0);
    }
    cur_dirty = nonzero;
    const double dt = t - t_prev;
    while (next_r < Rset.size() && Rset.values[next_r] <= t * (1.0 + 1e-13)) {
      const double R = std::min(Rset.values[next_r], t);
      const double a = R - t_prev;
      if (!prev_nonzero && !nonzero) {
        for (std::size_t i = 0; i < m; ++i) best[i] = std::max(best[i], integral[i] / R);
      } else {
        const double frac = a / dt;
        for (std::size_t i = 0; i < m; ++i) {
          const double gr = prev[i] + (cur[i] - prev[i]) * frac;
          best[i] = std::max(best[i], (integral[i] + 0.5 * a * (prev[i] + gr)) / R);
        }
      }
      ++next_r;
    }
    if (prev_nonzero || nonzero) {
      for (std::size_t i = 0; i < m; ++i) integral[i] += 0.5 * dt * (prev[i] + cur[i]);
    }
    std::swap(prev, cur);
    cur_dirty = prev_nonzero;
    prev_nonzero = nonzero;
    t_prev = t;
  }
  RealField out(small);
  for (std::size_t i = 0; i < m; ++i) out.values[i] = std::sqrt(best[i]);
  return out;
}

}  // namespace detail

// m^alpha(xi / R) as a scaled family.
inline ScaledSymbol br_family(double alpha) {
  if (!(alpha >= 0.0)) throw DomainError("Bochner-Riesz order alpha must be >= 0");
  ScaledSymbol s;
  s.radial = [alpha](double r2, double R) { return br_symbol_value(alpha, r2 / (R * R)); };
  return s;
}

// bump(2^j (1 - |xi|^2 / t^2)).
inline ScaledSymbol band_family(int j, const RadialProfile& bump) {
  if (j < 1) throw DomainError("band piece: j must be >= 1");
  const double scale = std::ldexp(1.0, j);
  ScaledSymbol s;
  s.radial = [scale, bump](double r2, double t) { return bump(scale * (1.0 - r2 / (t * t))); };
  return s;
}

inline Field apply_br(const Field& f, double alpha, double R) {
  if (!(R > 0.0)) throw DomainError("apply_br: R must be positive");
  const SymbolEngine e(forward_dft(f));
  Field out(f.grid());
  detail::apply_scaled(e, br_family(alpha), R, out, "apply_br");
  return out;
}

// Pointwise max of |B^alpha_R f| over the sampled radii: a lower bound for
// the supremum over all R > 0.
inline RealField maximal_br(const Field& f, double alpha, const ScaleSet& Rset) {
  const SymbolEngine e(forward_dft(f));
  return detail::sup_modulus(e, br_family(alpha), Rset, "maximal_br");
}

inline RealField gtilde(const Field& f, double alpha, const ScaleSet& Rset, const ScaleSet& tset) {
  const SymbolEngine e(forward_dft(f));
  return detail::running_mean_sup(e, br_family(alpha), Rset, tset, "gtilde");
}

struct SquareFunctionResult {
  RealField values;
  double tail_bound = 0.0;  // bound on the omitted part of the squared integral
  bool empty_range = false;
  std::string warning;
};

namespace detail {

inline SquareFunctionResult log_square_function(const SymbolEngine& e, const ScaledSymbol& sym, const ScaleSet& tset,
                                                const char* what) {
  check_kind(tset, ScaleKind::dt_over_t, what);
  require_nyquist_safe(e.grid(), sym.support * tset.max(), what);
  SquareFunctionResult res{RealField(e.grid()), 0.0, false, {}};
  Field out(e.grid());
  bool any = false;
  for (std::size_t i = 0; i < tset.size(); ++i) {
    if (!apply_scaled(e, sym, tset.values[i], out, what)) continue;
    any = true;
    const double w = tset.weights[i];
    for (std::size_t x = 0; x < out.size(); ++x) res.values.values[x] += w * std::norm(out[x]);
  }
  for (double& v : res.values.values) v = std::sqrt(v);
  if (!any) {
    res.empty_range = true;
    res.warning = std::string(what) + ": symbol vanishes at every t-node; returning the zero field";
  }
  return res;
}

// Same round-off floor as SymbolEngine.
inline double spectrum_floor(const Spectrum& s) {
  double peak = 0.0;
  for (const cplx& c : s.coeffs()) peak = std::max(peak, std::abs(c));
  return 1e-15 * peak;
}

inline double coeff_abs_sum(const Spectrum& s, double power) {
  double sum = 0.0;
  const double floor = spectrum_floor(s);
  const double invL = 1.0 / s.grid().L();
  s.for_each_frequency([&](std::size_t flat, const int* xi) {
    const double a = std::abs(s[flat]);
    if (!(a > floor)) return;
    double r2 = 0.0;
    for (int d = 0; d < s.grid().n(); ++d) r2 += static_cast<double>(xi[d]) * xi[d];
    if (r2 == 0.0) return;
    sum += a * std::pow(std::sqrt(r2) * invL, power);
  });
  return sum;
}

}  // namespace detail

// G^alpha with sigma^alpha(xi) = |xi|^2 (1 - |xi|^2)_+^alpha, quadrature in
// dt/t. The tail bound covers t above the last node (|sigma(xi/t)| <=
// |xi|^2/t^2) and frequencies below the first node.
inline SquareFunctionResult stein_g(const Field& f, double alpha, const ScaleSet& tset) {
  if (!(alpha >= 0.0)) throw DomainError("stein_g: alpha must be >= 0");
  const Spectrum spec = forward_dft(f);
  const SymbolEngine e(spec);
  ScaledSymbol sym;
  sym.radial = [alpha](double r2, double t) {
    const double u2 = r2 / (t * t);
    return u2 * br_symbol_value(alpha, u2);
  };
  SquareFunctionResult res = detail::log_square_function(e, sym, tset, "stein_g");
  const double s2 = detail::coeff_abs_sum(spec, 2.0);
  const double tmax = tset.max();
  res.tail_bound = s2 * s2 / (4.0 * std::pow(tmax, 4));
  // Modes with 0 < |xi| < t_min contribute on (|xi|, t_min).
  const double tmin = tset.values.front();
  double below = 0.0;
  double rmin = tmin;
  const double floor = detail::spectrum_floor(spec);
  spec.for_each_frequency([&](std::size_t flat, const int* xi) {
    if (!(std::abs(spec[flat]) > floor)) return;
    double r2 = 0.0;
    for (int d = 0; d < spec.grid().n(); ++d) r2 += static_cast<double>(xi[d]) * xi[d];
    const double r = std::sqrt(r2) / spec.grid().L();
    if (r > 0.0 && r < tmin) {
      below += std::abs(spec[flat]);
      rmin = std::min(rmin, r);
    }
  });
  res.tail_bound += below * below * std::log(tmin / rmin);
  return res;
}

// [bump(2^j (1 - |xi/t|^2)) fhat]^vee.
inline Field band_piece(const Field& f, int j, double t, const RadialProfile& bump = bump_psi()) {
  if (!(t > 0.0)) throw DomainError("band_piece: t must be positive");
  const SymbolEngine e(forward_dft(f));
  Field out(f.grid());
  detail::apply_scaled(e, band_family(j, bump), t, out, "band_piece");
  return out;
}

// G^psi_j by log-trapezoid quadrature. The tail bound is
// (sum |fhat|)^2 times the log-length of the t-range where some mode's band
// is active but no node lies.
inline SquareFunctionResult g_psi_j(const Field& f, int j, const ScaleSet& tset, const RadialProfile& bump = bump_psi()) {
  const Spectrum spec = forward_dft(f);
  const SymbolEngine e(spec);
  const ScaledSymbol sym = band_family(j, bump);
  SquareFunctionResult res = detail::log_square_function(e, sym, tset, "g_psi_j");
  const auto radii = e.radii_squared();
  const double scale = std::ldexp(1.0, j);
  double rmin = 0.0, rmax = 0.0;
  for (std::uint32_t r2 : radii) {
    if (r2 == 0) continue;
    if (rmin == 0.0) rmin = std::sqrt(static_cast<double>(r2)) / f.grid().L();
    rmax = std::sqrt(static_cast<double>(r2)) / f.grid().L();
  }
  if (rmax > 0.0) {
    // Active t for radius r: 1 - r^2/t^2 in the bump support scaled by 2^-j.
    const double lo_s = bump.support_lo() / scale;
    const double hi_s = std::min(bump.support_hi() / scale, 1.0);
    const double t_lo = rmin / std::sqrt(1.0 - lo_s);
    const double t_hi = hi_s < 1.0 ? rmax / std::sqrt(1.0 - hi_s) : INFINITY;
    const double uncovered = std::max(0.0, std::log(tset.values.front() / t_lo)) +
                             std::max(0.0, std::log(t_hi / tset.max()));
    const double a = detail::coeff_abs_sum(spec, 0.0);
    res.tail_bound = a * a * uncovered;
  }
  return res;
}

inline RealField gtilde_psi_j(const Field& f, int j, const ScaleSet& Rset, const ScaleSet& tset,
                              const RadialProfile& bump = bump_psi()) {
  const SymbolEngine e(forward_dft(f));
  return detail::running_mean_sup(e, band_family(j, bump), Rset, tset, "gtilde_psi_j");
}

// sup over t in tset of |B^psi_{2^-j,t} f|.
inline RealField maximal_band_piece(const Field& f, int j, const ScaleSet& tset, const RadialProfile& bump = bump_psi()) {
  const SymbolEngine e(forward_dft(f));
  return detail::sup_modulus(e, band_family(j, bump), tset, "maximal_band_piece");
}

// (int_0^inf |bump(2^j (1 - s^2))|^2 ds/s)^(1/2), the exact L^2 operator
// norm of G^psi_j by Plancherel. With u = 2^j (1 - s^2) the integral is
// 2^(-j-1) int bump(u)^2 / (1 - 2^-j u) du over the bump support.
inline double l2_opnorm_g_psi_j(int j, const RadialProfile& bump = bump_psi()) {
  if (j < 1) throw DomainError("l2_opnorm_g_psi_j: j must be >= 1");
  const double eps = std::ldexp(1.0, -j);
  const double top = std::min(bump.support_hi(), 1.0 / eps);
  std::vector<double> breaks;
  for (double b : bump.breakpoints()) {
    if (b <= top) breaks.push_back(b);
  }
  if (breaks.empty() || breaks.back() < top) breaks.push_back(top);
  auto f = [&](double u) {
    const double v = bump(u);
    return v == 0.0 ? 0.0 : v * v / (1.0 - eps * u);
  };
  const auto est = quad::adaptive_panels(f, breaks, 1e-13);
  return std::sqrt(0.5 * eps * est.value);
}

// K_j(|x|) = [bump(2^j (1 - |xi|^2))]^vee at the given radii.
inline std::vector<double> kernel_Kj(int j, int n, std::span<const double> radii, const RadialProfile& bump = bump_psi()) {
  for (double r : radii) {
    if (!(r > 0.0)) throw DomainError("kernel_Kj: radii must be positive");
  }
  return radial_fourier(dyadic_shell(j, bump), n, radii).values;
}

}  // namespace brlab
