#pragma once

// Discrete L^p and power-weighted L^p(|x|^-gamma) norms, the splitting
// L^q into L^2 + L^2(|x|^-omega), and ensemble lower bounds for operator norms.

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "brlab/errors.hpp"
#include "brlab/grid.hpp"
#include "brlab/parallel.hpp"
#include "brlab/quadrature.hpp"

namespace brlab {

struct WeightSpec {
  double gamma = 0.0;
  double p = 2.0;
};

namespace detail {

inline double modulus_at(const Field& f, std::size_t i) { return std::abs(f[i]); }
inline double modulus_at(const RealField& f, std::size_t i) { return std::fabs(f.values[i]); }
inline const GridSpec& grid_of(const Field& f) { return f.grid(); }
inline const GridSpec& grid_of(const RealField& f) { return f.grid; }

inline double distance_to_origin(const GridSpec& g, std::size_t flat) {
  const auto N = static_cast<std::size_t>(g.N());
  double s = 0.0;
  for (int d = 0; d < g.n(); ++d) {
    const double x = -0.5 * g.L() + static_cast<double>(flat % N) * g.h();
    s += x * x;
    flat /= N;
  }
  return std::sqrt(s);
}

// Mean of |u|^-gamma over the unit cube [0,1]^n.
inline double unit_cube_mean(int n, double gamma) {
  if (gamma == 0.0) return 1.0;
  if (n == 1) return 1.0 / (1.0 - gamma);
  if (n == 2) {
    // Polar coordinates on the half-square below the diagonal.
    const auto q = quad::adaptive(
        [gamma](double th) { return std::pow(1.0 / std::cos(th), 2.0 - gamma); }, 0.0, 0.25 * std::numbers::pi, 1e-13);
    return 2.0 * q.value / (2.0 - gamma);
  }
  if (n == 3) {
    // Spherical coordinates over the positive octant, rho = 1 / max component.
    auto inner = [gamma](double phi) {
      const auto q = quad::adaptive_panels(
          [gamma, phi](double th) {
            const double m = std::max({std::sin(th) * std::cos(phi), std::sin(th) * std::sin(phi), std::cos(th)});
            return std::sin(th) * std::pow(1.0 / m, 3.0 - gamma);
          },
          std::vector<double>{0.0, std::atan(1.0 / std::max(std::cos(phi), std::sin(phi))), 0.5 * std::numbers::pi},
          1e-12);
      return q.value;
    };
    const auto q = quad::adaptive_panels(inner, std::vector<double>{0.0, 0.25 * std::numbers::pi, 0.5 * std::numbers::pi}, 1e-11);
    return q.value / (3.0 - gamma);
  }
  throw DomainError("weighted_lp_norm: origin-cell average only for n <= 3");
}

template <class F>
double weighted_power_sum(const F& f, double p, double gamma) {
  const GridSpec& g = grid_of(f);
  const double cell = std::pow(g.h(), g.n());
  double origin_weight = 0.0;
  if (gamma != 0.0) origin_weight = std::pow(0.5 * g.h(), -gamma) * unit_cube_mean(g.n(), gamma);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v = modulus_at(f, i);
    if (v == 0.0) continue;
    double w = 1.0;
    if (gamma != 0.0) {
      const double r = distance_to_origin(g, i);
      w = r == 0.0 ? origin_weight : std::pow(r, -gamma);
    }
    s += std::pow(v, p) * w;
  }
  return s * cell;
}

}  // namespace detail

template <class F>
double lp_norm(const F& f, double p) {
  if (!(p > 0.0)) throw DomainError("lp_norm: p must be positive");
  return std::pow(detail::weighted_power_sum(f, p, 0.0), 1.0 / p);
}

template <class F>
double weighted_lp_norm(const F& f, const WeightSpec& w) {
  const int n = detail::grid_of(f).n();
  if (!(w.p > 0.0)) throw DomainError("weighted_lp_norm: p must be positive");
  if (!(w.gamma >= 0.0 && w.gamma < n)) {
    throw DomainError("weighted_lp_norm: gamma = " + std::to_string(w.gamma) + " outside [0, n) with n = " +
                      std::to_string(n));
  }
  return std::pow(detail::weighted_power_sum(f, w.p, w.gamma), 1.0 / w.p);
}

struct SplitResult {
  Field inner;
  Field outer;
  double inner_l2 = 0.0;
  double outer_weighted_l2 = 0.0;  // ||f_out||_{L^2(|x|^-omega)}
  double lq = 0.0;
  double holder_ratio = 0.0;       // outer_weighted_l2 / lq, 0 when f = 0
};

inline SplitResult split_field(const Field& f, double q, double omega, double rho0 = 1.0) {
  const GridSpec& g = f.grid();
  if (!(q >= 2.0)) throw DomainError("split_field: q must be >= 2");
  const double lo = g.n() * (1.0 - 2.0 / q);
  if (!(omega > lo)) {
    throw DomainError("split_field: omega = " + std::to_string(omega) + " must exceed n(1 - 2/q) = " + std::to_string(lo));
  }
  if (!(rho0 > 0.0)) throw DomainError("split_field: rho0 must be positive");
  SplitResult res{Field(g), Field(g)};
  double outer = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = detail::distance_to_origin(g, i);
    if (r <= rho0) {
      res.inner[i] = f[i];
    } else {
      res.outer[i] = f[i];
      outer += std::norm(f[i]) * std::pow(r, -omega);
    }
  }
  res.inner_l2 = lp_norm(res.inner, 2.0);
  res.outer_weighted_l2 = std::sqrt(outer * std::pow(g.h(), g.n()));
  res.lq = lp_norm(f, q);
  res.holder_ratio = res.lq > 0.0 ? res.outer_weighted_l2 / res.lq : 0.0;
  return res;
}

struct NormSpec {
  double p = 2.0;
  double gamma = 0.0;
};

template <class F>
double norm_of(const F& f, const NormSpec& s) {
  return s.gamma == 0.0 ? lp_norm(f, s.p) : weighted_lp_norm(f, WeightSpec{s.gamma, s.p});
}

struct OpnormEstimate {
  double value = 0.0;
  std::size_t best_member = 0;
  std::size_t skipped = 0;  // members with a zero input norm
};

// max over the ensemble of ||op(member)|| / prod ||member_i||; op maps a
// list of fields to a Field or RealField.
template <class Op>
OpnormEstimate opnorm_lower_bound(Op&& op, const std::vector<std::vector<Field>>& ensemble,
                                  std::span<const NormSpec> in_norms, const NormSpec& out_norm) {
  if (ensemble.empty()) throw DomainError("opnorm_lower_bound: empty ensemble");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> ratio(ensemble.size(), nan);
  parallel_for(ensemble.size(), [&](std::size_t m) {
    const std::vector<Field>& member = ensemble[m];
    if (member.size() != in_norms.size()) throw DomainError("opnorm_lower_bound: member arity does not match norm list");
    double den = 1.0;
    for (std::size_t i = 0; i < member.size(); ++i) den *= norm_of(member[i], in_norms[i]);
    if (den == 0.0) return;
    ratio[m] = norm_of(op(member), out_norm) / den;
  });
  OpnormEstimate est;
  for (std::size_t m = 0; m < ratio.size(); ++m) {
    if (std::isnan(ratio[m])) {
      ++est.skipped;
    } else if (ratio[m] > est.value) {
      est.value = ratio[m];
      est.best_member = m;
    }
  }
  return est;
}

}  // namespace brlab
