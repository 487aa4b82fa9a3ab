#pragma once

// Gamma, Bessel J of real order, the radial Fourier transform on R^n and the
// closed-form Bochner-Riesz kernel.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "brlab/errors.hpp"
#include "brlab/multipliers.hpp"
#include "brlab/quadrature.hpp"

namespace brlab {

inline double gamma_fn(double x) {
  if (!(x > 0.0)) throw DomainError("gamma_fn: argument must be positive");
  return std::tgamma(x);
}

// 2 Gamma(delta + beta + 1) / (Gamma(delta + 1) Gamma(beta)).
inline double c_beta_delta(double beta, double delta) {
  if (!(beta > 0.0) || !(delta > -1.0)) throw DomainError("c_beta_delta: need beta > 0 and delta > -1");
  return 2.0 * std::exp(std::lgamma(delta + beta + 1.0) - std::lgamma(delta + 1.0) - std::lgamma(beta));
}

struct BesselEvalPolicy {
  double series_cutoff = 17.0;  // power series below max(series_cutoff, 1.5 nu)
  int series_terms = 300;
  int asymptotic_terms = 60;
};

namespace detail {

inline double bessel_series(double nu, double x, int max_terms) {
  const long double half = 0.5L * x;
  const long double q = half * half;
  long double term = std::exp(static_cast<long double>(nu) * std::log(half) - std::lgamma(static_cast<long double>(nu) + 1.0L));
  long double sum = term;
  for (int m = 1; m < max_terms; ++m) {
    term *= -q / (static_cast<long double>(m) * (m + static_cast<long double>(nu)));
    sum += term;
    if (std::fabs(term) <= 1e-21L * std::fabs(sum)) break;
  }
  return static_cast<double>(sum);
}

// Hankel expansion J_nu(x) = sqrt(2/(pi x)) (P cos chi - Q sin chi),
// truncated at its smallest term.
inline double bessel_hankel(double nu, double x, int max_terms) {
  const double mu = 4.0 * nu * nu;
  double p = 1.0;
  double q = 0.0;
  double term = 1.0;
  double last = 1.0;
  for (int k = 1; k < max_terms; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (8.0 * k * x);
    const double mag = std::fabs(term);
    if (mag > last && k > 2) break;
    last = mag;
    // k = 1, 2, 3, 4 ... contribute +Q, -P, -Q, +P, ...
    switch (k % 4) {
      case 1: q += term; break;
      case 2: p -= term; break;
      case 3: q -= term; break;
      default: p += term; break;
    }
    if (mag < 1e-17) break;
  }
  const double chi = x - (0.5 * nu + 0.25) * std::numbers::pi;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace detail

// J_nu(x) for nu >= 0, x >= 0. Small arguments use the power series in
// extended precision; large arguments use the Hankel expansion at the
// fractional order and its successor, then forward recurrence up to nu
// (stable because the order stays below the argument).
inline double bessel_j(double nu, double x, const BesselEvalPolicy& policy = {}) {
  if (!(nu >= 0.0) || !(x >= 0.0)) throw DomainError("bessel_j: order and argument must be non-negative");
  if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  const double cutoff = std::max(policy.series_cutoff, 1.5 * nu);
  if (x < cutoff) return detail::bessel_series(nu, x, policy.series_terms);

  const double base = nu - std::floor(nu);
  const int steps = static_cast<int>(std::lround(nu - base));
  double prev = detail::bessel_hankel(base, x, policy.asymptotic_terms);
  if (steps == 0) return prev;
  double cur = detail::bessel_hankel(base + 1.0, x, policy.asymptotic_terms);
  for (int s = 1; s < steps; ++s) {
    const double order = base + s;
    const double next = (2.0 * order / x) * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

// Radial Fourier transform on R^n of xi -> g(|xi|):
//   F(rho) = 2 pi rho^{-(n-2)/2} int_0^inf g(r) J_{(n-2)/2}(2 pi r rho) r^{n/2} dr,
// with the cosine transform 2 int g(r) cos(2 pi r rho) dr for n = 1 and
// the volume integral |S^{n-1}| int g(r) r^{n-1} dr at rho = 0.
struct RadialTransformResult {
  std::vector<double> values;
  double max_refinement_change = 0.0;  // relative change under panel doubling
};

namespace detail {

inline double sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

inline double radial_integrand(const RadialProfile& g, int n, double rho, double r, const BesselEvalPolicy& pol) {
  const double gr = g(r);
  if (gr == 0.0) return 0.0;
  if (rho == 0.0) return gr * std::pow(r, n - 1);
  if (n == 1) return gr * std::cos(2.0 * std::numbers::pi * r * rho);
  const double nu = 0.5 * (n - 2);
  return gr * bessel_j(nu, 2.0 * std::numbers::pi * r * rho, pol) * std::pow(r, 0.5 * n);
}

inline double radial_prefactor(int n, double rho) {
  if (rho == 0.0) return sphere_area(n);
  if (n == 1) return 2.0;
  return 2.0 * std::numbers::pi * std::pow(rho, -0.5 * (n - 2));
}

// Panels: profile breakpoints, each gap split into pieces of at most
// 1/(2 rho) so every panel sees at most half an oscillation.
inline std::vector<double> oscillation_panels(const RadialProfile& g, double rho, int refine) {
  std::vector<double> out;
  auto br = g.breakpoints();
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    const double a = br[i];
    const double b = br[i + 1];
    const double width = b - a;
    int pieces = 1;
    if (rho > 0.0) pieces = std::max(1, static_cast<int>(std::ceil(width * rho * 2.0)));
    pieces *= refine;
    for (int p = 0; p < pieces; ++p) out.push_back(a + width * p / pieces);
  }
  if (!br.empty()) out.push_back(br.back());
  return out;
}

}  // namespace detail

inline RadialTransformResult radial_fourier(const RadialProfile& profile, int n, std::span<const double> rho_samples,
                                            const BesselEvalPolicy& policy = {}) {
  if (n < 1) throw DomainError("radial_fourier: n must be >= 1");
  if (!std::isfinite(profile.support_hi())) throw DomainError("radial_fourier: profile must be compactly supported");
  RadialTransformResult out;
  out.values.reserve(rho_samples.size());
  for (double rho : rho_samples) {
    if (!(rho >= 0.0)) throw DomainError("radial_fourier: radii must be non-negative");
    auto f = [&](double r) { return detail::radial_integrand(profile, n, rho, r, policy); };
    const auto coarse_breaks = detail::oscillation_panels(profile, rho, 1);
    const auto fine_breaks = detail::oscillation_panels(profile, rho, 2);
    const double coarse = quad::adaptive_panels(f, coarse_breaks, 1e-12).value;
    const double fine = quad::adaptive_panels(f, fine_breaks, 1e-12).value;
    const double pre = detail::radial_prefactor(n, rho);
    out.values.push_back(pre * fine);
    const double scale = std::max(std::fabs(fine), 1e-300);
    out.max_refinement_change = std::max(out.max_refinement_change, std::fabs(fine - coarse) / scale);
  }
  return out;
}

// Gamma(alpha + 1) pi^-alpha: int_{R^m} (1 - |xi|^2)_+^alpha e^{2 pi i x.xi} dxi
// = C J_{m/2+alpha}(2 pi |x|) / |x|^{m/2+alpha}.
inline double br_kernel_constant(double alpha) { return std::tgamma(alpha + 1.0) * std::pow(std::numbers::pi, -alpha); }

// K^alpha_{k,R} at distance |(z_1, ..., z_k)| = dist in R^{nk}.
inline double kernel_kbr(double alpha, int k, int n, double R, double dist, const BesselEvalPolicy& policy = {}) {
  if (!(alpha >= 0.0) || k < 1 || n < 1 || !(R > 0.0) || !(dist >= 0.0)) {
    throw DomainError("kernel_kbr: need alpha >= 0, k, n >= 1, R > 0, dist >= 0");
  }
  const int m = n * k;
  const double nu = 0.5 * m + alpha;
  const double c = br_kernel_constant(alpha);
  const double rm = std::pow(R, m);
  if (dist == 0.0) return c * rm * std::pow(std::numbers::pi, nu) / std::tgamma(nu + 1.0);
  const double u = R * dist;
  return c * rm * bessel_j(nu, 2.0 * std::numbers::pi * u, policy) / std::pow(u, nu);
}

}  // namespace brlab
