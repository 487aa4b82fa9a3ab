#pragma once

// Experiment procedures: regression utilities, the partition and
// reproducing-formula checks, kernel decay, the counterexample family and its
// scaling scan, convergence and decay-in-j rate scans, the factorization scan
// and the exponent arithmetic the scans are compared against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "brlab/engine.hpp"
#include "brlab/errors.hpp"
#include "brlab/grid.hpp"
#include "brlab/linear.hpp"
#include "brlab/multilinear.hpp"
#include "brlab/multipliers.hpp"
#include "brlab/norms.hpp"
#include "brlab/parallel.hpp"
#include "brlab/quadrature.hpp"
#include "brlab/random.hpp"
#include "brlab/special.hpp"

namespace brlab {

// ---------------------------------------------------------------- fitting

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  double predicted = std::numeric_limits<double>::quiet_NaN();
  double tolerance = 0.0;
  bool one_sided = false;  // pass iff slope <= predicted + tolerance
  bool pass = false;

  void judge(double pred, double tol, bool upper_only = false) {
    predicted = pred;
    tolerance = tol;
    one_sided = upper_only;
    pass = one_sided ? slope <= predicted + tolerance : std::fabs(slope - predicted) <= tolerance;
  }
};

// Least-squares line y = slope x + intercept.
inline FitResult fit_line(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DomainError("fit_line: x and y lengths differ");
  if (xs.size() < 3) throw DomainError("fit_line: need at least 3 points");
  const auto m = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("fit_line: x values must not all coincide");
  FitResult r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (r.slope * xs[i] + r.intercept);
    ss += e * e;
  }
  r.residual_rms = std::sqrt(ss / m);
  return r;
}

// Line through (log x, log y).
inline FitResult loglog_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() < 3) throw DomainError("loglog_fit: need at least 3 points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0)) throw DomainError("loglog_fit: x values must be positive");
    if (i > 0 && !(xs[i] > xs[i - 1])) throw DomainError("loglog_fit: x values must be strictly increasing");
    if (!(ys[i] > 0.0)) throw DomainError("loglog_fit: y values must be positive, got " + std::to_string(ys[i]));
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  return fit_line(lx, ly);
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream for (seed, a, b).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

}  // namespace detail

// ---------------------------------------------------------------- partition

struct PartitionResult {
  double max_residual = 0.0;
  double worst_xi = 0.0;
  std::size_t points = 0;
  std::vector<double> xi;
  std::vector<double> residual;
};

// max |sum_j psi(2^-j xi) - 1| over count log-spaced xi in [lo, hi].
inline PartitionResult partition_of_unity(double lo = 1e-3, double hi = 1e3, int count = 10000) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw DomainError("partition_of_unity: need 0 < lo < hi, count >= 2");
  PartitionResult r;
  r.points = static_cast<std::size_t>(count);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i) {
    const double xi = std::exp(a + (b - a) * i / (count - 1));
    const int c = static_cast<int>(std::floor(std::log2(xi)));
    double s = 0.0;
    for (int j = c - 2; j <= c + 2; ++j) s += psi_value(std::ldexp(xi, -j));
    const double res = std::fabs(s - 1.0);
    r.xi.push_back(xi);
    r.residual.push_back(res);
    if (res > r.max_residual) {
      r.max_residual = res;
      r.worst_xi = xi;
    }
  }
  return r;
}

// ---------------------------------------------------------------- reproducing formula

struct ReproducingResult {
  double max_rel_error = 0.0;
  double worst_eta = 0.0;
  double max_quad_error = 0.0;  // quadrature error estimate relative to the left side
  bool converged = true;
};

// (1 - eta^2/R^2)^{beta+delta} against
// C R^{-2 beta - 2 delta} int_eta^R (R^2 - t^2)^{beta-1} t^{2 delta+1} (1 - eta^2/t^2)^delta dt.
// Tanh-sinh clusters nodes at both endpoints; the factors vanishing there are
// formed from the exact endpoint distance.
inline ReproducingResult check_reproducing(double beta, double delta, double R, std::span<const double> etas,
                                           std::size_t max_refinements = 15, double rel_tol = 1e-14) {
  if (!(beta > 0.0) || !(delta > -1.0)) throw DomainError("check_reproducing: need beta > 0 and delta > -1");
  if (!(R > 0.0)) throw DomainError("check_reproducing: R must be positive");
  const double C = c_beta_delta(beta, delta);
  ReproducingResult res;
  for (double eta : etas) {
    if (!(eta >= 0.0 && eta < R)) throw DomainError("check_reproducing: eta must lie in [0, R)");
    // t = eta + w u with w = R - eta; uc is 1 - u near u = 1 and -u near u = 0.
    const double w = R - eta;
    auto f = [&](double u, double uc) {
      const double below = w * (uc < 0.0 ? -uc : u);
      const double above = w * (uc > 0.0 ? uc : 1.0 - u);
      if (!(below > 0.0) || !(above > 0.0)) return 0.0;
      const double t = eta + below;
      double v = std::pow(above * (R + t), beta - 1.0) * std::pow(t, 2.0 * delta + 1.0);
      if (eta > 0.0 && delta != 0.0) v *= std::pow(below * (t + eta) / (t * t), delta);
      return v;
    };
    boost::math::quadrature::tanh_sinh<double> integrator(max_refinements);
    double err = 0.0, l1 = 0.0;
    const double integral = w * integrator.integrate(f, 0.0, 1.0, rel_tol, &err, &l1);
    err *= w;
    const double scale = C * std::pow(R, -2.0 * beta - 2.0 * delta);
    const double rhs = scale * integral;
    const double lhs = std::pow(w * (R + eta) / (R * R), beta + delta);
    const double rel = std::fabs(rhs - lhs) / lhs;
    if (rel > res.max_rel_error) {
      res.max_rel_error = rel;
      res.worst_eta = eta;
    }
    const double qe = scale * err / lhs;
    res.max_quad_error = std::max(res.max_quad_error, qe);
    if (!(qe <= 1e3 * rel_tol)) res.converged = false;
  }
  return res;
}

// ---------------------------------------------------------------- kernel decay

struct KernelEnvelope {
  std::vector<double> peak_radii;
  std::vector<double> peak_values;
  FitResult fit;
};

// |K_j| sampled on [rho_lo, rho_hi]; local maxima of the samples are fitted
// in log-log against the predicted -(n-1)/2.
inline KernelEnvelope kernel_envelope(int n, int j, double rho_lo = 4.0, double rho_hi = 256.0, int samples = 2048,
                                      double tolerance = 0.15) {
  if (samples < 16) throw DomainError("kernel_envelope: need at least 16 samples");
  std::vector<double> rho(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) rho[static_cast<std::size_t>(i)] = rho_lo + (rho_hi - rho_lo) * i / (samples - 1);
  std::vector<double> a(rho.size());
  parallel_for(rho.size(), [&](std::size_t i) {
    const double r[1] = {rho[i]};
    a[i] = std::fabs(kernel_Kj(j, n, r)[0]);
  });
  KernelEnvelope env;
  for (std::size_t i = 1; i + 1 < a.size(); ++i) {
    if (a[i] >= a[i - 1] && a[i] >= a[i + 1] && a[i] > 0.0) {
      env.peak_radii.push_back(rho[i]);
      env.peak_values.push_back(a[i]);
    }
  }
  env.fit = loglog_fit(env.peak_radii, env.peak_values);
  env.fit.judge(-0.5 * (n - 1), tolerance);
  return env;
}

// C_j = max over |x| = m 2^j (m in multiples, each refined by offsets within
// one unit) of |K_j(x)| (2^-j |x|)^4 / 2^{-j(n+1)/2}.
inline double kernel_tail_constant(int n, int j, std::span<const double> multiples, int offsets = 9) {
  std::vector<double> radii;
  for (double m : multiples) {
    for (int o = 0; o < offsets; ++o) radii.push_back(m * std::ldexp(1.0, j) + static_cast<double>(o) / offsets);
  }
  std::vector<double> vals(radii.size());
  parallel_for(radii.size(), [&](std::size_t i) {
    const double r[1] = {radii[i]};
    vals[i] = std::fabs(kernel_Kj(j, n, r)[0]) * std::pow(std::ldexp(radii[i], -j), 4.0);
  });
  return *std::max_element(vals.begin(), vals.end()) / std::exp2(-0.5 * j * (n + 1));
}

// ---------------------------------------------------------------- exponents

namespace exponents {

inline void check_p(double p, const char* what) {
  if (!(p > 1.0) || !std::isfinite(p)) throw DomainError(std::string(what) + ": exponents must lie in (1, inf)");
}

// 1/p = sum 1/p_i.
inline double output_exponent(std::span<const double> ps) {
  if (ps.empty()) throw DomainError("output_exponent: empty exponent list");
  double s = 0.0;
  for (double p : ps) {
    if (!(p > 0.0)) throw DomainError("output_exponent: exponents must be positive");
    s += 1.0 / p;
  }
  return 1.0 / s;
}

// sum_i max{n(1/p_i - 1/2), n(1/2 - 1/p_i) - 1/2, 0} + (k - 2)/2.
inline double alpha_threshold(int n, std::span<const double> ps) {
  if (n < 1) throw DomainError("alpha_threshold: n must be >= 1");
  if (ps.empty()) throw DomainError("alpha_threshold: empty exponent list");
  double s = 0.0;
  for (double p : ps) {
    check_p(p, "alpha_threshold");
    const double a = 1.0 / p - 0.5;
    s += std::max({n * a, -n * a - 0.5, 0.0});
  }
  return s + 0.5 * (static_cast<double>(ps.size()) - 2.0);
}

// Weighted threshold: sum_{I} max{(gamma_i - 1)/2, 0} + sum_{rest} n(1/p_i - 1/2) + (k - 2)/2,
// gamma_i in (0, n), p_i in (1, 2].
inline double weighted_threshold(int n, std::span<const double> gammas, std::span<const double> ps) {
  double s = 0.0;
  for (double g : gammas) {
    if (!(g > 0.0 && g < n)) throw DomainError("weighted_threshold: gamma must lie in (0, n)");
    s += std::max(0.5 * (g - 1.0), 0.0);
  }
  for (double p : ps) {
    if (!(p > 1.0 && p <= 2.0)) throw DomainError("weighted_threshold: unweighted exponents must lie in (1, 2]");
    s += n * (1.0 / p - 0.5);
  }
  const auto k = static_cast<double>(gammas.size() + ps.size());
  if (k < 1) throw DomainError("weighted_threshold: empty exponent lists");
  return s + 0.5 * (k - 2.0);
}

// Output weight exponent gamma = (p/2) sum gamma_i with 1/p = |I|/2 + sum 1/p_i.
inline double weighted_output_gamma(std::span<const double> gammas, std::span<const double> ps) {
  double inv = 0.5 * static_cast<double>(gammas.size());
  for (double p : ps) inv += 1.0 / p;
  double g = 0.0;
  for (double v : gammas) g += v;
  return 0.5 * g / inv;
}

// Counterexample index (2n - 1)/(2p) - ((n - 1)k + 1)/2.
inline double critical_index(int n, int k, double p) {
  if (n < 2) throw DomainError("critical_index: n must be >= 2");
  if (k < 1) throw DomainError("critical_index: k must be >= 1");
  if (!(p > 0.0)) throw DomainError("critical_index: p must be positive");
  return (2.0 * n - 1.0) / (2.0 * p) - 0.5 * ((n - 1.0) * k + 1.0);
}

// The p at which the counterexample index changes sign.
inline double critical_sign_change(int n, int k) { return (2.0 * n - 1.0) / ((n - 1.0) * k + 1.0); }

// Weighted L^2 factor of the dyadic square function.
inline double A_j(double gamma, int j, int n) {
  if (!(gamma >= 0.0 && gamma < n)) throw DomainError("A_j: gamma must lie in [0, n)");
  if (j < 1) throw DomainError("A_j: j must be >= 1");
  if (gamma > 1.0) return std::exp2(-0.5 * j * (2.0 - gamma));
  if (gamma == 1.0) return std::sqrt(j * std::exp2(-j));
  return std::exp2(-0.5 * j);
}

// log2-rate exponents in j (epsilon = 0 envelopes).
inline double rate_maximal_band(int n, double p) { return (n - 1) * (1.0 / p - 0.5); }
inline double rate_gtilde_psi(int n, double p) { return n * (1.0 / p - 0.5) - 0.5; }
inline double rate_bstar(int n, double p, double alpha) { return -(alpha - 0.25 - n * (1.0 / p - 0.5)); }
inline double rate_bstar_weighted(double gamma, double alpha) {
  return -(alpha - 0.25 - std::max(0.5 * (gamma - 1.0), 0.0));
}
inline double rate_g_psi_l2() { return -0.5; }

}  // namespace exponents

struct ExponentTable {
  int n = 2;
  int k = 2;
  std::vector<double> p;
  std::vector<double> gamma;
  double p_out = 0.0;
  double alpha_threshold = 0.0;    // unweighted sufficient order
  double critical_index = 0.0;     // counterexample order at p_out
  double sign_change_p = 0.0;
  double weighted_threshold = std::numeric_limits<double>::quiet_NaN();
  double weighted_gamma = std::numeric_limits<double>::quiet_NaN();
};

// gamma may be empty (unweighted) or list the weights of the first
// gamma.size() inputs; the remaining exponents are unweighted.
inline ExponentTable predict_exponents(int n, std::span<const double> p, std::span<const double> gamma = {}) {
  ExponentTable t;
  t.n = n;
  t.k = static_cast<int>(p.size());
  t.p.assign(p.begin(), p.end());
  t.gamma.assign(gamma.begin(), gamma.end());
  t.p_out = exponents::output_exponent(p);
  t.alpha_threshold = exponents::alpha_threshold(n, p);
  t.critical_index = exponents::critical_index(n, t.k, t.p_out);
  t.sign_change_p = exponents::critical_sign_change(n, t.k);
  if (!gamma.empty()) {
    if (gamma.size() > p.size()) throw DomainError("predict_exponents: more weights than inputs");
    const std::span<const double> rest = p.subspan(gamma.size());
    t.weighted_threshold = exponents::weighted_threshold(n, gamma, rest);
    t.weighted_gamma = exponents::weighted_output_gamma(gamma, rest);
  }
  return t;
}

// ---------------------------------------------------------------- counterexample

struct CounterexampleSpec {
  int n = 2;
  int k = 2;
  double epsilon = 0.05;
  std::vector<double> M_list = {16.0, 32.0, 64.0, 128.0};
  double alpha = 0.5;
  double p = 2.0;
  int nodes_transverse = 24;  // Gauss nodes per transverse coordinate
  int nodes_axial = 64;       // Gauss nodes along x_n

  void validate() const {
    if (n < 2 || n > 4) throw DomainError("CounterexampleSpec: n must lie in [2, 4]");
    if (k != 2 && k != 3) throw DomainError("CounterexampleSpec: k must be 2 or 3");
    if (!(epsilon > 0.0 && epsilon <= 0.1)) throw DomainError("CounterexampleSpec: epsilon must lie in (0, 0.1]");
    if (M_list.empty()) throw DomainError("CounterexampleSpec: empty M list");
    for (std::size_t i = 0; i < M_list.size(); ++i) {
      if (!(M_list[i] >= 16.0)) throw DomainError("CounterexampleSpec: M values must be >= 16");
      if (i > 0 && !(M_list[i] > M_list[i - 1])) throw DomainError("CounterexampleSpec: M list must be increasing");
    }
    if (!(alpha >= 0.0)) throw DomainError("CounterexampleSpec: alpha must be >= 0");
    if (!(p > 0.0)) throw DomainError("CounterexampleSpec: p must be positive");
    if (nodes_transverse < 2 || nodes_axial < 2) throw DomainError("CounterexampleSpec: need at least 2 nodes per axis");
  }

  double predicted_slope() const { return -0.5 * (n * k + 1) - alpha + 0.5 * k; }
};

// f(x) = e^{2 pi i x_n} b(|x'|/eps) b(x_n / (eps sqrt M)) with b the unit bump.
struct CounterexampleField {
  int n = 2;
  double epsilon = 0.0;
  double M = 0.0;
  double half_transverse = 0.0;  // support: |x'| <= eps
  double half_axial = 0.0;       // support: |x_n| <= eps sqrt M
  double lp_norm = 0.0;
  double scale = 0.0;            // (eps^n M^{1/2})^{1/p}

  cplx operator()(std::span<const double> x) const {
    double r2 = 0.0;
    for (int d = 0; d + 1 < n; ++d) r2 += x[static_cast<std::size_t>(d)] * x[static_cast<std::size_t>(d)];
    const double xn = x[static_cast<std::size_t>(n - 1)];
    const double v = unit_bump(std::sqrt(r2) / epsilon) * unit_bump(xn / half_axial);
    return v == 0.0 ? cplx(0.0) : v * std::polar(1.0, 2.0 * std::numbers::pi * xn);
  }
};

inline CounterexampleField counterexample_field(const CounterexampleSpec& spec, double M) {
  spec.validate();
  if (!(M > 0.0)) throw DomainError("counterexample_field: M must be positive");
  CounterexampleField f;
  f.n = spec.n;
  f.epsilon = spec.epsilon;
  f.M = M;
  f.half_transverse = spec.epsilon;
  f.half_axial = spec.epsilon * std::sqrt(M);
  const double p = spec.p;
  // Separable L^p norm: radial integral over R^{n-1} times the axial one.
  const double m = spec.n - 1;
  const double sphere = 2.0 * std::pow(std::numbers::pi, 0.5 * m) / std::tgamma(0.5 * m);
  const auto radial = quad::adaptive([&](double r) { return std::pow(unit_bump(r), p) * std::pow(r, m - 1.0); }, 0.0,
                                     1.0, 1e-13);
  const auto axial = quad::adaptive([&](double u) { return std::pow(unit_bump(u), p); }, -1.0, 1.0, 1e-13);
  const double transverse = std::pow(spec.epsilon, m) * sphere * radial.value;
  f.lp_norm = std::pow(transverse * f.half_axial * axial.value, 1.0 / p);
  f.scale = std::pow(std::pow(spec.epsilon, spec.n) * std::sqrt(M), 1.0 / p);
  return f;
}

namespace detail {

// Largest gap of a Gauss rule on [-h, h], including the end gaps.
inline double max_node_gap(int count, double h) {
  const quad::Rule& r = quad::gauss_legendre(count);
  double gap = 0.0, prev = -1.0;
  std::vector<double> x(r.nodes.begin(), r.nodes.end());
  std::sort(x.begin(), x.end());
  for (double v : x) {
    gap = std::max(gap, v - prev);
    prev = v;
  }
  return h * std::max(gap, 1.0 - prev);
}

inline int required_nodes(double h, double spacing) {
  int c = 2;
  while (max_node_gap(c, h) >= spacing) c = c < 16 ? c + 1 : c + c / 4;
  return c;
}

}  // namespace detail

struct CounterexamplePoint {
  double M = 0.0;
  double R = 0.0;
  cplx value;
  double norm = 0.0;
};

// B^{k,alpha}_R(f, ..., f)(x) at x = (1.5M e_1, 1.5M), R = sqrt(k)|x|/x_n, by
// tensor Gauss quadrature of the kernel against the k copies of f.
inline CounterexamplePoint counterexample_value(const CounterexampleSpec& spec, double M) {
  spec.validate();
  const CounterexampleField f = counterexample_field(spec, M);
  const int n = spec.n, k = spec.k;
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  x[0] = 1.5 * M;
  x[static_cast<std::size_t>(n - 1)] = 1.5 * M;
  const double xnorm = 1.5 * M * std::numbers::sqrt2;
  const double R = std::sqrt(static_cast<double>(k)) * xnorm / x[static_cast<std::size_t>(n - 1)];

  const double spacing = 1.0 / (8.0 * R);
  if (detail::max_node_gap(spec.nodes_transverse, f.half_transverse) >= spacing ||
      detail::max_node_gap(spec.nodes_axial, f.half_axial) >= spacing) {
    throw DomainError("counterexample_value: kernel oscillation under-resolved at M = " + std::to_string(M) +
                      "; need at least " + std::to_string(detail::required_nodes(f.half_transverse, spacing)) +
                      " transverse and " + std::to_string(detail::required_nodes(f.half_axial, spacing)) +
                      " axial nodes");
  }

  // Nodes of one block: squared distance to x and weighted field value.
  const quad::Rule& gt = quad::gauss_legendre(spec.nodes_transverse);
  const quad::Rule& ga = quad::gauss_legendre(spec.nodes_axial);
  std::vector<double> dist2;
  std::vector<cplx> wf;
  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  std::vector<double> z(static_cast<std::size_t>(n));
  while (true) {
    double w = 1.0;
    for (int d = 0; d < n; ++d) {
      const bool axial = d == n - 1;
      const quad::Rule& r = axial ? ga : gt;
      const double h = axial ? f.half_axial : f.half_transverse;
      z[static_cast<std::size_t>(d)] = h * r.nodes[idx[static_cast<std::size_t>(d)]];
      w *= h * r.weights[idx[static_cast<std::size_t>(d)]];
    }
    const cplx v = f(z);
    if (v != cplx(0.0)) {
      double d2 = 0.0;
      for (int d = 0; d < n; ++d) {
        const double y = x[static_cast<std::size_t>(d)] - z[static_cast<std::size_t>(d)];
        d2 += y * y;
      }
      dist2.push_back(d2);
      wf.push_back(w * v);
    }
    int d = n - 1;
    for (; d >= 0; --d) {
      const std::size_t lim = static_cast<std::size_t>(d == n - 1 ? spec.nodes_axial : spec.nodes_transverse);
      if (++idx[static_cast<std::size_t>(d)] < lim) break;
      idx[static_cast<std::size_t>(d)] = 0;
    }
    if (d < 0) break;
  }

  const std::size_t m = dist2.size();
  std::vector<cplx> partial(m, cplx(0.0));
  parallel_for(m, [&](std::size_t a) {
    cplx acc = 0.0;
    for (std::size_t b = 0; b < m; ++b) {
      if (k == 2) {
        acc += wf[b] * kernel_kbr(spec.alpha, k, n, R, std::sqrt(dist2[a] + dist2[b]));
      } else {
        cplx inner = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
          inner += wf[c] * kernel_kbr(spec.alpha, k, n, R, std::sqrt(dist2[a] + dist2[b] + dist2[c]));
        }
        acc += wf[b] * inner;
      }
    }
    partial[a] = wf[a] * acc;
  });
  CounterexamplePoint pt;
  pt.M = M;
  pt.R = R;
  for (const cplx& v : partial) pt.value += v;
  pt.norm = f.lp_norm;
  return pt;
}

struct CounterexampleScan {
  std::vector<CounterexamplePoint> points;
  FitResult fit;       // log |B| against log M
  FitResult norm_fit;  // log ||f||_p against log M, predicted 1/(2p)
  double envelope_spread = 0.0;  // max deviation factor of |B| M^{-predicted} from its geometric mean
  bool envelope_ok = false;      // every point within 2x of the envelope
};

inline CounterexampleScan counterexample_scan(const CounterexampleSpec& spec, double tolerance = 0.2) {
  spec.validate();
  if (spec.M_list.size() < 3) throw DomainError("counterexample_scan: need at least 3 values of M");
  CounterexampleScan scan;
  std::vector<double> mod, norms;
  for (double M : spec.M_list) {
    scan.points.push_back(counterexample_value(spec, M));
    mod.push_back(std::abs(scan.points.back().value));
    norms.push_back(scan.points.back().norm);
  }
  scan.fit = loglog_fit(spec.M_list, mod);
  scan.fit.judge(spec.predicted_slope(), tolerance);
  scan.norm_fit = loglog_fit(spec.M_list, norms);
  scan.norm_fit.judge(0.5 / spec.p, 0.02);
  double mean = 0.0;
  std::vector<double> env;
  for (std::size_t i = 0; i < mod.size(); ++i) {
    env.push_back(std::log(mod[i]) - spec.predicted_slope() * std::log(spec.M_list[i]));
    mean += env.back();
  }
  mean /= static_cast<double>(env.size());
  for (double e : env) scan.envelope_spread = std::max(scan.envelope_spread, std::exp(std::fabs(e - mean)));
  scan.envelope_ok = scan.envelope_spread <= 2.0;
  return scan;
}

// ---------------------------------------------------------------- convergence

struct ConvergenceScan {
  std::vector<double> R;
  std::vector<double> errors;  // sup_x |B_R(f...) - prod f|
  double band_radius = 0.0;    // |(xi_1, ..., xi_k)| over the joint spectrum
  double scale = 0.0;          // sup_x |prod f|
  FitResult fit;               // alpha > 0 only
  bool zero_beyond_band = false;  // alpha = 0: errors at round-off once R exceeds the band radius
  bool pass = false;
};

inline ConvergenceScan convergence_scan(const std::vector<Field>& fields, double alpha, std::span<const double> R_list,
                                        double tolerance = 0.1) {
  if (fields.empty()) throw DomainError("convergence_scan: no fields");
  if (R_list.size() < 3) throw DomainError("convergence_scan: need at least 3 radii");
  const GridSpec& g = fields.front().grid();
  ConvergenceScan scan;
  Field prod(g, std::vector<cplx>(g.size(), cplx(1.0)));
  double r2 = 0.0;
  for (const Field& f : fields) {
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] *= f[i];
    const SymbolEngine e(forward_dft(f));
    r2 += e.max_radius() * e.max_radius();
  }
  scan.band_radius = std::sqrt(r2) / g.L();
  for (std::size_t i = 0; i < prod.size(); ++i) scan.scale = std::max(scan.scale, std::abs(prod[i]));

  MultilinearRequest req;
  req.fields = fields;
  req.alpha = alpha;
  for (double R : R_list) {
    const Field out = apply_kbr(req, R);
    double err = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) err = std::max(err, std::abs(out[i] - prod[i]));
    scan.R.push_back(R);
    scan.errors.push_back(err);
  }
  if (alpha == 0.0) {
    bool any = false;
    scan.zero_beyond_band = true;
    for (std::size_t i = 0; i < scan.R.size(); ++i) {
      if (scan.R[i] <= scan.band_radius) continue;
      any = true;
      if (scan.errors[i] > 1e-12 * std::max(scan.scale, 1.0)) scan.zero_beyond_band = false;
    }
    scan.zero_beyond_band = scan.zero_beyond_band && any;
    scan.pass = scan.zero_beyond_band;
  } else {
    scan.fit = loglog_fit(scan.R, scan.errors);
    scan.fit.judge(-2.0, tolerance);
    scan.pass = scan.fit.pass;
  }
  return scan;
}

// ---------------------------------------------------------------- decay in j

enum class DecayFamily { g_psi, gtilde_psi, maximal_band, b_star, m_j };

inline const char* to_string(DecayFamily f) {
  switch (f) {
    case DecayFamily::g_psi: return "g_psi";
    case DecayFamily::gtilde_psi: return "gtilde_psi";
    case DecayFamily::maximal_band: return "maximal_band";
    case DecayFamily::b_star: return "b_star";
    case DecayFamily::m_j: return "m_j";
  }
  return "?";
}

struct DecaySpec {
  DecayFamily family = DecayFamily::gtilde_psi;
  int n = 2;
  double p = 4.0 / 3.0;
  int j_lo = 4;
  int j_hi = 9;
  int members = 2;
  std::uint64_t seed = 1;
  double annulus_width = 2.0;  // lattice units
  double beta = 1.5;           // b_star
  double delta = 0.25;         // b_star
  double alpha = 1.5;          // m_j
  int bstar_nodes = 8;
  int grid_factor = 8;         // N_j = grid_factor 2^j
  Budget budget;

  void validate() const {
    if (n < 1 || n > 3) throw DomainError("DecaySpec: n must lie in [1, 3]");
    if (!(p > 1.0)) throw DomainError("DecaySpec: p must exceed 1");
    if (family == DecayFamily::g_psi && p != 2.0) throw DomainError("DecaySpec: the g_psi scan is an L^2 scan");
    if (j_lo < 1 || j_hi < j_lo + 2) throw DomainError("DecaySpec: need 1 <= j_lo and at least 3 values of j");
    if (members < 1) throw DomainError("DecaySpec: need at least one ensemble member");
    if (!(annulus_width > 0.0)) throw DomainError("DecaySpec: annulus width must be positive");
    if (grid_factor < 8) throw DomainError("DecaySpec: grid_factor below 8 leaves the 2^{-j-1} shell unresolved");
  }

  double predicted() const {
    switch (family) {
      case DecayFamily::g_psi: return exponents::rate_g_psi_l2();
      case DecayFamily::gtilde_psi: return exponents::rate_gtilde_psi(n, p);
      case DecayFamily::maximal_band: return exponents::rate_maximal_band(n, p);
      case DecayFamily::b_star: return exponents::rate_bstar(n, p, beta + delta);
      case DecayFamily::m_j: return 0.0;
    }
    return 0.0;
  }
  bool two_sided() const { return family == DecayFamily::g_psi; }
};

struct DecayScan {
  std::vector<int> j;
  std::vector<int> N;
  std::vector<double> ratio;  // max over members of ||T_j f||_p / ||f||_p
  FitResult fit;              // log2 ratio against j
};

namespace detail {

// Ratio of one ensemble member at one j on the grid N = grid_factor 2^j with
// L = 1 and the annulus [N/4, N/4 + width].
inline double decay_member_ratio(const DecaySpec& s, int j, int member) {
  const int N = s.grid_factor << j;
  const int kdim = s.family == DecayFamily::m_j ? 2 : 1;
  check_budget(s.n, kdim, N, s.budget);
  const GridSpec g(s.n, 1.0, N);
  Rng rng(derive_seed(s.seed, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(member)));
  const double r0 = 0.25 * N;
  const double r1 = r0 + s.annulus_width;
  const Field f = annulus_white_noise(g, rng, r0, r1);
  const double eps = std::ldexp(1.0, -j);
  // The band psi(2^j (1 - rho^2/t^2)) meets rho in [r0, r1] for t in [t_lo, t_hi].
  const double t_lo = r0 / std::sqrt(1.0 - 0.5 * eps);
  const double t_hi = r1 / std::sqrt(1.0 - 2.0 * eps);
  const double band = r0 * eps;  // width of the band in t near r0
  const double h = band / 8.0;
  const int count = std::max(3, static_cast<int>(std::ceil((t_hi - t_lo) / h)) + 1);
  const NormSpec np{s.p, 0.0};
  switch (s.family) {
    case DecayFamily::g_psi: {
      const double ratio = std::exp(eps / 64.0);
      const auto res = g_psi_j(f, j, ScaleSet::geometric(t_lo, t_hi, ratio, ScaleKind::dt_over_t));
      return norm_of(res.values, np) / norm_of(f, np);
    }
    case DecayFamily::maximal_band: {
      const RealField m = maximal_band_piece(f, j, ScaleSet::uniform(t_lo, t_hi, count));
      return norm_of(m, np) / norm_of(f, np);
    }
    case DecayFamily::gtilde_psi: {
      const ScaleSet tset = ScaleSet::uniform_mean(1.25 * t_hi, h);
      const ScaleSet Rset = ScaleSet::uniform(t_lo, 1.25 * t_hi, 16);
      const RealField m = gtilde_psi_j(f, j, Rset, tset);
      return norm_of(m, np) / norm_of(f, np);
    }
    case DecayFamily::b_star: {
      const ScaleSet Rset = ScaleSet::uniform(t_lo, t_hi, std::min(count, 12));
      const BetaStarResult b = b_beta_delta_star(f, s.beta, s.delta, j, Rset, bstar_tset(j, s.bstar_nodes));
      return norm_of(b.values, np) / norm_of(f, np);
    }
    case DecayFamily::m_j: {
      // Bilinear: a low-frequency partner, L^{2p} x L^{2p} -> L^p.
      Rng rng2(derive_seed(s.seed, 1000 + static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(member)));
      const Field f1 = make_band_limited(g, random_modes(g, rng2, 3, 0.0, 2.0));
      MultilinearRequest req;
      req.fields = {f1, f};
      req.alpha = s.alpha;
      req.Rset = ScaleSet::uniform(t_lo, t_hi, std::min(count, 12));
      req.budget = s.budget;
      const RealField m = mj_piece(req, j, 2);
      const NormSpec in{2.0 * s.p, 0.0};
      return norm_of(m, np) / (norm_of(f1, in) * norm_of(f, in));
    }
  }
  return 0.0;
}

}  // namespace detail

inline DecayScan decay_in_j_scan(const DecaySpec& s, double tolerance = 0.1) {
  s.validate();
  DecayScan scan;
  std::vector<double> xs, ys;
  for (int j = s.j_lo; j <= s.j_hi; ++j) {
    double best = 0.0;
    for (int m = 0; m < s.members; ++m) best = std::max(best, detail::decay_member_ratio(s, j, m));
    scan.j.push_back(j);
    scan.N.push_back(s.grid_factor << j);
    scan.ratio.push_back(best);
    xs.push_back(j);
    ys.push_back(std::log2(best));
  }
  scan.fit = fit_line(xs, ys);
  scan.fit.judge(s.predicted(), s.two_sided() ? 0.05 : tolerance, !s.two_sided());
  return scan;
}

// ---------------------------------------------------------------- factorization

struct FactorizationSpec {
  int k = 2;
  int N = 0;  // 0: 256 for k = 2, 64 for k = 3
  double alpha = 1.5;
  double delta = 0.4;
  double beta = 1.1;
  int j_lo = 2;
  int j_hi = 8;
  int members = 3;
  std::uint64_t seed = 7;
  int bstar_nodes = 24;
  Budget budget;

  int grid_size() const { return N > 0 ? N : (k == 2 ? 256 : 64); }
  void validate() const {
    if (k != 2 && k != 3) throw DomainError("FactorizationSpec: k must be 2 or 3");
    if (std::fabs(delta + beta - alpha) > 1e-12) throw DomainError("FactorizationSpec: need delta + beta = alpha");
    if (!(delta >= 0.0) || !(beta > 0.0)) throw DomainError("FactorizationSpec: need delta >= 0 and beta > 0");
    if (j_lo < 1 || j_hi < j_lo) throw DomainError("FactorizationSpec: need 1 <= j_lo <= j_hi");
    if (members < 1) throw DomainError("FactorizationSpec: need at least one member");
  }
};

struct FactorizationScan {
  std::vector<int> j;
  std::vector<double> ratio;  // max over members
  double max_ratio = 0.0;
};

namespace detail {

// Ensemble member: k-1 low-frequency fields and a last field with modes in
// [N/8, N/4]; R nodes place each last-field radius inside the j-th shell.
inline MultilinearRequest factorization_member(const FactorizationSpec& s, int j, int member) {
  const int N = s.grid_size();
  const GridSpec g(1, 1.0, N);
  MultilinearRequest req;
  for (int b = 0; b < s.k; ++b) {
    Rng rng(derive_seed(s.seed, static_cast<std::uint64_t>(member), static_cast<std::uint64_t>(b)));
    const bool last = b == s.k - 1;
    req.fields.push_back(make_band_limited(g, random_modes(g, rng, last ? 8 : 4, last ? N / 8.0 : 0.0,
                                                           last ? N / 4.0 : N / 32.0)));
  }
  req.alpha = s.alpha;
  req.split = Split{s.delta, s.beta};
  req.bstar_nodes = s.bstar_nodes;
  req.budget = s.budget;
  const SymbolEngine e(forward_dft(req.fields.back()));
  std::vector<double> R;
  for (std::uint32_t r2 : e.radii_squared()) {
    if (r2 == 0) continue;
    for (double c : {0.6, 1.0, 1.6}) R.push_back(std::sqrt(static_cast<double>(r2)) / std::sqrt(1.0 - c * std::ldexp(1.0, -j)));
  }
  std::sort(R.begin(), R.end());
  R.erase(std::unique(R.begin(), R.end()), R.end());
  req.Rset.values = R;
  req.Rset.weights.assign(R.size(), 1.0);
  req.Rset.kind = ScaleKind::sup_grid;
  req.tset = ScaleSet::uniform_mean(R.back(), 0.25);
  return req;
}

}  // namespace detail

inline FactorizationScan factorization_scan(const FactorizationSpec& s) {
  s.validate();
  check_budget(1, s.k, s.grid_size(), s.budget);
  FactorizationScan scan;
  for (int j = s.j_lo; j <= s.j_hi; ++j) {
    std::vector<double> r(static_cast<std::size_t>(s.members), 0.0);
    parallel_for(r.size(), [&](std::size_t m) {
      r[m] = factorization_ratio(detail::factorization_member(s, j, static_cast<int>(m)), j);
    });
    scan.j.push_back(j);
    scan.ratio.push_back(*std::max_element(r.begin(), r.end()));
    scan.max_ratio = std::max(scan.max_ratio, scan.ratio.back());
  }
  return scan;
}

}  // namespace brlab
