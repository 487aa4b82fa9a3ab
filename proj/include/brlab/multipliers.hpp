#pragma once

// Radial symbol profiles r -> m(r) and their dyadic decompositions near the
// unit sphere.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "brlab/errors.hpp"
#include "brlab/quadrature.hpp"

namespace brlab {

// A closed-form radial profile. Evaluation is exactly zero outside [lo, hi].
class RadialProfile {
 public:
  RadialProfile(std::function<double(double)> eval, double lo, double hi, std::string note,
                std::vector<double> breakpoints = {})
      : eval_(std::move(eval)), lo_(lo), hi_(hi), note_(std::move(note)), breaks_(std::move(breakpoints)) {
    if (!(lo >= 0.0) || !(hi >= lo)) throw DomainError("RadialProfile: support must be [lo, hi] with 0 <= lo <= hi");
    breaks_.push_back(lo);
    breaks_.push_back(hi);
    std::erase_if(breaks_, [&](double b) { return b < lo_ || b > hi_; });
    std::sort(breaks_.begin(), breaks_.end());
    breaks_.erase(std::unique(breaks_.begin(), breaks_.end()), breaks_.end());
  }

  double operator()(double r) const {
    if (!(r >= lo_ && r <= hi_)) return 0.0;
    return eval_(r);
  }

  double support_lo() const noexcept { return lo_; }
  double support_hi() const noexcept { return hi_; }
  const std::string& note() const noexcept { return note_; }

  // Support endpoints plus interior points where the profile is not smooth.
  std::span<const double> breakpoints() const noexcept { return breaks_; }

 private:
  std::function<double(double)> eval_;
  double lo_;
  double hi_;
  std::string note_;
  std::vector<double> breaks_;
};

namespace detail {

// Normalized primitive of the mollifier exp(-1/(1-u^2)) on [-1, 1]:
// H(-1) = 0, H(1) = 1, H(s) + H(-s) = 1.
class MollifierPrimitive {
 public:
  static const MollifierPrimitive& instance() {
    static const MollifierPrimitive m;
    return m;
  }

  double operator()(double s) const {
    if (s <= -1.0) return 0.0;
    if (s >= 1.0) return 1.0;
    if (s > 0.0) return 1.0 - raw(-s) / total_;
    return raw(s) / total_;
  }

 private:
  MollifierPrimitive() : total_(2.0 * raw(0.0)) {}

  static double density(double u) {
    const double d = 1.0 - u * u;
    return d > 0.0 ? std::exp(-1.0 / d) : 0.0;
  }

  // Integral of the density over [-1, s] for s <= 0, by composite
  // Gauss-Legendre; the density is flat to all orders at -1.
  static double raw(double s) {
    constexpr int kPanels = 16;
    constexpr int kOrder = 20;
    const double width = (s + 1.0) / kPanels;
    double sum = 0.0;
    for (int p = 0; p < kPanels; ++p) {
      const double a = -1.0 + p * width;
      sum += quad::fixed_gauss(density, a, a + width, kOrder);
    }
    return sum;
  }

  double total_;
};

}  // namespace detail

// Smooth cutoff: 1 on [-1, 1], 0 outside (-2, 2).
inline double smooth_cutoff(double t) {
  const double a = std::fabs(t);
  if (a <= 1.0) return 1.0;
  if (a >= 2.0) return 0.0;
  return detail::MollifierPrimitive::instance()(3.0 - 2.0 * a);
}

// psi(t) = chi(t) - chi(2t) for t > 0: smooth, supported in (1/2, 2), and
// sum_j psi(2^-j t) = 1 for every t > 0 by telescoping.
inline double psi_value(double t) {
  if (!(t > 0.5 && t < 2.0)) return 0.0;
  return smooth_cutoff(t) - smooth_cutoff(2.0 * t);
}

inline RadialProfile bump_psi() {
  return RadialProfile(psi_value, 0.5, 2.0, "psi = chi(t) - chi(2t), mollifier-built", {1.0});
}

// Compactly supported bump on [-1, 1], value 1 at 0.
inline double unit_bump(double u) {
  const double d = 1.0 - u * u;
  return d > 0.0 ? std::exp(1.0 - 1.0 / d) : 0.0;
}

inline RadialProfile br_profile(double alpha) {
  if (!(alpha >= 0.0)) throw DomainError("br_profile: alpha must be >= 0");
  auto eval = [alpha](double r) {
    if (r >= 1.0) return 0.0;
    return alpha == 0.0 ? 1.0 : std::pow(1.0 - r * r, alpha);
  };
  return RadialProfile(eval, 0.0, 1.0, "m^alpha = (1 - r^2)_+^alpha");
}

inline RadialProfile sigma_profile(double alpha) {
  if (!(alpha >= 0.0)) throw DomainError("sigma_profile: alpha must be >= 0");
  auto eval = [alpha](double r) {
    if (r >= 1.0) return 0.0;
    return r * r * (alpha == 0.0 ? 1.0 : std::pow(1.0 - r * r, alpha));
  };
  return RadialProfile(eval, 0.0, 1.0, "sigma^alpha = r^2 (1 - r^2)_+^alpha");
}

// r -> bump(2^j (1 - r^2)). For a bump supported in (1/2, 2) this vanishes
// unless 1 - r^2 lies in (2^{-j-1}, 2^{-j+1}).
inline RadialProfile dyadic_shell(int j, const RadialProfile& bump) {
  const double scale = std::ldexp(1.0, j);
  const double s_lo = bump.support_lo() / scale;  // smallest admissible 1 - r^2
  const double s_hi = bump.support_hi() / scale;
  const double r_hi = s_lo < 1.0 ? std::sqrt(1.0 - s_lo) : 0.0;
  const double r_lo = s_hi < 1.0 ? std::sqrt(1.0 - s_hi) : 0.0;
  std::vector<double> breaks;
  for (double b : bump.breakpoints()) {
    const double s = b / scale;
    if (s > 0.0 && s < 1.0) breaks.push_back(std::sqrt(1.0 - s));
  }
  auto eval = [scale, bump](double r) { return bump(scale * (1.0 - r * r)); };
  return RadialProfile(eval, r_lo, r_hi, "bump(2^j (1 - r^2))", std::move(breaks));
}

enum class PieceKind { sigma_j, m_last_block_j, zero_piece };

struct DyadicPiece {
  RadialProfile profile;
  int j;
  PieceKind kind;
};

// sigma^alpha_j for j >= 1; the j = 0 piece is sigma^alpha * psi(1 - r^2),
// which is supported in the ball of radius 1/sqrt(2).
inline DyadicPiece dyadic_sigma_piece(double alpha, int j, const RadialProfile& bump = bump_psi()) {
  if (j < 0) throw DomainError("dyadic_sigma_piece: j must be >= 0");
  const RadialProfile sigma = sigma_profile(alpha);
  const RadialProfile shell = dyadic_shell(j, bump);
  std::vector<double> breaks(shell.breakpoints().begin(), shell.breakpoints().end());
  auto eval = [sigma, shell](double r) { return sigma(r) * shell(r); };
  return DyadicPiece{RadialProfile(eval, shell.support_lo(), shell.support_hi(), "sigma^alpha_j", std::move(breaks)), j,
                     j == 0 ? PieceKind::zero_piece : PieceKind::sigma_j};
}

// k-linear symbol evaluated from the squared block radii |xi_1|^2 .. |xi_k|^2.
class MultilinearSymbol {
 public:
  MultilinearSymbol(std::function<double(std::span<const double>)> eval, int k, std::string note)
      : eval_(std::move(eval)), k_(k), note_(std::move(note)) {}

  double operator()(std::span<const double> block_r2) const { return eval_(block_r2); }
  int k() const noexcept { return k_; }
  const std::string& note() const noexcept { return note_; }

 private:
  std::function<double(std::span<const double>)> eval_;
  int k_;
  std::string note_;
};

inline double br_symbol_value(double alpha, double r2) {
  if (r2 >= 1.0) return 0.0;
  return alpha == 0.0 ? 1.0 : std::pow(1.0 - r2, alpha);
}

// (1 - |xi|^2)_+^alpha psi(2^j (1 - |xi_block|^2)) for j >= 1 (block is
// 1-based); j = 0 gives the residual m^alpha psi(1 - |xi_block|^2), so that
// the pieces j = 0 .. J sum to m^alpha wherever 1 - |xi_block|^2 > 2^-J.
inline MultilinearSymbol m_alpha_j_symbol(double alpha, int j, int k, int block, const RadialProfile& bump = bump_psi()) {
  if (!(alpha >= 0.0)) throw DomainError("m_alpha_j_symbol: alpha must be >= 0");
  if (k < 1) throw DomainError("m_alpha_j_symbol: k must be >= 1");
  if (block < 1 || block > k) {
    throw DomainError("m_alpha_j_symbol: block " + std::to_string(block) + " outside [1, " + std::to_string(k) + "]");
  }
  if (j < 0) throw DomainError("m_alpha_j_symbol: j must be >= 0");
  const double scale = std::ldexp(1.0, j);
  auto eval = [alpha, scale, k, block, bump](std::span<const double> r2) {
    double total = 0.0;
    for (int b = 0; b < k; ++b) total += r2[static_cast<std::size_t>(b)];
    const double base = br_symbol_value(alpha, total);
    if (base == 0.0) return 0.0;
    return base * bump(scale * (1.0 - r2[static_cast<std::size_t>(block - 1)]));
  };
  return MultilinearSymbol(eval, k, "m^alpha_j");
}

}  // namespace brlab
