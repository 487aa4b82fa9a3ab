#pragma once

// k-linear Bochner-Riesz means through the tensor spectrum on the product
// grid and diagonal restriction, their maximal and square-function variants,
// the dyadic pieces M_j, the auxiliary operator B^{beta,delta}_{j,*} and the
// pointwise factorization ratio.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "brlab/engine.hpp"
#include "brlab/errors.hpp"
#include "brlab/grid.hpp"
#include "brlab/linear.hpp"
#include "brlab/multipliers.hpp"

namespace brlab {

struct Split {
  double delta = 0.0;
  double beta = 0.0;
};

struct MultilinearRequest {
  std::vector<Field> fields;
  double alpha = 0.0;
  ScaleSet Rset;
  ScaleSet tset;               // mean_on_0R nodes for G-tilde
  std::optional<Split> split;  // alpha = delta + beta
  int bstar_nodes = 24;        // Gauss nodes in t for B^{beta,delta}_{j,*}
  Budget budget;

  int k() const noexcept { return static_cast<int>(fields.size()); }

  void validate() const {
    if (fields.empty()) throw DomainError("MultilinearRequest: need at least one field");
    for (const Field& f : fields) {
      if (!(f.grid() == fields.front().grid())) throw DomainError("MultilinearRequest: fields live on different grids");
    }
    if (!(alpha >= 0.0)) throw DomainError("MultilinearRequest: alpha must be >= 0");
    if (split) {
      if (!(split->beta > 0.0) || !(split->delta > -1.0)) {
        throw DomainError("MultilinearRequest: split needs beta > 0 and delta > -1");
      }
      if (std::fabs(split->beta + split->delta - alpha) > 1e-12 * std::max(1.0, alpha)) {
        throw DomainError("MultilinearRequest: split must satisfy delta + beta = alpha");
      }
    }
  }
};

namespace detail {

inline SymbolEngine product_engine(const std::vector<Field>& fields, const Budget& budget) {
  const GridSpec& g = fields.front().grid();
  const int k = static_cast<int>(fields.size());
  check_budget(g.n(), k, g.N(), budget);
  if (k == 1) return SymbolEngine(forward_dft(fields.front()));
  std::vector<Spectrum> parts;
  parts.reserve(fields.size());
  for (const Field& f : fields) parts.push_back(forward_dft(f));
  return SymbolEngine(tensor_spectrum(parts), k);
}

inline SymbolEngine product_engine(const MultilinearRequest& req) {
  req.validate();
  return product_engine(req.fields, req.budget);
}

// m^alpha_j(xi / R) on the product grid.
inline ScaledSymbol mj_family(double alpha, int j, int k, int block, const RadialProfile& bump) {
  const MultilinearSymbol m = m_alpha_j_symbol(alpha, j, k, block, bump);
  ScaledSymbol s;
  s.blocks = [m, k](std::span<const double> r2, double R) {
    double scaled[kMaxDim];
    for (int b = 0; b < k; ++b) scaled[b] = r2[static_cast<std::size_t>(b)] / (R * R);
    return m(std::span<const double>(scaled, static_cast<std::size_t>(k)));
  };
  return s;
}

}  // namespace detail

inline Field apply_kbr(const MultilinearRequest& req, double R) {
  if (!(R > 0.0)) throw DomainError("apply_kbr: R must be positive");
  const SymbolEngine e = detail::product_engine(req);
  Field big(e.grid());
  detail::apply_scaled(e, br_family(req.alpha), R, big, "apply_kbr");
  return e.diagonal(big);
}

inline RealField maximal_kbr(const MultilinearRequest& req) {
  const SymbolEngine e = detail::product_engine(req);
  return detail::sup_modulus(e, br_family(req.alpha), req.Rset, "maximal_kbr");
}

inline RealField gtilde_k(const MultilinearRequest& req) {
  const SymbolEngine e = detail::product_engine(req);
  return detail::running_mean_sup(e, br_family(req.alpha), req.Rset, req.tset, "gtilde_k");
}

// sup over Rset of |[m^alpha_j(xi/R) prod fhat]^vee| on the diagonal.
inline RealField mj_piece(const MultilinearRequest& req, int j, int block, const RadialProfile& bump = bump_psi()) {
  const SymbolEngine e = detail::product_engine(req);
  return detail::sup_modulus(e, detail::mj_family(req.alpha, j, req.k(), block, bump), req.Rset, "mj_piece");
}

// The signed piece at one R (j = 0 is the residual m^alpha psi(1 - |xi_block|^2)).
inline Field mj_piece_at(const MultilinearRequest& req, int j, int block, double R, const RadialProfile& bump = bump_psi()) {
  const SymbolEngine e = detail::product_engine(req);
  Field big(e.grid());
  detail::apply_scaled(e, detail::mj_family(req.alpha, j, req.k(), block, bump), R, big, "mj_piece_at");
  return e.diagonal(big);
}

struct BetaPieceResult {
  Field field;
  std::size_t near_singular = 0;  // lattice samples with 0 < base < 1e-14 under a nonzero bump
};

namespace detail {

inline void check_beta_piece(double beta, int j, double t) {
  if (!(beta > 0.0)) throw DomainError("b_beta_j_t_R: beta must be positive");
  if (j < 1) throw DomainError("b_beta_j_t_R: j must be >= 1");
  const double t_top = std::exp2(-0.5 * (j - 1));
  if (!(t >= 0.0 && t < t_top)) {
    throw DomainError("b_beta_j_t_R: t = " + std::to_string(t) + " outside [0, 2^{-(j-1)/2}) = [0, " +
                      std::to_string(t_top) + ")");
  }
}

// (1 - t^2 - |eta|^2/R^2)_+^{beta-1} bump(2^j (1 - |eta|^2/R^2)) applied at
// one (t, R). Counts near-singular samples into *near.
inline bool apply_beta_piece(const SymbolEngine& e, double beta, int j, double t, double R, const RadialProfile& bump,
                             Field& out, std::size_t* near) {
  require_nyquist_safe(e.grid(), R, "b_beta_j_t_R");
  const double inv = 1.0 / (e.grid().L() * e.grid().L() * R * R);
  const double scale = std::ldexp(1.0, j);
  const double L = e.grid().L();
  return e.apply_radial(
      [&](double r2) {
        const double s = r2 * inv;
        const double b = bump(scale * (1.0 - s));
        if (b == 0.0) return 0.0;
        const double base = 1.0 - t * t - s;
        if (base <= 0.0) return 0.0;
        if (base < 1e-14 && near) ++*near;
        const double v = (beta == 1.0 ? 1.0 : std::pow(base, beta - 1.0)) * b;
        if (!std::isfinite(v)) {
          std::ostringstream os;
          os << "b_beta_j_t_R: symbol not finite at |xi| = " << std::sqrt(r2) / L << " (t = " << t << ", R = " << R << ")";
          throw DomainError(os.str());
        }
        return v;
      },
      out);
}

}  // namespace detail

inline BetaPieceResult b_beta_j_t_R(const Field& f, double beta, int j, double t, double R,
                                    const RadialProfile& bump = bump_psi()) {
  detail::check_beta_piece(beta, j, t);
  if (!(R > 0.0)) throw DomainError("b_beta_j_t_R: R must be positive");
  const SymbolEngine e(forward_dft(f));
  BetaPieceResult res{Field(f.grid()), 0};
  detail::apply_beta_piece(e, beta, j, t, R, bump, res.field, &res.near_singular);
  return res;
}

struct BetaStarResult {
  RealField values;
  std::size_t near_singular = 0;
};

// sup over R in Rset of (int_0^{2^{-(j-1)/2}} |B^beta_{j,t,R} f|^2 t^{4 delta + 2} dt)^(1/2);
// tset must be a dt rule inside that interval, the t-weight is folded into
// its weights.
inline BetaStarResult b_beta_delta_star(const Field& f, double beta, double delta, int j, const ScaleSet& Rset,
                                        const ScaleSet& tset, const RadialProfile& bump = bump_psi()) {
  if (!(delta > -1.0)) throw DomainError("b_beta_delta_star: delta must be > -1");
  detail::check_kind(Rset, ScaleKind::sup_grid, "b_beta_delta_star");
  detail::check_kind(tset, ScaleKind::dt, "b_beta_delta_star");
  for (double t : tset.values) detail::check_beta_piece(beta, j, t);
  require_nyquist_safe(f.grid(), Rset.max(), "b_beta_delta_star");
  const SymbolEngine e(forward_dft(f));
  std::vector<double> w(tset.size());
  for (std::size_t i = 0; i < tset.size(); ++i) w[i] = tset.weights[i] * std::pow(tset.values[i], 4.0 * delta + 2.0);
  BetaStarResult res{RealField(f.grid()), 0};
  std::vector<double> acc(f.grid().size());
  Field out(f.grid());
  for (double R : Rset.values) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t i = 0; i < tset.size(); ++i) {
      if (!detail::apply_beta_piece(e, beta, j, tset.values[i], R, bump, out, &res.near_singular)) continue;
      for (std::size_t x = 0; x < acc.size(); ++x) acc[x] += w[i] * std::norm(out[x]);
    }
    for (std::size_t x = 0; x < acc.size(); ++x) res.values.values[x] = std::max(res.values.values[x], std::sqrt(acc[x]));
  }
  return res;
}

// Gauss rule on (0, 2^{-(j-1)/2}) for b_beta_delta_star.
inline ScaleSet bstar_tset(int j, int count) { return ScaleSet::gauss_dt(0.0, std::exp2(-0.5 * (j - 1)), count); }

// sup_x M_j(f...)(x) / [2^{-j/4} G-tilde^{k-1,delta}(f_1..f_{k-1})(x) B^{beta,delta}_{j,*}(f_k)(x)]
// with the psi factor on the last block; 0/0 counts as 0 and pos/0 as +inf.
inline double factorization_ratio(const MultilinearRequest& req, int j, const RadialProfile& bump = bump_psi()) {
  req.validate();
  if (!req.split) throw DomainError("factorization_ratio: request needs a (delta, beta) split");
  const int k = req.k();
  if (k < 2) throw DomainError("factorization_ratio: need k >= 2");
  const RealField num = mj_piece(req, j, k, bump);

  MultilinearRequest head = req;
  head.fields.assign(req.fields.begin(), req.fields.end() - 1);
  head.alpha = req.split->delta;
  head.split.reset();
  if (!(head.alpha >= 0.0)) throw DomainError("factorization_ratio: G-tilde needs delta >= 0 on the grid");
  const RealField g = gtilde_k(head);
  const BetaStarResult b = b_beta_delta_star(req.fields.back(), req.split->beta, req.split->delta, j, req.Rset,
                                             bstar_tset(j, req.bstar_nodes), bump);
  const double pref = std::exp2(-0.25 * j);
  double worst = 0.0;
  for (std::size_t x = 0; x < num.values.size(); ++x) {
    const double den = pref * g.values[x] * b.values.values[x];
    const double n = num.values[x];
    if (n == 0.0) continue;
    if (den == 0.0) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, n / den);
  }
  return worst;
}

}  // namespace brlab
