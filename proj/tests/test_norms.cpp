#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "brlab/linear.hpp"
#include "brlab/norms.hpp"
#include "brlab/random.hpp"

using namespace brlab;

namespace {

Field constant(const GridSpec& g, cplx c) { return Field(g, std::vector<cplx>(g.size(), c)); }

Field random_field(const GridSpec& g, std::uint64_t seed, int count, double r_lo, double r_hi) {
  Rng rng(seed);
  return make_band_limited(g, random_modes(g, rng, count, r_lo, r_hi));
}

// Field with independent complex Gaussian samples on {|x| < radius}.
Field localized_noise(const GridSpec& g, std::uint64_t seed, double radius) {
  Rng rng(seed);
  Field f(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const std::vector<double> x = f.point(i);
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    f[i] = rng.complex_normal();
    if (r2 >= radius * radius) f[i] = 0.0;
  }
  return f;
}

}  // namespace

TEST(LpNorm, ConstantAndHomogeneity) {
  for (int n : {1, 2, 3}) {
    const GridSpec g(n, 3.0, 16);
    for (double p : {0.5, 1.0, 2.0, 4.5}) {
      EXPECT_NEAR(lp_norm(constant(g, 1.0), p), std::pow(3.0, n / p), 1e-12 * std::pow(3.0, n / p));
      const Field f = random_field(g, 3, 5, 0.0, 6.0);
      EXPECT_NEAR(lp_norm(cplx(-2.0, 1.5) * f, p), 2.5 * lp_norm(f, p), 1e-12 * lp_norm(f, p));
    }
  }
  EXPECT_THROW(lp_norm(constant(GridSpec(1, 1.0, 8), 1.0), 0.0), DomainError);
}

TEST(LpNorm, ParsevalAndTriangle) {
  const GridSpec g(2, 2.0, 32);
  const Field f = random_field(g, 5, 30, 0.0, 14.0);
  double s = 0.0;
  for (const cplx& c : forward_dft(f).coeffs()) s += std::norm(c);
  EXPECT_NEAR(std::pow(lp_norm(f, 2.0), 2), 4.0 * s, 1e-12 * 4.0 * s);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Field a = random_field(g, 100 + seed, 10, 0.0, 14.0);
    const Field b = random_field(g, 200 + seed, 10, 0.0, 14.0);
    for (double p : {1.0, 1.5, 3.0}) EXPECT_LE(lp_norm(a + b, p), (lp_norm(a, p) + lp_norm(b, p)) * (1.0 + 1e-14));
  }
}

TEST(WeightedNorm, GammaZeroIsLpExactly) {
  const GridSpec g(2, 2.0, 32);
  const Field f = random_field(g, 6, 10, 0.0, 14.0);
  for (double p : {1.0, 2.0, 3.3}) EXPECT_EQ(weighted_lp_norm(f, {0.0, p}), lp_norm(f, p));
  EXPECT_THROW(weighted_lp_norm(f, {2.0, 2.0}), DomainError);
  EXPECT_THROW(weighted_lp_norm(f, {-0.1, 2.0}), DomainError);
}

TEST(WeightedNorm, ConstantFieldConvergesAtHalfOrder) {
  const double L = 2.0;
  const double exact = 4.0 * std::sqrt(0.5 * L);
  std::vector<double> err;
  for (int N : {64, 256, 1024, 4096}) {
    const GridSpec g(1, L, N);
    const double v = std::pow(weighted_lp_norm(constant(g, 1.0), {0.5, 2.0}), 2);
    err.push_back(std::fabs(v - exact));
    EXPECT_LT(err.back(), 2.0 * std::sqrt(g.h()));
  }
  for (std::size_t i = 0; i + 1 < err.size(); ++i) {
    const double rate = err[i] / err[i + 1];
    EXPECT_GT(rate, 1.5);
    EXPECT_LT(rate, 2.5);
  }
}

TEST(WeightedNorm, MonotoneInGammaForUnitBallSupport) {
  for (int n : {1, 2, 3}) {
    const GridSpec g(n, 4.0, 16);
    const Field f = localized_noise(g, 7, 1.0);
    double prev = 0.0;
    for (double gamma = 0.0; gamma < n; gamma += 0.25) {
      const double v = weighted_lp_norm(f, {gamma, 2.0});
      EXPECT_GE(v, prev) << n << " " << gamma;
      prev = v;
    }
  }
}

// The unit cube minus [0,1/2]^n splits into 2^n - 1 cubes of side 1/2
// away from the origin; self-similarity of |u|^-gamma sums the shells
// geometrically.
static double shell_oracle(int n, double gamma) {
  const quad::Rule r = quad::gauss_legendre(24, 0.0, 0.5);
  double shell = 0.0;
  for (int corner = 1; corner < (1 << n); ++corner) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
    while (true) {
      double r2 = 0.0, w = 1.0;
      for (int d = 0; d < n; ++d) {
        const double u = r.nodes[idx[static_cast<std::size_t>(d)]] + ((corner >> d) & 1 ? 0.5 : 0.0);
        r2 += u * u;
        w *= r.weights[idx[static_cast<std::size_t>(d)]];
      }
      shell += w * std::pow(r2, -0.5 * gamma);
      int d = n - 1;
      while (d >= 0 && ++idx[static_cast<std::size_t>(d)] == r.nodes.size()) idx[static_cast<std::size_t>(d--)] = 0;
      if (d < 0) break;
    }
  }
  return shell / (1.0 - std::exp2(-(n - gamma)));
}

TEST(WeightedNorm, OriginCellMeanAgainstShellSum) {
  for (int n : {2, 3}) {
    for (double gamma : {0.5, 1.0, 1.7}) {
      const double want = shell_oracle(n, gamma);
      EXPECT_NEAR(detail::unit_cube_mean(n, gamma), want, 1e-10 * want) << n << " " << gamma;
    }
  }
  EXPECT_NEAR(detail::unit_cube_mean(3, 2.5), shell_oracle(3, 2.5), 1e-10 * shell_oracle(3, 2.5));
  EXPECT_NEAR(detail::unit_cube_mean(2, 1.0), 2.0 * std::asinh(1.0), 1e-12);
  EXPECT_EQ(detail::unit_cube_mean(3, 0.0), 1.0);
}

TEST(SplitField, ReconstructionAndSupports) {
  const GridSpec g(2, 6.0, 32);
  const Field inside = localized_noise(g, 8, 0.9);
  const SplitResult a = split_field(inside, 4.0, 1.2);
  for (std::size_t i = 0; i < a.outer.size(); ++i) EXPECT_EQ(a.outer[i], cplx(0.0));
  EXPECT_EQ(a.outer_weighted_l2, 0.0);

  const Field one = constant(g, 1.0);
  const SplitResult b = split_field(one, 4.0, 1.2);
  EXPECT_TRUE(std::isfinite(b.inner_l2) && std::isfinite(b.outer_weighted_l2));
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(b.inner[i] + b.outer[i], one[i]);
    EXPECT_TRUE(b.inner[i] == cplx(0.0) || b.outer[i] == cplx(0.0));
  }
  EXPECT_THROW(split_field(one, 4.0, 1.0), DomainError);
}

TEST(SplitField, HolderRatioBoundedOverEnsemble) {
  const GridSpec g(2, 8.0, 64);
  // Discrete Hoelder with exponents q/2 and q/(q-2) = 2 on the weight.
  double w2 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = detail::distance_to_origin(g, i);
    if (r > 1.0) w2 += std::pow(r, -2.0 * 1.2);
  }
  const double bound = std::sqrt(std::sqrt(w2 * g.h() * g.h()));
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Field f = random_field(g, 300 + seed, 12, 0.0, 30.0);
    worst = std::max(worst, split_field(f, 4.0, 1.2).holder_ratio);
  }
  EXPECT_GT(worst, 0.0);
  EXPECT_LE(worst, bound * (1.0 + 1e-12));
}

TEST(OpnormLowerBound, IdentityDiagonalAndSkips) {
  const GridSpec g(1, 1.0, 64);
  std::vector<std::vector<Field>> ensemble;
  for (std::uint64_t seed = 0; seed < 8; ++seed) ensemble.push_back({random_field(g, 400 + seed, 6, 0.0, 20.0)});
  ensemble.push_back({Field(g)});
  const std::vector<NormSpec> in = {{2.0, 0.0}};
  const auto id = opnorm_lower_bound([](const std::vector<Field>& m) { return m[0]; }, ensemble, in, {2.0, 0.0});
  EXPECT_NEAR(id.value, 1.0, 1e-14);
  EXPECT_EQ(id.skipped, 1u);

  std::vector<std::vector<Field>> modes;
  for (int xi : {2, 5, 9}) modes.push_back({make_band_limited(g, std::vector<Mode>{{{xi}, cplx(1.0, 1.0)}})});
  const double R = 10.0, alpha = 1.0;
  const auto br = opnorm_lower_bound([&](const std::vector<Field>& m) { return apply_br(m[0], alpha, R); }, modes, in,
                                     {2.0, 0.0});
  EXPECT_NEAR(br.value, br_symbol_value(alpha, 4.0 / 100.0), 1e-12);
  EXPECT_EQ(br.best_member, 0u);
  EXPECT_LE(br.value, 1.0);
}

TEST(OpnormLowerBound, SquareFunctionAgainstQuadratureNorm) {
  const GridSpec g(2, 1.0, 64);
  std::vector<std::vector<Field>> ensemble;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Rng rng(500 + seed);
    ensemble.push_back({annulus_white_noise(g, rng, 3.0, 20.0)});
  }
  const int j = 3;
  const ScaleSet t = ScaleSet::geometric(2.5, 31.0, std::exp2(1.0 / 256), ScaleKind::dt_over_t);
  const auto est = opnorm_lower_bound([&](const std::vector<Field>& m) { return g_psi_j(m[0], j, t).values; },
                                      ensemble, std::vector<NormSpec>{{2.0, 0.0}}, {2.0, 0.0});
  const double op = l2_opnorm_g_psi_j(j);
  EXPECT_LE(est.value, op * (1.0 + 1e-6));
  EXPECT_GE(est.value, 0.9 * op);
}
