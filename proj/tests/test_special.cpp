#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "brlab/special.hpp"

using namespace brlab;

TEST(Gamma, KnownValues) {
  EXPECT_NEAR(gamma_fn(1.0), 1.0, 1e-15);
  EXPECT_NEAR(gamma_fn(0.5) / std::sqrt(std::numbers::pi), 1.0, 1e-14);
  EXPECT_NEAR(gamma_fn(6.0), 120.0, 1e-12);
  EXPECT_THROW(gamma_fn(0.0), DomainError);
  EXPECT_THROW(gamma_fn(-1.5), DomainError);
}

TEST(Gamma, RecurrenceOnRange) {
  for (double x = 0.1; x < 49.0; x += 0.37) EXPECT_NEAR(gamma_fn(x + 1.0) / (x * gamma_fn(x)), 1.0, 1e-12);
}

TEST(CBetaDelta, ClosedForms) {
  EXPECT_NEAR(c_beta_delta(1.0, 0.0), 2.0, 1e-14);
  EXPECT_NEAR(c_beta_delta(2.0, 0.0), 4.0, 1e-13);
  EXPECT_THROW(c_beta_delta(0.0, 0.0), DomainError);
  EXPECT_THROW(c_beta_delta(1.0, -1.0), DomainError);
}

// Reference values from mpmath at 30 digits.
TEST(Bessel, MatchesHighPrecisionReference) {
  struct Case {
    double nu, x, want;
  };
  const Case cases[] = {
      {0, 1, 0.76519768655796655145},     {0.5, 3.7, -0.21977625985052783486}, {1, 10, 0.04347274616886143667},
      {2.5, 20, -0.17258019384387642416}, {3.5, 40, -0.097427968662299203526}, {10, 5, 0.0014678026473104741311},
      {10, 30, -0.12987689399858876819},  {0.25, 17.5, -0.15646213638735178563}, {7.3, 12.0, -0.11210494425320046838},
      {25, 60, 0.10752452824703348309},   {1.5, 100, -0.069207112795890604984},
  };
  for (const Case& c : cases) {
    EXPECT_NEAR(bessel_j(c.nu, c.x), c.want, 1e-12 * std::max(1.0, std::fabs(c.want))) << c.nu << " " << c.x;
  }
}

TEST(Bessel, HalfIntegerClosedForm) {
  for (double x = 0.5; x < 200.0; x *= 1.3) {
    const double j12 = std::sqrt(2.0 / (std::numbers::pi * x)) * std::sin(x);
    EXPECT_NEAR(bessel_j(0.5, x), j12, 1e-13);
  }
}

TEST(Bessel, SeriesAndAsymptoticAgreeAtCutoff) {
  BesselEvalPolicy series;
  series.series_cutoff = 1e9;
  for (double nu : {0.0, 0.3, 1.0, 2.5, 4.0}) {
    for (double x : {17.0, 18.5, 20.0}) {
      EXPECT_NEAR(bessel_j(nu, x), bessel_j(nu, x, series), 1e-11) << nu << " " << x;
    }
  }
}

TEST(Bessel, DomainErrors) {
  EXPECT_THROW(bessel_j(-1.0, 1.0), DomainError);
  EXPECT_THROW(bessel_j(1.0, -1.0), DomainError);
  EXPECT_EQ(bessel_j(0.0, 0.0), 1.0);
  EXPECT_EQ(bessel_j(2.0, 0.0), 0.0);
}

// (1 - |xi|^2)_+^a has transform Gamma(a+1) pi^-a J_{n/2+a}(2 pi rho) / rho^{n/2+a}.
TEST(RadialFourier, BochnerRieszClosedForm) {
  for (int n : {1, 2, 3}) {
    for (double a : {1.0, 2.0}) {
      const std::vector<double> rhos = {0.0, 0.2, 1.0, 3.3, 10.0};
      const auto res = radial_fourier(br_profile(a), n, rhos);
      for (std::size_t i = 0; i < rhos.size(); ++i) {
        const double want = kernel_kbr(a, 1, n, 1.0, rhos[i]);
        EXPECT_NEAR(res.values[i], want, 1e-9 * std::max(1e-3, std::fabs(kernel_kbr(a, 1, n, 1.0, 0.0))))
            << n << " " << a << " " << rhos[i];
      }
      EXPECT_LT(res.max_refinement_change, 1e-8);
    }
  }
}

TEST(RadialFourier, RejectsUnboundedSupport) {
  const RadialProfile wide([](double) { return 1.0; }, 0.0, INFINITY, "unbounded");
  const std::vector<double> r = {1.0};
  EXPECT_THROW(radial_fourier(wide, 2, r), DomainError);
}

TEST(KernelKbr, OriginLimitIsContinuous) {
  for (int k : {1, 2, 3}) {
    for (double a : {0.0, 0.5, 1.5}) {
      const double at0 = kernel_kbr(a, k, 2, 1.7, 0.0);
      const double near = kernel_kbr(a, k, 2, 1.7, 1e-7);
      EXPECT_NEAR(near / at0, 1.0, 1e-9);
    }
  }
}

TEST(KernelKbr, ScalesWithR) {
  // K_R(z) = R^{nk} K_1(R z).
  const double a = 0.5;
  EXPECT_NEAR(kernel_kbr(a, 2, 2, 3.0, 0.4), 81.0 * kernel_kbr(a, 2, 2, 1.0, 1.2), 1e-12);
}
