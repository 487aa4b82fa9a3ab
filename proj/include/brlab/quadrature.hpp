#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "brlab/errors.hpp"

namespace brlab::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n.
inline const Rule& gauss_legendre(int n) {
  static std::mutex mutex;
  static std::map<int, Rule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  if (n < 1) throw DomainError("gauss_legendre: need at least one node");

  Rule r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    long double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    long double dp = 0.0L;
    for (int iter = 0; iter < 100; ++iter) {
      long double p0 = 1.0L;
      long double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const long double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0L);
      const long double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-19L) break;
    }
    // Recompute the derivative at the converged node.
    long double p0 = 1.0L;
    long double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const long double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = (n == 1) ? 1.0L : n * (x * p1 - p0) / (x * x - 1.0L);
    const long double w = 2.0L / ((1.0L - x * x) * dp * dp);
    r.nodes[static_cast<std::size_t>(i)] = -static_cast<double>(x);
    r.nodes[static_cast<std::size_t>(n - 1 - i)] = static_cast<double>(x);
    r.weights[static_cast<std::size_t>(i)] = static_cast<double>(w);
    r.weights[static_cast<std::size_t>(n - 1 - i)] = static_cast<double>(w);
  }
  if (n % 2 == 1) r.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return cache.emplace(n, std::move(r)).first->second;
}

// Gauss-Legendre nodes and weights mapped to [a, b].
inline Rule gauss_legendre(int n, double a, double b) {
  const Rule& base = gauss_legendre(n);
  Rule r;
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (std::size_t i = 0; i < base.nodes.size(); ++i) {
    r.nodes.push_back(mid + half * base.nodes[i]);
    r.weights.push_back(half * base.weights[i]);
  }
  return r;
}

template <class F>
double fixed_gauss(F&& f, double a, double b, int n) {
  const Rule& base = gauss_legendre(n);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < base.nodes.size(); ++i) sum += base.weights[i] * f(mid + half * base.nodes[i]);
  return half * sum;
}

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

// Globally adaptive 61-point Gauss-Kronrod: bisect the interval with the
// largest error estimate until the summed estimate drops below rel_tol times
// the L1 norm. Stops at max_intervals (the recursive Boost driver halves its
// absolute tolerance per level and stalls at the round-off floor).
template <class F>
Estimate adaptive(F&& f, double a, double b, double rel_tol = 1e-12, unsigned max_intervals = 2000) {
  Estimate e;
  if (a == b) return e;
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  struct Piece {
    double a, b, value, error, l1;
    bool operator<(const Piece& o) const { return error < o.error; }
  };
  auto eval = [&](double lo, double hi) {
    Piece p{lo, hi, 0.0, 0.0, 0.0};
    p.value = GK::integrate(f, lo, hi, 0, 0.0, &p.error, &p.l1);
    // Boost reports |K - G| on the reference interval; rescale to [lo, hi].
    p.error *= 0.5 * (hi - lo);
    return p;
  };
  std::priority_queue<Piece> heap;
  heap.push(eval(a, b));
  double value = heap.top().value, error = heap.top().error, l1 = heap.top().l1;
  while (error > rel_tol * l1 && heap.size() < max_intervals) {
    const Piece worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    // Round-off floor: bisecting further cannot reduce the estimate.
    if (!(mid > worst.a && mid < worst.b) || worst.error <= 64.0 * std::numeric_limits<double>::epsilon() * worst.l1) {
      heap.push(worst);
      break;
    }
    const Piece left = eval(worst.a, mid);
    const Piece right = eval(mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    l1 += left.l1 + right.l1 - worst.l1;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to avoid drift from the running updates.
  value = 0.0;
  error = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  e.value = value;
  e.error = error;
  return e;
}

// Adaptive Gauss-Kronrod applied panel by panel between sorted breakpoints.
template <class F>
Estimate adaptive_panels(F&& f, std::span<const double> breaks, double rel_tol = 1e-12, unsigned max_intervals = 2000) {
  Estimate total;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    const Estimate e = adaptive(f, breaks[i], breaks[i + 1], rel_tol, max_intervals);
    total.value += e.value;
    total.error += e.error;
  }
  return total;
}

// Double-exponential quadrature; tolerates integrable endpoint singularities.
template <class F>
Estimate tanh_sinh(F&& f, double a, double b, double rel_tol = 1e-14, std::size_t max_refinements = 15) {
  boost::math::quadrature::tanh_sinh<double> integrator(max_refinements);
  Estimate e;
  double l1 = 0.0;
  e.value = integrator.integrate(f, a, b, rel_tol, &e.error, &l1);
  return e;
}

}  // namespace brlab::quad
