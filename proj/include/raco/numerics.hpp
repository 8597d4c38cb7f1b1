#pragma once

// Special functions and scalar solvers backing the closed-form analysis:
// E1, the beta_n tail weights, E[1/log2(1+gamma)] by adaptive Gauss-Kronrod
// quadrature, golden-section minimization and bisection.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <string>
#include <vector>

#include "raco/errors.hpp"

namespace raco::numerics {

inline constexpr double kEulerGamma = 0.57721566490153286061;

/// Exponential integral E1(x) = int_x^inf e^-z / z dz, x > 0.
/// Power series for x <= 1, modified-Lentz continued fraction above.
inline double exp_integral_e1(double x) {
  if (!(x > 0.0)) throw DomainError("exp_integral_e1: x must be positive");
  constexpr double eps = 1e-16;
  if (x <= 1.0) {
    // E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    double sum = 0.0;
    double term = 1.0;
    for (int k = 1; k < 200; ++k) {
      term *= -x / k;
      const double contrib = term / k;
      sum += contrib;
      if (std::fabs(contrib) < eps * std::fabs(sum)) break;
    }
    return -kEulerGamma - std::log(x) - sum;
  }
  if (x > 745.0) return 0.0;
  constexpr double tiny = 1e-300;
  double b = x + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double a = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const double del = c * d;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h * std::exp(-x);
}

/// E[1/gamma] under gamma = floor + Exp(mean snr_mean):
/// (1/mean) e^{floor/mean} E1(floor/mean).
inline double expected_inv_snr(double snr_mean, double snr_floor) {
  if (!(snr_mean > 0.0) || !(snr_floor > 0.0)) {
    throw DomainError("expected_inv_snr: SNR mean and floor must be positive");
  }
  const double r = snr_floor / snr_mean;
  if (r > 700.0) {
    // e^r E1(r) ~ (1/r)(1 - 1/r + 2/r^2 - 6/r^3)
    const double inv = 1.0 / r;
    return inv * (1.0 - inv + 2.0 * inv * inv - 6.0 * inv * inv * inv) / snr_mean;
  }
  return std::exp(r) * exp_integral_e1(r) / snr_mean;
}

struct QuadratureSpec {
  double relative_tolerance = 1e-10;
  int max_subdivisions = 200;
};

namespace detail {

// 15-point Kronrod nodes on [-1, 1] (nonnegative half) with the embedded
// 7-point Gauss rule.
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double lo, hi, value, error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment gauss_kronrod_15(F& f, double lo, double hi) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double fsum = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[j] * fsum;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * fsum;
  }
  return {lo, hi, kronrod * half, std::fabs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Globally adaptive G7-K15 quadrature of f over the finite interval [lo, hi].
/// Splits the segment with the largest error estimate until the summed
/// estimate drops below relative_tolerance * |integral|.
template <class F>
double integrate_adaptive(F f, double lo, double hi, const QuadratureSpec& spec = {}) {
  if (!(spec.relative_tolerance > 0.0 && spec.relative_tolerance <= 1e-3)) {
    throw DomainError("QuadratureSpec: relative_tolerance must lie in (0, 1e-3]");
  }
  std::priority_queue<detail::Segment> heap;
  heap.push(detail::gauss_kronrod_15(f, lo, hi));
  double total = heap.top().value;
  double error = heap.top().error;
  for (int splits = 0; error > spec.relative_tolerance * std::fabs(total); ++splits) {
    if (splits >= spec.max_subdivisions) {
      throw ConvergenceError("integrate_adaptive: subdivision budget exhausted (error estimate " +
                             std::to_string(error) + ")");
    }
    const detail::Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    const detail::Segment left = detail::gauss_kronrod_15(f, worst.lo, mid);
    const detail::Segment right = detail::gauss_kronrod_15(f, mid, worst.hi);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed the drift of the running updates.
  double sum = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    heap.pop();
  }
  return sum;
}

/// E[1/log2(1 + gamma)] for gamma = floor + Exp(mean snr_mean).
/// With u = -ln(1 - w) the exponential weight becomes dw:
///   int_0^1 ln2 / ln(1 + floor - mean ln(1 - w)) dw.
inline double expected_inv_log_snr(double snr_mean, double snr_floor, const QuadratureSpec& spec = {}) {
  if (!(snr_mean > 0.0) || !(snr_floor > 0.0)) {
    throw DomainError("expected_inv_log_snr: SNR mean and floor must be positive");
  }
  const auto integrand = [=](double w) {
    const double u = -std::log1p(-w);
    return std::numbers::ln2 / std::log1p(snr_floor + snr_mean * u);
  };
  return integrate_adaptive(integrand, 0.0, 1.0, spec);
}

/// ln beta_n(x), beta_n(x) = (n-2)!/x^n (e^x - sum_{s<n} x^s/s!).
/// The bracket is the Poisson-type tail sum_{s>=n} x^s/s!, so it is summed
/// forward when x < n and taken as e^x (1 - P[Pois(x) < n]) otherwise; in
/// both regimes nothing near-equal is subtracted.
inline double log_beta_weight(int n, double x) {
  if (n < 2) throw DomainError("beta_weight: n must be at least 2");
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("beta_weight: x must be positive and finite");
  const double log_x = std::log(x);
  double log_tail = 0.0;
  if (x < n) {
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 100000; ++k) {
      term *= x / (n + k);
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    log_tail = n * log_x - std::lgamma(n + 1.0) + std::log(sum);
  } else {
    // log of the head sum_{s<n} x^s/s!, accumulated in log space.
    double log_head = 0.0;  // s = 0 term
    double log_term = 0.0;
    for (int s = 1; s < n; ++s) {
      log_term += log_x - std::log(static_cast<double>(s));
      const double hi = std::max(log_head, log_term);
      log_head = hi + std::log1p(std::exp(-std::fabs(log_head - log_term)));
    }
    log_tail = x + std::log1p(-std::exp(log_head - x));
  }
  return std::lgamma(n - 1.0) - n * log_x + log_tail;
}

inline double beta_weight(int n, double x) { return std::exp(log_beta_weight(n, x)); }

struct ScalarMinimum {
  double argmin;
  double value;
};

/// Golden-section search on [lower, upper]. Converges to the minimizer of a
/// unimodal f to within `tolerance`; for other f it returns some local
/// minimum. The endpoints are compared against the interior result, so a
/// minimum sitting on the bracket edge is returned exactly.
template <class F>
ScalarMinimum minimize_scalar(F&& f, double lower, double upper, double tolerance) {
  if (!(lower < upper)) throw DomainError("minimize_scalar: lower must be below upper");
  if (!(tolerance > 0.0)) throw DomainError("minimize_scalar: tolerance must be positive");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lower;
  double b = upper;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 10000 && (b - a) > tolerance; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  ScalarMinimum best{0.5 * (a + b), 0.0};
  best.value = f(best.argmin);
  if (fc < best.value) best = {c, fc};
  if (fd < best.value) best = {d, fd};
  const double f_lower = f(lower);
  if (f_lower <= best.value) best = {lower, f_lower};
  const double f_upper = f(upper);
  if (f_upper <= best.value) best = {upper, f_upper};
  return best;
}

/// Bisection root of f on [lower, upper]; stops when the bracket is no wider
/// than `tolerance`.
template <class F>
double find_root(F&& f, double lower, double upper, double tolerance) {
  if (!(lower <= upper)) throw DomainError("find_root: lower must not exceed upper");
  double f_lo = f(lower);
  if (f_lo == 0.0) return lower;
  const double f_hi = f(upper);
  if (f_hi == 0.0) return upper;
  if ((f_lo < 0.0) == (f_hi < 0.0)) throw NoSignChange("find_root: f has the same sign at both ends");
  double lo = lower;
  double hi = upper;
  for (int it = 0; it < 2000 && (hi - lo) > tolerance; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = f(mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace raco::numerics
