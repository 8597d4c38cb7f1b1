#pragma once

// Closed-form results for the two-stage offloading system: mean total upload
// time and its bounds, stability tests, the intra-delay moment generating
// function and the Chernoff bound on the latency outage probability.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "raco/errors.hpp"
#include "raco/model.hpp"
#include "raco/numerics.hpp"

namespace raco::analytic {

inline double offload_probability(double rate, double input_cap) {
  if (std::isinf(input_cap)) return 1.0;
  if (!(input_cap > 0.0)) return 0.0;
  return -std::expm1(-rate * input_cap);
}

/// E[S] = lambda q_o exp(-lambda q_o / M).
inline double expected_successes(double arrival_rate, double offload_prob, int channels) {
  const double contenders = arrival_rate * offload_prob;
  return contenders * std::exp(-contenders / channels);
}

/// Reciprocal of E[U | U <= U_max] for U ~ Exp(rate).
inline double conditional_input_rate(double rate, double input_cap) {
  if (!(input_cap > 0.0)) throw DomainError("conditional_input_rate: U_max must be positive");
  if (std::isinf(input_cap)) return rate;
  const double x = rate * input_cap;
  if (x < 1e-4) {
    // 1 - e^-x (1 + x) = x^2/2 - x^3/3 + x^4/8 - ...
    const double num = x * (1.0 - x / 2.0 + x * x / 6.0);
    const double den = x * x * (0.5 - x / 3.0 + x * x / 8.0);
    return rate * num / den;
  }
  const double q = -std::expm1(-x);
  return rate * q / (q - x * std::exp(-x));
}

/// E[1/log2(1 + gamma)] for the configured SNR law.
inline double mean_inverse_capacity(const SystemConfig& c, const numerics::QuadratureSpec& spec = {}) {
  if (c.snr_model == SnrModel::Constant) return 1.0 / std::log2(1.0 + c.snr_mean);
  return numerics::expected_inv_log_snr(c.snr_mean, c.snr_floor, spec);
}

/// E[1/gamma] for the configured SNR law.
inline double mean_inverse_snr(const SystemConfig& c) {
  if (c.snr_model == SnrModel::Constant) return 1.0 / c.snr_mean;
  return numerics::expected_inv_snr(c.snr_mean, c.snr_floor);
}

struct DerivedParams {
  double offload_bandwidth;
  double offload_prob;
  double conditional_rate;  // mu_max; +inf when U_max == 0
  double expected_successes;
  double intra_delay_rate;  // theta
};

/// theta = mu B_o / E[1/log2(1 + gamma)].
inline double intra_delay_rate(const SystemConfig& c, const numerics::QuadratureSpec& spec = {}) {
  return c.input_rate() * c.offload_bandwidth() / mean_inverse_capacity(c, spec);
}

inline DerivedParams derive(const SystemConfig& c) {
  const double mu = c.input_rate();
  const double q = offload_probability(mu, c.input_cap);
  return {c.offload_bandwidth(), q,
          c.input_cap > 0.0 ? conditional_input_rate(mu, c.input_cap) : std::numeric_limits<double>::infinity(),
          expected_successes(c.arrival_rate, q, c.num_rac_channels), intra_delay_rate(c)};
}

struct MeanUploadTime {
  double exact = 0.0;      // E[S] E[U|U<=U_max] E[1/log2(1+gamma)] / B_o
  double bound_l1 = 0.0;   // E[1/log2(1+gamma)] <= ln2 (1/2 + E[1/gamma])
  double bound_l1b = 0.0;  // additionally E[U|U<=U_max] <= 1/mu
};

inline MeanUploadTime mean_total_upload_time(const SystemConfig& c, const numerics::QuadratureSpec& spec = {}) {
  const double mu = c.input_rate();
  const double q = offload_probability(mu, c.input_cap);
  const double es = expected_successes(c.arrival_rate, q, c.num_rac_channels);
  if (es == 0.0) return {};
  const double bo = c.offload_bandwidth();
  const double mu_max = conditional_input_rate(mu, c.input_cap);
  const double capacity_bound = std::numbers::ln2 * (0.5 + mean_inverse_snr(c));
  return {es * mean_inverse_capacity(c, spec) / (bo * mu_max), es * capacity_bound / (bo * mu_max),
          es * capacity_bound / (bo * mu)};
}

struct Stability {
  bool stable;
  double margin;  // Delta - E[D]
};

inline Stability is_stable(const SystemConfig& c) {
  const double mean = mean_total_upload_time(c).exact;
  return {mean <= c.round_interval, c.round_interval - mean};
}

struct SufficientCondition {
  bool holds;
  double lhs;  // input bits per round at maximal E[S], M e^-1 / mu_max
  double rhs;  // bits the offloading channel carries per round
};

/// Stability test under ideal power control (constant SNR snr_const).
inline SufficientCondition sufficient_condition_constant_snr(const SystemConfig& c, double snr_const) {
  if (!(snr_const > 0.0)) throw DomainError("sufficient_condition_constant_snr: SNR must be positive");
  const double mu = c.input_rate();
  const double mean_size = c.input_cap > 0.0 ? 1.0 / conditional_input_rate(mu, c.input_cap) : 0.0;
  const double lhs = c.num_rac_channels * std::exp(-1.0) * mean_size;
  const double rhs = c.round_interval * c.offload_bandwidth() * std::log2(1.0 + snr_const);
  // A few ulps of slack keep the boundary case inclusive.
  return {lhs <= rhs * (1.0 + 8.0 * std::numeric_limits<double>::epsilon()), lhs, rhs};
}

namespace detail {

inline double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::fabs(a - b)));
}

/// ln(e^y - 1) for y > 0.
inline double log_expm1(double y) { return y > 30.0 ? y + std::log1p(-std::exp(-y)) : std::log(std::expm1(y)); }

inline void check_mgf_args(double nu, double mean_successes, double theta) {
  if (!(theta > 0.0)) throw DomainError("mgf: theta must be positive");
  if (!(nu >= 0.0) || !(nu < theta)) throw DomainError("mgf: nu must lie in [0, theta)");
  if (!(mean_successes >= 0.0)) throw DomainError("mgf: mean number of successes must be nonnegative");
}

}  // namespace detail

/// Truncation point covering the Poisson(lambda_bar * z) mass of the
/// z-tilted summand to below 1e-12.
inline int default_mgf_truncation(double mean_successes, double z) {
  const double x = mean_successes * std::max(z, 1.0);
  return static_cast<int>(std::ceil(x + 12.0 * std::sqrt(x) + 30.0));
}

/// ln E[e^{nu Z}] by the direct Poisson sum
///   sum_{s>=1} (z^s - 1)/(s (z - 1)) e^{-l} l^s / s!,  z = theta/(theta - nu).
/// Every summand is evaluated without cancellation; nu = 0 gives the z -> 1
/// limit 1 - e^{-l}.
inline double log_mgf_z_direct(double nu, double mean_successes, double theta, int s_max) {
  detail::check_mgf_args(nu, mean_successes, theta);
  if (mean_successes == 0.0) return -std::numeric_limits<double>::infinity();
  const double log_z = -std::log1p(-nu / theta);
  const double log_z_minus_1 = nu == 0.0 ? 0.0 : detail::log_expm1(log_z);
  const double log_l = std::log(mean_successes);
  double acc = -std::numeric_limits<double>::infinity();
  for (int s = 1; s <= s_max; ++s) {
    const double log_pois = -mean_successes + s * log_l - std::lgamma(s + 1.0);
    const double log_geom = nu == 0.0 ? std::log(static_cast<double>(s))
                                      : detail::log_expm1(s * log_z) - log_z_minus_1;
    acc = detail::log_add(acc, log_pois + log_geom - std::log(static_cast<double>(s)));
  }
  return acc;
}

inline double mgf_z_direct(double nu, double mean_successes, double theta, int s_max) {
  return std::exp(log_mgf_z_direct(nu, mean_successes, theta, s_max));
}

inline double mgf_z_direct(double nu, double mean_successes, double theta) {
  detail::check_mgf_args(nu, mean_successes, theta);
  return mgf_z_direct(nu, mean_successes, theta, default_mgf_truncation(mean_successes, theta / (theta - nu)));
}

namespace detail {

/// ln sum_{n=2}^{n_max} x beta_n(x).
inline double log_weighted_beta_sum(double x, int n_max) {
  double acc = -std::numeric_limits<double>::infinity();
  const double log_x = std::log(x);
  for (int n = 2; n <= n_max; ++n) acc = log_add(acc, log_x + numerics::log_beta_weight(n, x));
  return acc;
}

}  // namespace detail

/// ln of the beta-series form of E[e^{nu Z}] truncated at n_max:
///   e^{-l}/(1 - z) sum_{n=2}^{n_max} [l beta_n(l) - l z beta_n(l z)].
/// Returns NaN when the two partial sums agree to working precision (z
/// numerically indistinguishable from 1).
inline double log_mgf_z_series(double nu, double mean_successes, double theta, int n_max) {
  detail::check_mgf_args(nu, mean_successes, theta);
  if (!(nu > 0.0)) throw DomainError("mgf_z_series: nu must be positive");
  if (n_max < 2) throw DomainError("mgf_z_series: n_max must be at least 2");
  if (mean_successes == 0.0) return -std::numeric_limits<double>::infinity();
  const double z = theta / (theta - nu);
  const double log_z_minus_1 = detail::log_expm1(-std::log1p(-nu / theta));
  const double lower = detail::log_weighted_beta_sum(mean_successes, n_max);
  const double upper = detail::log_weighted_beta_sum(mean_successes * z, n_max);
  const double ratio = std::exp(lower - upper);
  if (!(ratio < 1.0)) return std::numeric_limits<double>::quiet_NaN();
  return -mean_successes + upper + std::log1p(-ratio) - log_z_minus_1;
}

inline double mgf_z_series(double nu, double mean_successes, double theta, int n_max) {
  return std::exp(log_mgf_z_series(nu, mean_successes, theta, n_max));
}

struct OutageQuery {
  double tau = 1e-3;
  double backlog_ref = 0.0;  // t_N
  int n_max = 20;
};

struct OutageResult {
  double nu_star = 0.0;
  double z_star = 1.0;
  double bound = 0.0;
};

/// min over nu of e^{-nu (tau - t_N)} E[e^{nu Z}] for given lambda_bar and
/// theta, with the MGF taken from the n_max-term series.
inline OutageResult chernoff_outage_bound(double mean_successes, double theta, const OutageQuery& q) {
  const double slack = q.tau - q.backlog_ref;
  if (!(slack > 0.0)) throw DomainError("chernoff_outage_bound: tau - t_N must be positive");
  if (q.n_max < 2) throw DomainError("chernoff_outage_bound: n_max must be at least 2");
  if (mean_successes == 0.0) return {0.0, 1.0, 0.0};
  const double at_zero = std::log(-std::expm1(-mean_successes));
  const auto objective = [&](double nu) {
    if (nu <= 0.0) return at_zero;
    double log_mgf = log_mgf_z_series(nu, mean_successes, theta, q.n_max);
    if (std::isnan(log_mgf)) {
      // Series cancels completely this close to z = 1; the direct sum is
      // exact there and the truncation difference is far below resolution.
      log_mgf = log_mgf_z_direct(nu, mean_successes, theta,
                                 default_mgf_truncation(mean_successes, theta / (theta - nu)));
    }
    return -nu * slack + log_mgf;
  };
  const auto best = numerics::minimize_scalar(objective, 0.0, theta * (1.0 - 1e-9), theta * 1e-10);
  OutageResult r;
  r.nu_star = best.argmin;
  r.z_star = theta / (theta - best.argmin);
  r.bound = std::clamp(std::exp(best.value), 0.0, 1.0);
  return r;
}

inline OutageResult chernoff_outage_bound(const SystemConfig& c, const OutageQuery& q) {
  const auto d = derive(c);
  return chernoff_outage_bound(d.expected_successes, d.intra_delay_rate, q);
}

/// U_max solving E[D](U_max) = Delta, or nullopt when even U_max -> inf
/// keeps E[D] below Delta.
inline std::optional<double> solve_stable_umax(const SystemConfig& c) {
  SystemConfig probe = c;
  const auto mean_at = [&](double cap) {
    probe.input_cap = cap;
    return mean_total_upload_time(probe).exact;
  };
  const double delta = c.round_interval;
  if (mean_at(std::numeric_limits<double>::infinity()) < delta) return std::nullopt;
  double hi = c.mean_input;
  for (int k = 0; mean_at(hi) < delta * (1.0 - 1e-6); ++k) {
    if (k >= 80) return std::nullopt;
    hi *= 2.0;
  }
  return numerics::find_root([&](double cap) { return mean_at(cap) - delta; }, 0.0, hi, hi * 1e-13);
}

/// Largest M in [1, floor(B/b) - 1] with E[D] <= Delta.
inline int solve_stable_m(const SystemConfig& c) {
  SystemConfig probe = c;
  int best = 0;
  for (int m = 1; m <= c.max_rac_channels(); ++m) {
    probe.num_rac_channels = m;
    if (probe.offload_bandwidth() <= 0.0) break;
    if (mean_total_upload_time(probe).exact <= c.round_interval) best = m;
  }
  if (best == 0) throw NoFeasibleM("solve_stable_m: no feasible number of random-access channels");
  return best;
}

}  // namespace raco::analytic
