#pragma once

// Robbins-Monro controllers driving the mean total upload time to the round
// interval by adapting either U_max or the number of random-access channels.

#include <algorithm>
#include <cmath>
#include <optional>

#include "raco/errors.hpp"
#include "raco/model.hpp"

namespace raco::control {

enum class ControlTarget { UMax, NumChannels };

struct ControllerState {
  ControlTarget target = ControlTarget::UMax;
  double value = 0.0;      // continuous internal state
  double gain = 1.0;       // a
  double kappa = 0.8;      // step exponent, (0.5, 1]
  long iteration = 0;      // i
  double unit_gain = 1.0;  // g: seconds-scale innovation to value-scale move
  int max_channels = 1;    // floor(B/b) - 1

  /// eta_i = a / (1 + i)^kappa
  double step_size() const { return gain / std::pow(1.0 + static_cast<double>(iteration), kappa); }
};

inline void check_schedule(double gain, double kappa) {
  if (!(gain > 0.0)) throw DomainError("controller gain must be positive");
  if (!(kappa > 0.5 && kappa <= 1.0)) throw DomainError("controller exponent kappa must lie in (0.5, 1]");
}

/// Controller initialised from the scenario's current U_max (or 1/mu when
/// U_max is infinite) or current M. Default gain is 5 (1/mu)/Delta for U_max
/// and 5 for M, where the M innovation is already scaled by floor(B/b)/Delta.
inline ControllerState make_controller(ControlTarget target, const SystemConfig& c,
                                       std::optional<double> gain = std::nullopt,
                                       std::optional<double> kappa = std::nullopt) {
  ControllerState s;
  s.target = target;
  s.kappa = kappa.value_or(0.8);
  s.max_channels = std::max(1, c.max_rac_channels());
  if (target == ControlTarget::UMax) {
    s.value = std::isfinite(c.input_cap) ? c.input_cap : c.mean_input;
    s.gain = gain.value_or(5.0 * c.mean_input / c.round_interval);
    s.unit_gain = 1.0;
  } else {
    s.value = c.num_rac_channels;
    s.gain = gain.value_or(5.0);
    s.unit_gain = std::floor(c.total_bandwidth / c.rac_channel_bandwidth) / c.round_interval;
  }
  check_schedule(s.gain, s.kappa);
  return s;
}

/// value <- value - eta_i g (D_i - Delta), then clamp and advance i.
inline ControllerState step(ControllerState s, double observed_d, double delta) {
  if (!(observed_d >= 0.0)) throw DomainError("controller step: observed D must be nonnegative");
  check_schedule(s.gain, s.kappa);
  s.value -= s.step_size() * s.unit_gain * (observed_d - delta);
  if (s.target == ControlTarget::UMax) {
    s.value = std::max(s.value, 0.0);
  } else {
    s.value = std::clamp(s.value, 1.0, static_cast<double>(s.max_channels));
  }
  ++s.iteration;
  return s;
}

inline int applied_channels(const ControllerState& s) {
  const long rounded = std::lround(s.value);
  return static_cast<int>(std::clamp<long>(rounded, 1, s.max_channels));
}

/// U_max as-is (never negative) or M rounded into [1, floor(B/b) - 1].
inline double applied_value(const ControllerState& s) {
  if (s.target == ControlTarget::UMax) return std::max(s.value, 0.0);
  return applied_channels(s);
}

/// Scenario for the next round with the controlled parameter substituted.
inline SystemConfig apply(const ControllerState& s, SystemConfig c) {
  if (s.target == ControlTarget::UMax) {
    c.input_cap = applied_value(s);
  } else {
    c.num_rac_channels = applied_channels(s);
  }
  return c;
}

}  // namespace raco::control
