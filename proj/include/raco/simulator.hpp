#pragma once

// Monte Carlo round engine: arrivals, local offload decisions, multichannel
// collision resolution, random TDMA scheduling of the winners and the
// upload backlog state X_i.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "raco/control.hpp"
#include "raco/errors.hpp"
#include "raco/model.hpp"

namespace raco::sim {

enum class AccountingMode {
  /// X_{i+1} = X_i + D_i
  Backlog,
  /// X_{i+1} = max(X_i, (i+1) Delta) + D_i; the offloading channel may idle.
  WorkConserving,
};

struct SimState {
  long round_index = 0;
  double backlog_finish_time = 0.0;  // X_i
  Rng rng;

  explicit SimState(std::uint64_t seed) : rng(make_rng(seed)) {}
};

struct RoundOutcome {
  long round_index = 0;
  int active = 0;      // K
  int contenders = 0;  // W
  int successes = 0;   // S
  std::vector<TaskRecord> tasks;
  double total_upload_time = 0.0;  // D
  double x_before = 0.0;
  double x_after = 0.0;
  double backlog = 0.0;  // X_after - (i+1) Delta
};

/// Marks which picks collide. picks[k] in 1..channels; result[k] is true
/// when device k is alone on its channel.
inline std::vector<bool> resolve_collisions(std::span<const int> picks, int channels) {
  std::vector<int> load(static_cast<std::size_t>(channels) + 1, 0);
  for (const int p : picks) ++load[static_cast<std::size_t>(p)];
  std::vector<bool> alone(picks.size());
  for (std::size_t k = 0; k < picks.size(); ++k) alone[k] = load[static_cast<std::size_t>(picks[k])] == 1;
  return alone;
}

/// One random-access round followed by scheduling of the winners.
inline RoundOutcome run_round(SimState& state, const SystemConfig& c,
                              AccountingMode mode = AccountingMode::Backlog) {
  RoundOutcome out;
  out.round_index = state.round_index;
  out.x_before = state.backlog_finish_time;
  const double bo = c.offload_bandwidth();
  const int channels = c.num_rac_channels;

  out.active = sample_arrivals(c, state.rng);
  out.tasks.resize(static_cast<std::size_t>(out.active));
  std::vector<int> picks;
  std::vector<std::size_t> contender_index;
  std::uniform_int_distribution<int> pick_channel(1, channels);
  for (std::size_t k = 0; k < out.tasks.size(); ++k) {
    TaskRecord& t = out.tasks[k];
    t.input_size = sample_input_size(c, state.rng);
    t.snr = sample_snr(c, state.rng);
    t.upload_time = upload_time(t.input_size, t.snr, bo);
    t.contends = t.input_size <= c.input_cap;
    if (t.contends) {
      t.channel_pick = pick_channel(state.rng);
      picks.push_back(t.channel_pick);
      contender_index.push_back(k);
    }
  }
  out.contenders = static_cast<int>(picks.size());

  const auto alone = resolve_collisions(picks, channels);
  std::vector<std::size_t> winners;
  for (std::size_t j = 0; j < alone.size(); ++j) {
    if (alone[j]) winners.push_back(contender_index[j]);
  }
  out.successes = static_cast<int>(winners.size());

  std::vector<int> slots(winners.size());
  std::iota(slots.begin(), slots.end(), 1);
  std::shuffle(slots.begin(), slots.end(), state.rng);
  double d = 0.0;
  for (std::size_t j = 0; j < winners.size(); ++j) {
    TaskRecord& t = out.tasks[winners[j]];
    t.success = true;
    t.schedule_slot = slots[j];
  }
  for (const TaskRecord& t : out.tasks) {
    if (t.success) d += t.upload_time;
  }
  out.total_upload_time = d;

  const double round_end = static_cast<double>(state.round_index + 1) * c.round_interval;
  if (mode == AccountingMode::Backlog) {
    state.backlog_finish_time += d;
  } else {
    state.backlog_finish_time = std::max(state.backlog_finish_time, round_end) + d;
  }
  out.x_after = state.backlog_finish_time;
  out.backlog = out.x_after - round_end;
  ++state.round_index;
  return out;
}

/// Intra-delay Z of every successful device: the summed upload time of the
/// devices scheduled ahead of it in the same round. Returned in slot order.
inline std::vector<double> intra_delays(const RoundOutcome& r) {
  std::vector<double> by_slot(static_cast<std::size_t>(r.successes), 0.0);
  for (const TaskRecord& t : r.tasks) {
    if (t.success) by_slot[static_cast<std::size_t>(t.schedule_slot - 1)] = t.upload_time;
  }
  std::vector<double> z(by_slot.size(), 0.0);
  double acc = 0.0;
  for (std::size_t j = 0; j < by_slot.size(); ++j) {
    z[j] = acc;
    acc += by_slot[j];
  }
  return z;
}

struct Interval {
  double low;
  double high;
};

/// 95% Wilson score interval for `hits` out of `trials`.
inline Interval wilson_interval(long hits, long trials, double zscore = 1.959963984540054) {
  if (trials <= 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  const double z2 = zscore * zscore;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = zscore * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  // Exact endpoints at the extremes instead of a rounding residue.
  const double low = hits == 0 ? 0.0 : std::max(0.0, center - half);
  const double high = hits == trials ? 1.0 : std::min(1.0, center + half);
  return {low, high};
}

/// Streaming mean/variance (Welford), mergeable across campaigns.
struct RunningStat {
  long count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }
  void merge(const RunningStat& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double n = static_cast<double>(count + o.count);
    const double delta = o.mean - mean;
    mean += delta * static_cast<double>(o.count) / n;
    m2 += o.m2 + delta * delta * static_cast<double>(count) * static_cast<double>(o.count) / n;
    count += o.count;
  }
  double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
  double standard_error() const { return count > 0 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0; }
};

struct OutageCount {
  double tau = 0.0;
  long successes = 0;
  long outages = 0;

  double probability() const { return successes > 0 ? static_cast<double>(outages) / successes : 0.0; }
  Interval interval() const { return wilson_interval(outages, successes); }
};

struct CampaignStats {
  RunningStat total_upload_time;  // D per round
  RunningStat successes;          // S per round
  RunningStat contenders;         // W per round
  RunningStat active;             // K per round
  RunningStat device_upload_time; // T of each successful device
  double max_backlog = -std::numeric_limits<double>::infinity();
  std::vector<OutageCount> outage;

  long rounds() const { return total_upload_time.count; }
  double mean_d() const { return total_upload_time.mean; }
  double var_d() const { return total_upload_time.variance(); }
  double se_d() const { return total_upload_time.standard_error(); }
  double mean_s() const { return successes.mean; }
  double mean_w() const { return contenders.mean; }
  double mean_k() const { return active.mean; }
  double offload_fraction() const { return active.mean > 0.0 ? successes.mean / active.mean : 0.0; }

  /// Combines statistics of an independent campaign; outage grids must match.
  void merge(const CampaignStats& o) {
    total_upload_time.merge(o.total_upload_time);
    successes.merge(o.successes);
    contenders.merge(o.contenders);
    active.merge(o.active);
    device_upload_time.merge(o.device_upload_time);
    max_backlog = std::max(max_backlog, o.max_backlog);
    if (outage.empty()) {
      outage = o.outage;
    } else {
      for (std::size_t j = 0; j < outage.size() && j < o.outage.size(); ++j) {
        outage[j].successes += o.outage[j].successes;
        outage[j].outages += o.outage[j].outages;
      }
    }
  }
};

struct CsvRow {
  long round = 0;
  int active = 0;
  int contenders = 0;
  int successes = 0;
  double total_upload_time = 0.0;
  double x = 0.0;
  double backlog = 0.0;
  double umax = 0.0;
  int m = 0;
};

struct CampaignOptions {
  long rounds = 1;
  std::uint64_t seed = 1;
  AccountingMode accounting = AccountingMode::Backlog;
  std::optional<control::ControllerState> controller;
  std::vector<double> tau_grid;
  /// Measure outage against tau - t_N with t_N the backlog at round start
  /// instead of t_N = 0.
  bool outage_from_backlog = false;
  bool keep_rows = true;
};

struct CampaignResult {
  CampaignStats stats;
  std::vector<CsvRow> rows;
  std::optional<control::ControllerState> controller;
};

/// Runs `rounds` consecutive rounds. With a controller the adapted value of
/// round i is driven by D_{i-1}: the update happens after each round
/// completes and takes effect in the next one.
inline CampaignResult run_campaign(const SystemConfig& base, const CampaignOptions& opt) {
  CampaignResult res;
  SimState state(opt.seed);
  res.controller = opt.controller;
  for (const double tau : opt.tau_grid) res.stats.outage.push_back({tau, 0, 0});
  if (opt.keep_rows) res.rows.reserve(static_cast<std::size_t>(std::max<long>(opt.rounds, 0)));

  for (long i = 0; i < opt.rounds; ++i) {
    const SystemConfig c = res.controller ? control::apply(*res.controller, base) : base;
    const RoundOutcome r = run_round(state, c, opt.accounting);

    auto& st = res.stats;
    st.total_upload_time.push(r.total_upload_time);
    st.successes.push(r.successes);
    st.contenders.push(r.contenders);
    st.active.push(r.active);
    st.max_backlog = std::max(st.max_backlog, r.backlog);
    for (const TaskRecord& t : r.tasks) {
      if (t.success) st.device_upload_time.push(t.upload_time);
    }
    if (!st.outage.empty() && r.successes > 0) {
      const double t_n =
          opt.outage_from_backlog ? std::max(0.0, r.x_before - static_cast<double>(i) * c.round_interval) : 0.0;
      const auto z = intra_delays(r);
      for (auto& oc : st.outage) {
        oc.successes += r.successes;
        for (const double zk : z) {
          if (zk > oc.tau - t_n) ++oc.outages;
        }
      }
    }
    if (opt.keep_rows) {
      res.rows.push_back({r.round_index, r.active, r.contenders, r.successes, r.total_upload_time, r.x_after,
                          r.backlog, c.input_cap, c.num_rac_channels});
    }
    if (res.controller) res.controller = control::step(*res.controller, r.total_upload_time, c.round_interval);
  }
  return res;
}

/// Empirical latency-outage probability Pr(Z > tau) over all successful
/// devices, with t_N = 0.
inline std::vector<OutageCount> measure_outage(const SystemConfig& c, const std::vector<double>& tau_grid,
                                               long rounds, std::uint64_t seed) {
  for (const double tau : tau_grid) {
    if (!(tau > 0.0)) throw DomainError("measure_outage: tau must be positive");
  }
  CampaignOptions opt;
  opt.rounds = rounds;
  opt.seed = seed;
  opt.tau_grid = tau_grid;
  opt.keep_rows = false;
  const auto res = run_campaign(c, opt);
  const long successes = res.stats.device_upload_time.count;
  if (successes < 100) {
    throw InsufficientSamples("measure_outage: only " + std::to_string(successes) + " successful devices");
  }
  return res.stats.outage;
}

struct MeanEstimate {
  double mean;
  double standard_error;
};

/// Mean number of collision-free devices when exactly `contenders` devices
/// pick uniformly among `channels` channels.
inline MeanEstimate empirical_conditional_successes(int channels, int contenders, long trials, std::uint64_t seed) {
  if (contenders < 0 || channels < 1) throw DomainError("empirical_conditional_successes: bad arguments");
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<int> pick(1, channels);
  std::vector<int> picks(static_cast<std::size_t>(contenders));
  RunningStat s;
  for (long t = 0; t < trials; ++t) {
    for (int& p : picks) p = pick(rng);
    const auto alone = resolve_collisions(picks, channels);
    s.push(static_cast<double>(std::count(alone.begin(), alone.end(), true)));
  }
  return {s.mean, s.standard_error()};
}

inline MeanEstimate empirical_conditional_successes(const SystemConfig& c, int contenders, long trials) {
  return empirical_conditional_successes(c.num_rac_channels, contenders, trials, c.seed);
}

}  // namespace raco::sim
