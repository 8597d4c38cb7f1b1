#pragma once

// Figure-reproduction experiments. Each preset pins its scenario, sweep grid
// and master seed; grid points run as independent campaigns seeded by
// derive_seed(master, index) and are emitted in grid order.

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "raco/analytic.hpp"
#include "raco/control.hpp"
#include "raco/csv.hpp"
#include "raco/model.hpp"
#include "raco/simulator.hpp"

namespace raco::presets {

/// (snr_mean, snr_floor) = (10, 6) dB, b = 1, Delta = 1 ms.
inline SystemConfig base_scenario(double total_bandwidth, int channels, double arrival_rate, double mean_input,
                                  double input_cap) {
  SystemConfig c;
  c.total_bandwidth = total_bandwidth;
  c.rac_channel_bandwidth = 1.0;
  c.num_rac_channels = channels;
  c.round_interval = 1e-3;
  c.arrival_rate = arrival_rate;
  c.mean_input = mean_input;
  c.input_cap = input_cap;
  c.snr_mean = db_to_linear(10.0);
  c.snr_floor = db_to_linear(6.0);
  return c;
}

inline constexpr double kDelta = 1e-3;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct ExperimentPreset {
  std::string name;
  std::string description;
  SystemConfig base;
  std::uint64_t seed;
  long rounds;  // per grid point, or trajectory length
};

inline std::vector<ExperimentPreset> all_presets() {
  return {
      {"fig3a", "offload % and E[D] vs lambda (1/mu = 2 Delta, U_max = 10 Delta, M = 30, B = 50)",
       base_scenario(50, 30, 30, 2 * kDelta, 10 * kDelta), 301, 20000},
      {"fig3b", "offload % and E[D] vs 1/mu (lambda = 30, U_max = 10 Delta, M = 30, B = 50)",
       base_scenario(50, 30, 30, 2 * kDelta, 10 * kDelta), 302, 20000},
      {"fig4a", "offload % and E[D] vs M (1/mu = 2 Delta, U_max = 10 Delta, lambda = 30, B = 50)",
       base_scenario(50, 30, 30, 2 * kDelta, 10 * kDelta), 401, 20000},
      {"fig4b", "offload % and E[D] vs U_max (1/mu = 2 Delta, M = 30, lambda = 30, B = 50)",
       base_scenario(50, 30, 30, 2 * kDelta, 10 * kDelta), 402, 20000},
      {"fig5a", "M adaptation trajectory (1/mu = 2 Delta, U_max = 5 Delta, lambda = 30, B = 40)",
       base_scenario(40, 30, 30, 2 * kDelta, 5 * kDelta), 501, 10000},
      {"fig5b", "U_max adaptation trajectory (1/mu = 5 Delta, M = 30, lambda = 30, B = 40)",
       base_scenario(40, 30, 30, 5 * kDelta, 5 * kDelta), 502, 10000},
      {"fig6", "latency outage vs tau (1/mu = 3 Delta, lambda = 20, M = 30, B = 50, U_max = inf)",
       base_scenario(50, 30, 20, 3 * kDelta, kInf), 601, 200000},
      {"fig7", "latency outage vs M at tau = Delta (1/mu = 2 Delta, lambda = 20, B = 50, U_max = inf)",
       base_scenario(50, 30, 20, 2 * kDelta, kInf), 701, 100000},
      {"fig8", "latency outage vs 1/mu at tau = Delta (lambda = 20, M = 30, B = 50; U_max = inf and 5 Delta)",
       base_scenario(50, 30, 20, 2 * kDelta, kInf), 801, 100000},
  };
}

inline std::optional<ExperimentPreset> find_preset(const std::string& name) {
  for (auto& p : all_presets()) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

struct PresetOutput {
  std::string csv;
  std::string summary;
};

namespace detail {

/// Evaluates fn(index) for every index concurrently; results in index order.
template <class Fn>
auto parallel_map(std::size_t count, Fn fn) {
  using R = decltype(fn(std::size_t{0}));
  std::vector<std::future<R>> futures;
  futures.reserve(count);
  for (std::size_t j = 0; j < count; ++j) futures.push_back(std::async(std::launch::async, fn, j));
  std::vector<R> out;
  out.reserve(count);
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

inline std::vector<double> tau_grid_fig6() {
  std::vector<double> g;
  for (int k = 1; k <= 30; ++k) g.push_back(0.1 * k * kDelta);
  return g;
}

inline sim::CampaignStats simulate_point(const SystemConfig& c, long rounds, std::uint64_t seed,
                                         std::vector<double> tau_grid = {}) {
  sim::CampaignOptions opt;
  opt.rounds = rounds;
  opt.seed = seed;
  opt.keep_rows = false;
  opt.tau_grid = std::move(tau_grid);
  return sim::run_campaign(c, opt).stats;
}

/// Sweep with overlaid simulated and analytic offload percentage and E[D].
inline PresetOutput system_sweep(const ExperimentPreset& p, const std::string& column,
                                 const std::vector<double>& grid, void (*set)(SystemConfig&, double)) {
  const auto stats = parallel_map(grid.size(), [&](std::size_t j) {
    SystemConfig c = p.base;
    set(c, grid[j]);
    return simulate_point(c, p.rounds, derive_seed(p.seed, j));
  });
  std::ostringstream csv;
  std::ostringstream summary;
  csv << column << ",sim_offload_pct,theory_offload_pct,sim_mean_D,sim_mean_D_se,theory_mean_D,theory_stable\n";
  summary << p.name << ": " << p.description << "\nrounds per point = " << p.rounds << ", seed = " << p.seed
          << '\n';
  int max_sigma_point = -1;
  double max_sigma = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    SystemConfig c = p.base;
    set(c, grid[j]);
    const auto d = analytic::derive(c);
    const double theory_d = analytic::mean_total_upload_time(c).exact;
    const double theory_pct = c.arrival_rate > 0 ? 100.0 * d.expected_successes / c.arrival_rate : 0.0;
    const auto& s = stats[j];
    csv << csv::format_real(grid[j]) << ',' << csv::format_real(100.0 * s.offload_fraction()) << ','
        << csv::format_real(theory_pct) << ',' << csv::format_real(s.mean_d()) << ',' << csv::format_real(s.se_d())
        << ',' << csv::format_real(theory_d) << ',' << (theory_d <= c.round_interval ? 1 : 0) << '\n';
    const double sigma = s.se_d() > 0 ? std::fabs(s.mean_d() - theory_d) / s.se_d() : 0.0;
    if (sigma > max_sigma) {
      max_sigma = sigma;
      max_sigma_point = static_cast<int>(j);
    }
  }
  summary << "largest |sim - theory| of E[D] = " << csv::format_real(max_sigma) << " standard errors";
  if (max_sigma_point >= 0) summary << " at " << column << " = " << csv::format_real(grid[max_sigma_point]);
  summary << '\n';
  return {csv.str(), summary.str()};
}

inline PresetOutput trajectory(const ExperimentPreset& p, control::ControlTarget target) {
  sim::CampaignOptions opt;
  opt.rounds = p.rounds;
  opt.seed = p.seed;
  opt.controller = control::make_controller(target, p.base);
  const auto res = sim::run_campaign(p.base, opt);
  std::ostringstream csv;
  csv::write_round_rows(csv, res.rows);

  std::ostringstream summary;
  summary << p.name << ": " << p.description << "\nrounds = " << p.rounds << ", seed = " << p.seed << '\n';
  const std::size_t tail = res.rows.size() / 10;
  const auto last = res.rows.end() - static_cast<long>(tail);
  double mean_d = 0.0;
  for (auto it = last; it != res.rows.end(); ++it) mean_d += it->total_upload_time;
  mean_d /= static_cast<double>(std::max<std::size_t>(tail, 1));
  summary << "mean D over last 10% = " << csv::format_real(mean_d) << '\n';
  if (target == control::ControlTarget::UMax) {
    double avg = 0.0;
    for (auto it = last; it != res.rows.end(); ++it) avg += it->umax;
    avg /= static_cast<double>(std::max<std::size_t>(tail, 1));
    const auto root = analytic::solve_stable_umax(p.base);
    summary << "settled umax (mean over last 10%) = " << csv::format_real(avg) << '\n'
            << "analytic root of E[D] = Delta: " << (root ? csv::format_real(*root) : std::string("none")) << '\n';
  } else {
    std::map<int, long> counts;
    for (auto it = last; it != res.rows.end(); ++it) ++counts[it->m];
    const auto mode = std::max_element(counts.begin(), counts.end(),
                                       [](const auto& a, const auto& b) { return a.second < b.second; });
    summary << "settled m (mode over last 10%) = " << (mode == counts.end() ? 0 : mode->first) << '\n';
    for (const auto& [m, n] : counts) summary << "  m = " << m << ": " << n << " rounds\n";
    summary << "analytic largest stable M = " << analytic::solve_stable_m(p.base) << '\n';
  }
  return {csv.str(), summary.str()};
}

}  // namespace detail

/// Rows `tau,empirical,ci_low,ci_high,chernoff_bound,nu_star`.
inline std::string outage_table(const SystemConfig& c, const std::vector<sim::OutageCount>& counts, int n_max) {
  std::ostringstream csv;
  csv << "tau,empirical,ci_low,ci_high,chernoff_bound,nu_star\n";
  for (const auto& oc : counts) {
    analytic::OutageQuery q;
    q.tau = oc.tau;
    q.n_max = n_max;
    const auto b = analytic::chernoff_outage_bound(c, q);
    const auto ci = oc.interval();
    csv << csv::format_real(oc.tau) << ',' << csv::format_real(oc.probability()) << ','
        << csv::format_real(ci.low) << ',' << csv::format_real(ci.high) << ',' << csv::format_real(b.bound) << ','
        << csv::format_real(b.nu_star) << '\n';
  }
  return csv.str();
}

inline PresetOutput run_preset(const ExperimentPreset& p) {
  using detail::system_sweep;
  if (p.name == "fig3a") {
    std::vector<double> grid;
    for (int k = 1; k <= 12; ++k) grid.push_back(2.5 * k);
    return system_sweep(p, "lambda", grid, [](SystemConfig& c, double v) { c.arrival_rate = v; });
  }
  if (p.name == "fig3b") {
    std::vector<double> grid;
    for (int k = 1; k <= 10; ++k) grid.push_back(k * kDelta);
    return system_sweep(p, "mean_input", grid, [](SystemConfig& c, double v) { c.mean_input = v; });
  }
  if (p.name == "fig4a") {
    std::vector<double> grid;
    for (int m = 5; m <= 45; ++m) grid.push_back(m);
    return system_sweep(p, "M", grid, [](SystemConfig& c, double v) { c.num_rac_channels = static_cast<int>(v); });
  }
  if (p.name == "fig4b") {
    std::vector<double> grid;
    for (int k = 1; k <= 20; ++k) grid.push_back(k * kDelta);
    grid.push_back(kInf);
    return system_sweep(p, "u_max", grid, [](SystemConfig& c, double v) { c.input_cap = v; });
  }
  if (p.name == "fig5a") return detail::trajectory(p, control::ControlTarget::NumChannels);
  if (p.name == "fig5b") return detail::trajectory(p, control::ControlTarget::UMax);
  if (p.name == "fig6") {
    const auto grid = detail::tau_grid_fig6();
    const auto stats = detail::simulate_point(p.base, p.rounds, p.seed, grid);
    std::ostringstream summary;
    summary << p.name << ": " << p.description << "\nrounds = " << p.rounds << ", seed = " << p.seed
            << ", successful devices = " << stats.device_upload_time.count << ", n_max = 20\n";
    int violations = 0;
    for (const auto& oc : stats.outage) {
      analytic::OutageQuery q;
      q.tau = oc.tau;
      if (oc.probability() > analytic::chernoff_outage_bound(p.base, q).bound) ++violations;
    }
    summary << "taus where empirical exceeds bound: " << violations << '\n';
    return {outage_table(p.base, stats.outage, 20), summary.str()};
  }
  if (p.name == "fig7" || p.name == "fig8") {
    const bool by_m = p.name == "fig7";
    std::vector<double> grid;
    if (by_m) {
      for (int m = 5; m <= 45; m += 5) grid.push_back(m);
    } else {
      for (int k = 1; k <= 8; ++k) grid.push_back(0.5 * k * kDelta);
    }
    // fig8 carries a second series with U_max = 5 Delta.
    const std::size_t series = by_m ? 1 : 2;
    const auto point_config = [&](std::size_t j) {
      SystemConfig c = p.base;
      const std::size_t g = j % grid.size();
      if (by_m) {
        c.num_rac_channels = static_cast<int>(grid[g]);
      } else {
        c.mean_input = grid[g];
        if (j >= grid.size()) c.input_cap = 5 * kDelta;
      }
      return c;
    };
    const auto stats = detail::parallel_map(grid.size() * series, [&](std::size_t j) {
      return detail::simulate_point(point_config(j), p.rounds, derive_seed(p.seed, j), {kDelta});
    });
    std::ostringstream csv;
    csv << (by_m ? "M" : "mean_input");
    csv << (by_m ? ",empirical,ci_low,ci_high,chernoff_bound,nu_star\n"
                 : ",empirical_inf,ci_low_inf,ci_high_inf,chernoff_bound_inf,empirical_capped,ci_low_capped,"
                   "ci_high_capped,chernoff_bound_capped\n");
    for (std::size_t g = 0; g < grid.size(); ++g) {
      csv << csv::format_real(grid[g]);
      for (std::size_t s = 0; s < series; ++s) {
        const std::size_t j = s * grid.size() + g;
        analytic::OutageQuery q;
        q.tau = kDelta;
        const auto b = analytic::chernoff_outage_bound(point_config(j), q);
        const auto& oc = stats[j].outage.front();
        const auto ci = oc.interval();
        csv << ',' << csv::format_real(oc.probability()) << ',' << csv::format_real(ci.low) << ','
            << csv::format_real(ci.high) << ',' << csv::format_real(b.bound);
        if (by_m) csv << ',' << csv::format_real(b.nu_star);
      }
      csv << '\n';
    }
    std::ostringstream summary;
    summary << p.name << ": " << p.description << "\nrounds per point = " << p.rounds << ", seed = " << p.seed
            << ", tau = " << csv::format_real(kDelta) << '\n';
    return {csv.str(), summary.str()};
  }
  return {};
}

}  // namespace raco::presets
