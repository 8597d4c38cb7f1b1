#pragma once

// Subcommand implementations behind the `raco` binary. Each returns the
// process exit code and writes to caller-supplied streams.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "raco/analytic.hpp"
#include "raco/control.hpp"
#include "raco/csv.hpp"
#include "raco/errors.hpp"
#include "raco/model.hpp"
#include "raco/presets.hpp"
#include "raco/simulator.hpp"

namespace raco::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kIoError = 3, kUnknownPreset = 4 };

struct SimulateArgs {
  std::string config_path;
  long rounds = 1000;
  std::optional<std::uint64_t> seed;
  std::string out;  // empty: CSV on the output stream
  bool work_conserving = false;
};

struct AdaptArgs {
  std::string config_path;
  std::string target = "umax";  // umax | m
  long rounds = 10000;
  std::optional<double> gain;
  std::optional<double> kappa;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct OutageArgs {
  std::string config_path;
  std::vector<double> tau_grid;
  long rounds = 100000;
  std::optional<std::uint64_t> seed;
  std::string out;
  int n_max = 20;
};

namespace detail {

inline SystemConfig load(const std::string& path, std::ostream& err) {
  std::vector<std::string> warnings;
  auto c = validate_config(load_config_file(path), warnings);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  return c;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << content;
  if (!f) throw IoError("failed writing '" + path + "'");
}

/// Sends CSV to `path` if given, else to `out`.
inline void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty()) {
    out << content;
  } else {
    write_file(path, content);
  }
}

/// Maps exceptions onto the exit-code contract.
template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace detail

/// Key/value summary of the closed-form quantities for one scenario.
inline std::string analytic_summary(const SystemConfig& c) {
  const auto d = analytic::derive(c);
  const auto mean = analytic::mean_total_upload_time(c);
  const auto stab = analytic::is_stable(c);
  std::ostringstream os;
  os << "offload_bandwidth = " << csv::format_real(d.offload_bandwidth) << '\n'
     << "offload_probability = " << csv::format_real(d.offload_prob) << '\n'
     << "conditional_input_rate = " << csv::format_real(d.conditional_rate) << '\n'
     << "expected_successes = " << csv::format_real(d.expected_successes) << '\n'
     << "mean_total_upload_time = " << csv::format_real(mean.exact) << '\n'
     << "mean_total_upload_time_bound_l1 = " << csv::format_real(mean.bound_l1) << '\n'
     << "mean_total_upload_time_bound_l1b = " << csv::format_real(mean.bound_l1b) << '\n'
     << "stable = " << (stab.stable ? "true" : "false") << '\n'
     << "stability_margin = " << csv::format_real(stab.margin) << '\n'
     << "intra_delay_rate = " << csv::format_real(d.intra_delay_rate) << '\n';
  return os.str();
}

inline int cmd_analytic(const std::string& config_path, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto c = detail::load(config_path, err);
    out << analytic_summary(c);
    return kOk;
  });
}

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    auto c = detail::load(a.config_path, err);
    if (a.rounds < 1) throw ConfigError(ConfigError::Kind::OutOfRange, "--rounds must be at least 1");
    if (a.seed) c.seed = *a.seed;
    sim::CampaignOptions opt;
    opt.rounds = a.rounds;
    opt.seed = c.seed;
    opt.accounting = a.work_conserving ? sim::AccountingMode::WorkConserving : sim::AccountingMode::Backlog;
    const auto res = sim::run_campaign(c, opt);
    std::ostringstream csv;
    csv::write_round_rows(csv, res.rows);
    detail::emit(a.out, csv.str(), out);
    if (!a.out.empty()) {
      const auto& s = res.stats;
      out << "rounds = " << s.rounds() << '\n'
          << "mean_D = " << csv::format_real(s.mean_d()) << '\n'
          << "se_D = " << csv::format_real(s.se_d()) << '\n'
          << "mean_S = " << csv::format_real(s.mean_s()) << '\n'
          << "offload_fraction = " << csv::format_real(s.offload_fraction()) << '\n'
          << "max_backlog = " << csv::format_real(s.max_backlog) << '\n';
    }
    return kOk;
  });
}

inline int cmd_adapt(const AdaptArgs& a, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    auto c = detail::load(a.config_path, err);
    if (a.rounds < 1) throw ConfigError(ConfigError::Kind::OutOfRange, "--rounds must be at least 1");
    if (a.target != "umax" && a.target != "m") {
      throw ConfigError(ConfigError::Kind::Malformed, "--target must be 'umax' or 'm'");
    }
    if (a.seed) c.seed = *a.seed;
    const auto target = a.target == "umax" ? control::ControlTarget::UMax : control::ControlTarget::NumChannels;
    sim::CampaignOptions opt;
    opt.rounds = a.rounds;
    opt.seed = c.seed;
    opt.controller = control::make_controller(target, c, a.gain, a.kappa);
    const auto res = sim::run_campaign(c, opt);
    std::ostringstream csv;
    csv::write_round_rows(csv, res.rows);
    detail::emit(a.out, csv.str(), out);

    const std::size_t tail = std::max<std::size_t>(res.rows.size() / 10, 1);
    double settled = 0.0;
    std::map<int, long> modes;
    for (std::size_t j = res.rows.size() - tail; j < res.rows.size(); ++j) {
      settled += target == control::ControlTarget::UMax ? res.rows[j].umax : res.rows[j].m;
      ++modes[res.rows[j].m];
    }
    settled /= static_cast<double>(tail);
    std::ostream& summary = a.out.empty() ? err : out;
    summary << "settled_" << a.target << " = " << csv::format_real(settled) << '\n';
    if (target == control::ControlTarget::NumChannels) {
      const auto mode = std::max_element(modes.begin(), modes.end(),
                                         [](const auto& x, const auto& y) { return x.second < y.second; });
      summary << "settled_m_mode = " << mode->first << '\n';
    }
    return kOk;
  });
}

inline int cmd_outage(const OutageArgs& a, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    auto c = detail::load(a.config_path, err);
    if (a.tau_grid.empty()) throw ConfigError(ConfigError::Kind::MissingKey, "--tau-grid is empty");
    for (const double t : a.tau_grid) {
      if (!(t > 0.0)) throw ConfigError(ConfigError::Kind::NonPositive, "tau values must be positive");
    }
    if (a.seed) c.seed = *a.seed;
    const auto counts = sim::measure_outage(c, a.tau_grid, a.rounds, c.seed);
    detail::emit(a.out, presets::outage_table(c, counts, a.n_max), out);
    return kOk;
  });
}

inline int cmd_reproduce(const std::string& name, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const auto preset = presets::find_preset(name);
  if (!preset) {
    err << "unknown preset '" << name << "'; known:";
    for (const auto& p : presets::all_presets()) err << ' ' << p.name;
    err << '\n';
    return kUnknownPreset;
  }
  return detail::guarded(err, [&] {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create directory '" + out_dir + "': " + ec.message());
    const auto result = presets::run_preset(*preset);
    const auto base = std::filesystem::path(out_dir) / name;
    detail::write_file(base.string() + ".csv", result.csv);
    detail::write_file(base.string() + ".summary.txt", result.summary);
    out << result.summary;
    return kOk;
  });
}

inline std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (raco::detail::trim(item).empty()) continue;
    values.push_back(raco::detail::parse_real("tau-grid", item));
  }
  return values;
}

}  // namespace raco::cli
