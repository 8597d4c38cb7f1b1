#pragma once

// Scenario configuration and the three stochastic sources of a round:
// task arrivals, task input sizes and device SNRs.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "raco/errors.hpp"

namespace raco {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to turn (master seed, index) pairs into
/// well-separated generator seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix_seed(mix_seed(master) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(mix_seed(seed)); }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

enum class ArrivalModel { Poisson, Binomial };

enum class SnrModel {
  /// gamma = floor + Exp(mean snr_mean); the density of the truncated
  /// exponential law.
  TruncatedExponential,
  /// Ideal power control: gamma == snr_mean for every device.
  Constant,
};

struct SystemConfig {
  double total_bandwidth = 50.0;       // B
  double rac_channel_bandwidth = 1.0;  // b
  int num_rac_channels = 30;           // M
  double round_interval = 1e-3;        // Delta, seconds
  double arrival_rate = 30.0;          // lambda, new active devices per round
  ArrivalModel arrival_model = ArrivalModel::Poisson;
  long population = 0;          // G, binomial model only
  double activity_prob = 0.0;   // epsilon, binomial model only
  double mean_input = 2e-3;     // 1/mu
  double input_cap = std::numeric_limits<double>::infinity();  // U_max
  double snr_mean = 10.0;       // linear
  double snr_floor = 3.981071705534972;  // linear
  SnrModel snr_model = SnrModel::TruncatedExponential;
  std::uint64_t seed = 1;

  double offload_bandwidth() const {
    return total_bandwidth - num_rac_channels * rac_channel_bandwidth;
  }
  double input_rate() const { return 1.0 / mean_input; }
  /// Largest admissible M, floor(B/b) - 1.
  int max_rac_channels() const {
    return static_cast<int>(std::floor(total_bandwidth / rac_channel_bandwidth)) - 1;
  }
};

/// One active device in one round.
struct TaskRecord {
  double input_size = 0.0;  // U
  double snr = 0.0;         // gamma
  bool contends = false;    // U <= U_max
  int channel_pick = 0;     // 1..M, 0 when not contending
  bool success = false;     // sole contender on its channel
  int schedule_slot = 0;    // 1..S, 0 unless success
  double upload_time = 0.0; // U / (B_o log2(1 + gamma))
};

inline double upload_time(double input_size, double snr, double offload_bandwidth) {
  return input_size / (offload_bandwidth * std::log2(1.0 + snr));
}

using RawConfig = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline double parse_real(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf" || t == "infinity") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != t.size() || std::isnan(v)) {
    throw ConfigError(ConfigError::Kind::Malformed, "key '" + key + "': not a number: '" + t + "'");
  }
  return v;
}

inline long parse_integer(const std::string& key, const std::string& text) {
  const double v = parse_real(key, text);
  if (!std::isfinite(v) || v != std::floor(v) || std::fabs(v) > 9.0e15) {
    throw ConfigError(ConfigError::Kind::Malformed, "key '" + key + "': not an integer: '" + text + "'");
  }
  return static_cast<long>(v);
}

}  // namespace detail

/// Parses flat `key = value` lines. Blank lines and lines starting with '#'
/// are skipped.
inline RawConfig parse_config_text(const std::string& text) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(ConfigError::Kind::Malformed,
                        "line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(t.substr(0, eq));
    if (key.empty()) {
      throw ConfigError(ConfigError::Kind::Malformed, "line " + std::to_string(lineno) + ": empty key");
    }
    raw[key] = detail::trim(t.substr(eq + 1));
  }
  return raw;
}

inline RawConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

/// Builds a SystemConfig from raw key/value pairs. Required keys: B, M,
/// delta, lambda, mean_input, snr_mean_db, snr_floor_db. Optional: b
/// (default 1), u_max (default inf), arrival_model (poisson|binomial), G and
/// epsilon (required for binomial), seed. Non-fatal findings go to
/// `warnings`.
inline SystemConfig validate_config(const RawConfig& raw, std::vector<std::string>& warnings) {
  using Kind = ConfigError::Kind;
  const auto require = [&](const char* key) -> const std::string& {
    const auto it = raw.find(key);
    if (it == raw.end()) throw ConfigError(Kind::MissingKey, std::string("missing key '") + key + "'");
    return it->second;
  };
  const auto optional = [&](const char* key) -> const std::string* {
    const auto it = raw.find(key);
    return it == raw.end() ? nullptr : &it->second;
  };
  const auto positive = [](const char* key, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError(Kind::NonPositive, std::string("key '") + key + "' must be positive and finite");
    }
    return v;
  };

  SystemConfig c;
  c.total_bandwidth = positive("B", detail::parse_real("B", require("B")));
  if (const auto* b = optional("b")) c.rac_channel_bandwidth = positive("b", detail::parse_real("b", *b));
  c.round_interval = positive("delta", detail::parse_real("delta", require("delta")));
  c.mean_input = positive("mean_input", detail::parse_real("mean_input", require("mean_input")));

  const long m = detail::parse_integer("M", require("M"));
  if (m < 1 || m > c.max_rac_channels() ||
      !(c.total_bandwidth - static_cast<double>(m) * c.rac_channel_bandwidth > 0.0)) {
    throw ConfigError(Kind::OutOfRange, "M = " + std::to_string(m) + " leaves no offloading bandwidth (need 1 <= M <= " +
                                            std::to_string(c.max_rac_channels()) + ")");
  }
  c.num_rac_channels = static_cast<int>(m);

  c.arrival_rate = detail::parse_real("lambda", require("lambda"));
  if (!(c.arrival_rate >= 0.0) || !std::isfinite(c.arrival_rate)) {
    throw ConfigError(Kind::OutOfRange, "lambda must be finite and nonnegative");
  }

  if (const auto* u = optional("u_max")) {
    c.input_cap = detail::parse_real("u_max", *u);
    if (!(c.input_cap >= 0.0)) throw ConfigError(Kind::OutOfRange, "u_max must be nonnegative");
  }

  const double snr_mean_db = detail::parse_real("snr_mean_db", require("snr_mean_db"));
  c.snr_mean = positive("snr_mean_db", db_to_linear(snr_mean_db));
  const double snr_floor_db = detail::parse_real("snr_floor_db", require("snr_floor_db"));
  c.snr_floor = db_to_linear(snr_floor_db);
  if (!(c.snr_floor >= 0.0) || !std::isfinite(c.snr_floor)) {
    throw ConfigError(Kind::OutOfRange, "snr_floor_db must map to a finite nonnegative linear SNR");
  }

  if (const auto* am = optional("arrival_model")) {
    const std::string model = detail::trim(*am);
    if (model == "poisson") {
      c.arrival_model = ArrivalModel::Poisson;
    } else if (model == "binomial") {
      c.arrival_model = ArrivalModel::Binomial;
    } else {
      throw ConfigError(Kind::Malformed, "arrival_model must be 'poisson' or 'binomial'");
    }
  }
  if (c.arrival_model == ArrivalModel::Binomial) {
    c.population = detail::parse_integer("G", require("G"));
    c.activity_prob = detail::parse_real("epsilon", require("epsilon"));
    if (c.population < 1) throw ConfigError(Kind::OutOfRange, "G must be at least 1");
    if (!(c.activity_prob >= 0.0 && c.activity_prob <= 1.0)) {
      throw ConfigError(Kind::OutOfRange, "epsilon must lie in [0, 1]");
    }
    const double mean = static_cast<double>(c.population) * c.activity_prob;
    if (c.arrival_rate > 0.0 && std::fabs(mean - c.arrival_rate) / c.arrival_rate > 0.01) {
      warnings.push_back("G*epsilon = " + std::to_string(mean) + " differs from lambda = " +
                         std::to_string(c.arrival_rate) + " by more than 1%");
    }
  }

  if (const auto* s = optional("seed")) {
    const long seed = detail::parse_integer("seed", *s);
    if (seed < 0) throw ConfigError(Kind::OutOfRange, "seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(seed);
  }
  return c;
}

inline SystemConfig validate_config(const RawConfig& raw) {
  std::vector<std::string> ignored;
  return validate_config(raw, ignored);
}

inline int sample_arrivals(const SystemConfig& c, Rng& rng) {
  if (c.arrival_model == ArrivalModel::Binomial) {
    if (c.activity_prob <= 0.0) return 0;
    std::binomial_distribution<int> dist(static_cast<int>(c.population), c.activity_prob);
    return dist(rng);
  }
  if (c.arrival_rate <= 0.0) return 0;
  std::poisson_distribution<int> dist(c.arrival_rate);
  return dist(rng);
}

inline double sample_input_size(const SystemConfig& c, Rng& rng) {
  std::exponential_distribution<double> dist(c.input_rate());
  return dist(rng);
}

inline double sample_snr(const SystemConfig& c, Rng& rng) {
  if (c.snr_model == SnrModel::Constant) return c.snr_mean;
  std::exponential_distribution<double> dist(1.0 / c.snr_mean);
  return c.snr_floor + dist(rng);
}

}  // namespace raco
