#pragma once

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "raco/simulator.hpp"

namespace raco::csv {

/// Shortest round-trip decimal form; integral values keep a trailing ".0"
/// so real-valued columns never read back as integers.
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

inline constexpr const char* kRoundHeader = "round,K,W,S,D,X,backlog,umax,m";

namespace detail {

struct ColumnStat {
  sim::RunningStat stat;
  double first = 0.0;
  bool constant = true;

  void push(double v) {
    if (stat.count == 0) {
      first = v;
    } else if (v != first) {
      constant = false;
    }
    if (std::isfinite(v)) stat.push(v);
  }
  double mean() const { return constant ? first : stat.mean; }
  double se() const { return constant ? 0.0 : stat.standard_error(); }
};

}  // namespace detail

/// Per-round rows followed by a `mean` and a `stderr` summary row.
inline void write_round_rows(std::ostream& os, const std::vector<sim::CsvRow>& rows) {
  os << kRoundHeader << '\n';
  detail::ColumnStat cols[8];
  for (const auto& r : rows) {
    os << r.round << ',' << r.active << ',' << r.contenders << ',' << r.successes << ','
       << format_real(r.total_upload_time) << ',' << format_real(r.x) << ',' << format_real(r.backlog) << ','
       << format_real(r.umax) << ',' << r.m << '\n';
    const double values[8] = {static_cast<double>(r.active), static_cast<double>(r.contenders),
                              static_cast<double>(r.successes), r.total_upload_time, r.x, r.backlog, r.umax,
                              static_cast<double>(r.m)};
    for (int j = 0; j < 8; ++j) cols[j].push(values[j]);
  }
  if (rows.empty()) return;
  os << "mean";
  for (const auto& c : cols) os << ',' << format_real(c.mean());
  os << "\nstderr";
  for (const auto& c : cols) os << ',' << format_real(c.se());
  os << '\n';
}

}  // namespace raco::csv
