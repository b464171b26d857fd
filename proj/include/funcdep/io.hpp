#pragma once

// Curve matrices on disk: rows are subjects, columns are grid points on the
// regular grid t_l = (l-1)/m. An optional first row holds the grid times.

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "funcdep/baselines.hpp"
#include "funcdep/errors.hpp"

namespace funcdep {

enum class HeaderMode { Auto, Present, Absent };

struct CurveTable {
  CurveMatrix values;
  std::optional<std::vector<double>> grid;  // header row, when present
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

inline std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::string location(const std::string& source, std::size_t row, std::size_t col) {
  return source + ":" + std::to_string(row) + ":" + std::to_string(col);
}

}  // namespace detail

/// Parses CSV text. `source` labels error locations (1-based row:column).
inline CurveTable parse_curve_csv(std::string_view text, const std::string& source = "<input>",
                                  HeaderMode header = HeaderMode::Auto) {
  std::vector<std::vector<double>> rows;
  std::optional<std::vector<double>> grid;
  std::size_t width = 0, line_no = 0, start = 0;
  bool first = true;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? end : end - start);
    start = (end == std::string_view::npos) ? text.size() + 1 : end + 1;
    ++line_no;
    if (detail::trim(line).empty()) continue;

    auto fields = detail::split_fields(line);
    std::vector<double> values(fields.size());
    std::optional<std::size_t> bad_col;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      auto v = detail::parse_number(fields[c]);
      if (!v) {
        if (!bad_col) bad_col = c + 1;
      } else {
        values[c] = *v;
      }
    }
    const bool is_header = first && (header == HeaderMode::Present || (header == HeaderMode::Auto && bad_col));
    if (first) first = false;
    if (is_header) {
      width = fields.size();
      if (!bad_col) grid = values;
      continue;
    }
    if (bad_col)
      throw Error(ErrorKind::ParseError,
                  detail::location(source, line_no, *bad_col) + ": not a number: '" +
                      std::string(fields[*bad_col - 1]) + "'");
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      throw Error(ErrorKind::ParseError, detail::location(source, line_no, std::min(fields.size(), width) + 1) +
                                             ": expected " + std::to_string(width) + " columns, found " +
                                             std::to_string(fields.size()));
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw Error(ErrorKind::InsufficientData, source + ": no data rows");

  CurveTable table;
  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < width; ++c)
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  table.grid = std::move(grid);
  return table;
}

inline CurveTable read_curve_csv(const std::string& path, HeaderMode header = HeaderMode::Auto) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_curve_csv(ss.str(), path, header);
}

/// Throws InvalidGrid unless the header times are (l-1)/m, l = 1..m.
inline void check_regular_grid(const std::vector<double>& grid, const std::string& source) {
  const double m = static_cast<double>(grid.size());
  for (std::size_t l = 0; l < grid.size(); ++l)
    if (std::abs(grid[l] - static_cast<double>(l) / m) > 1e-6)
      throw Error(ErrorKind::InvalidGrid, source + ": grid times are not the regular grid (l-1)/m");
}

/// Largest power of two not exceeding m.
inline std::size_t lower_power_of_two(std::size_t m) { return m == 0 ? 0 : std::bit_floor(m); }

/// Linear interpolation of each row from the grid (l-1)/m onto (l-1)/target.
inline CurveMatrix resample_linear(const CurveMatrix& x, std::size_t target) {
  const Eigen::Index m = x.cols();
  if (target < 2 || m < 2) throw Error(ErrorKind::InvalidGrid, "resampling needs at least two grid points");
  CurveMatrix out(x.rows(), static_cast<Eigen::Index>(target));
  for (std::size_t l = 0; l < target; ++l) {
    const double pos = static_cast<double>(l) * static_cast<double>(m) / static_cast<double>(target);
    Eigen::Index lo = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(pos)), m - 1);
    const double frac = pos - static_cast<double>(lo);
    const Eigen::Index hi = std::min<Eigen::Index>(lo + 1, m - 1);
    out.col(static_cast<Eigen::Index>(l)) = (1.0 - frac) * x.col(lo) + frac * x.col(hi);
  }
  return out;
}

inline void write_curve_csv(std::ostream& out, const CurveMatrix& x) {
  const auto old = out.precision(17);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index l = 0; l < x.cols(); ++l) {
      if (l) out << ',';
      out << x(i, l);
    }
    out << '\n';
  }
  out.precision(old);
}

}  // namespace funcdep
