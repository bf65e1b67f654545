#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace rydchain {

/// Column-oriented numeric table. The first column is the abscissa (τ in µs
/// for time series); the rest are observables sampled on it.
struct TimeSeriesTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;  // data[c][row]

  std::size_t n_rows() const { return data.empty() ? 0 : data.front().size(); }
  std::size_t n_columns() const { return columns.size(); }

  void add_column(std::string column, std::vector<double> values);
  /// Values of the named column; throws DataError if absent.
  const std::vector<double>& column(const std::string& column) const;
};

/// Comma-separated text: one header row, then one line per row with 9
/// significant digits.
void write_csv(std::ostream& out, const TimeSeriesTable& table);
void write_csv(const std::filesystem::path& path, const TimeSeriesTable& table);

TimeSeriesTable read_csv(std::istream& in, std::string name = {});
TimeSeriesTable read_csv(const std::filesystem::path& path);

/// Formats a value as written to tables ("%.9g").
std::string format_value(double value);

}  // namespace rydchain
