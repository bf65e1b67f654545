#include "rydchain/table.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rydchain/errors.hpp"

namespace rydchain {

void TimeSeriesTable::add_column(std::string column, std::vector<double> values) {
  if (!data.empty() && values.size() != n_rows())
    throw ContractError("table " + name + ": column " + column + " has the wrong length");
  columns.push_back(std::move(column));
  data.push_back(std::move(values));
}

const std::vector<double>& TimeSeriesTable::column(const std::string& column) const {
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] == column) return data[c];
  }
  throw DataError("table " + name + " has no column " + column);
}

std::string format_value(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.9g", value);
  return buffer;
}

void write_csv(std::ostream& out, const TimeSeriesTable& table) {
  for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
  out << '\n';
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (std::size_t c = 0; c < table.data.size(); ++c) out << (c ? "," : "") << format_value(table.data[c][r]);
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const TimeSeriesTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_csv(out, table);
  if (!out) throw IoError("failed writing " + path.string());
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    out.push_back(field);
  }
  return out;
}

}  // namespace

TimeSeriesTable read_csv(std::istream& in, std::string name) {
  TimeSeriesTable table;
  table.name = std::move(name);
  std::string line;
  if (!std::getline(in, line)) throw DataError("table " + table.name + " is empty");
  table.columns = split(line);
  table.data.resize(table.columns.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line);
    if (fields.size() != table.columns.size())
      throw DataError("table " + table.name + ":" + std::to_string(line_no) + ": wrong number of fields");
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v = 0.0;
      const auto* first = fields[c].data();
      const auto* last = first + fields[c].size();
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last)
        throw DataError("table " + table.name + ":" + std::to_string(line_no) + ": not a number: " + fields[c]);
      table.data[c].push_back(v);
    }
  }
  return table;
}

TimeSeriesTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_csv(in, path.stem().string());
}

}  // namespace rydchain
