#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sc::io {

/// 17 significant digits, so every double round-trips exactly; -0 prints as 0.
std::string format_double(double x);

/// Column table written as CSV with a header row; all columns must have the same length.
struct Table {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  void add(std::string name, std::vector<double> values);
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  const std::vector<double>& column(const std::string& name) const;  ///< throws Config when absent
};

std::string to_csv(const Table& t);
Table read_csv(const std::filesystem::path& path);

/// Writes through a temporary file in the same directory and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

std::string sha256_hex(const std::string& data);

}  // namespace sc::io
