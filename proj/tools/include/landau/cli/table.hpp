#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace landau::cli {

/// A CSV file held as text cells; numeric access parses on demand.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t size() const { return rows.size(); }
  /// Throws std::out_of_range for a missing column.
  std::size_t column_index(const std::string& name) const;
  /// NaN for empty or non-numeric cells.
  double value(std::size_t row, const std::string& name) const;
  std::vector<double> column(const std::string& name) const;
};

Table read_csv(const std::filesystem::path& path);

}  // namespace landau::cli
