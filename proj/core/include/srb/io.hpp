#pragma once

#include <string>
#include <vector>

#include "srb/types.hpp"

namespace srb {

/// Minimal CSV writer: one header row, then one row per record.
class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add_row(const std::vector<double>& values);
  void add_row(const Vec& values);
  /// Full-roundtrip formatting (max_digits10).
  void write(const std::string& path) const;

private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

void write_point_cloud_csv(const std::string& path, const std::vector<Vec>& points);

std::string format_full(double x);

}  // namespace srb
