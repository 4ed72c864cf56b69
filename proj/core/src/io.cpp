#include "srb/io.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace srb {

void CsvWriter::add_row(const std::vector<double>& values) {
  if (values.size() != columns_.size())
    throw OpError("bad-argument", "row width does not match header");
  rows_.push_back(values);
}

void CsvWriter::add_row(const Vec& values) {
  std::vector<double> row(values.data(), values.data() + values.size());
  add_row(row);
}

void CsvWriter::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw OpError("io-error", "cannot open " + path);
  for (size_t i = 0; i < columns_.size(); ++i)
    out << columns_[i] << (i + 1 < columns_.size() ? "," : "\n");
  for (const auto& row : rows_) {
    for (size_t i = 0; i < row.size(); ++i)
      out << format_full(row[i]) << (i + 1 < row.size() ? "," : "\n");
  }
}

void write_point_cloud_csv(const std::string& path, const std::vector<Vec>& points) {
  if (points.empty()) throw OpError("bad-argument", "empty point cloud");
  std::vector<std::string> cols;
  for (int i = 0; i < points.front().size(); ++i) cols.push_back("x" + std::to_string(i));
  CsvWriter w(std::move(cols));
  for (const auto& p : points) w.add_row(p);
  w.write(path);
}

std::string format_full(double x) {
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
  return s.str();
}

}  // namespace srb
