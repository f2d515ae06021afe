#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace dpmag::csv {

using Cell = std::variant<double, long long, std::string>;

/// Formats a double with 17 significant digits ("%.17g").
std::string format_double(double x);

/// Comma-separated table with a fixed header. Doubles are written with 17
/// significant digits so values round-trip exactly.
class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<Cell> row);
  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }

  std::string to_string() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

/// Numeric view of a CSV file, columns looked up by header name.
class NumericTable {
 public:
  static NumericTable read(const std::filesystem::path& path);
  static NumericTable parse(const std::string& text);

  bool has_column(const std::string& name) const;
  /// Throws std::invalid_argument if the column is missing.
  std::vector<double> column(const std::string& name) const;
  std::size_t rows() const { return cells_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> cells_;
};

}  // namespace dpmag::csv
