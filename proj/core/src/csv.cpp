#include "dpmag/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dpmag::csv {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != header_.size()) {
    throw std::invalid_argument("csv row has " + std::to_string(row.size()) + " cells, header has " +
                                std::to_string(header_.size()));
  }
  rows_.push_back(std::move(row));
}

std::string Table::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i) out += ',';
    out += header_[i];
  }
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              out += format_double(v);
            } else if constexpr (std::is_same_v<T, long long>) {
              out += std::to_string(v);
            } else {
              out += v;
            }
          },
          row[i]);
    }
    out += '\n';
  }
  return out;
}

void Table::write(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << to_string();
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

NumericTable NumericTable::read(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::invalid_argument("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

NumericTable NumericTable::parse(const std::string& text) {
  NumericTable t;
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("csv: empty input");
  t.header_ = split(line);
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    auto cells = split(line);
    if (cells.size() != t.header_.size()) throw std::invalid_argument("csv: ragged row");
    t.cells_.push_back(std::move(cells));
  }
  return t;
}

bool NumericTable::has_column(const std::string& name) const {
  for (const auto& h : header_) {
    if (h == name) return true;
  }
  return false;
}

std::vector<double> NumericTable::column(const std::string& name) const {
  std::size_t idx = header_.size();
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) idx = i;
  }
  if (idx == header_.size()) throw std::invalid_argument("csv: missing column '" + name + "'");
  std::vector<double> out;
  out.reserve(cells_.size());
  for (const auto& row : cells_) {
    try {
      out.push_back(std::stod(row[idx]));
    } catch (const std::exception&) {
      throw std::invalid_argument("csv: non-numeric value '" + row[idx] + "' in column " + name);
    }
  }
  return out;
}

}  // namespace dpmag::csv
