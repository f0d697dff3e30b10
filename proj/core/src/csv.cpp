#include "bundlesim/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <ostream>

namespace bundlesim {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

void write_meta(std::ostream& out, std::string_view key, std::string_view value) {
  out << "# " << key << " = " << value << '\n';
}

void write_meta(std::ostream& out, std::string_view key, double value) {
  write_meta(out, key, format_double(value));
}

void write_header(std::ostream& out, const std::vector<std::string>& columns) {
  write_cells(out, columns);
}

void write_row(std::ostream& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i != 0) out << ',';
    out << format_double(values[i]);
  }
  out << '\n';
}

void write_cells(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i != 0) out << ',';
    out << cells[i];
  }
  out << '\n';
}

}  // namespace bundlesim
