#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bundlesim {

/// Shortest round-trip decimal form, independent of the locale.
std::string format_double(double v);

/// "# key = value" metadata line.
void write_meta(std::ostream& out, std::string_view key, std::string_view value);
void write_meta(std::ostream& out, std::string_view key, double value);

void write_header(std::ostream& out, const std::vector<std::string>& columns);
void write_row(std::ostream& out, std::span<const double> values);

/// Row of preformatted cells.
void write_cells(std::ostream& out, const std::vector<std::string>& cells);

}  // namespace bundlesim
