#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dpe::csv {

/// Shortest round-trip decimal representation; independent of the C locale.
std::string format(double v);

/// Quotes a field when it contains a comma, quote or newline.
std::string escape(std::string_view field);

void write_row(std::ostream& os, std::span<const std::string> fields);
void write_row(std::ostream& os, std::span<const double> values);

/// "# key = value" preamble lines.
void write_comments(std::ostream& os, std::span<const std::pair<std::string, std::string>> entries);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(std::string_view name) const;
};

/// Reads a numeric table with a mandatory header row; '#' lines are skipped.
Table read(std::istream& is);

double parse_double(std::string_view text);

}  // namespace dpe::csv
