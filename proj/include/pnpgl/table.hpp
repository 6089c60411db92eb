#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pnpgl/matrix.hpp"

namespace pnpgl {

using Cell = std::variant<double, std::string>;

// Column-named table written as CSV: comma separator, header row, doubles in
// the shortest form that parses back to the same value.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
  std::size_t column_index(std::string_view name) const;
  // Numeric column; throws if any cell in it is text.
  Vector column(std::string_view name) const;
  double number(std::size_t row, std::string_view name) const;
  const std::string& text(std::size_t row, std::string_view name) const;

  std::string to_csv() const;
  // Cells that parse completely as doubles become numbers.
  static Table from_csv(std::string_view csv);

  friend bool operator==(const Table&, const Table&) = default;
};

std::string format_double(double v);

}  // namespace pnpgl
