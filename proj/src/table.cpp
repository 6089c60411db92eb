#include "pnpgl/table.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "pnpgl/error.hpp"

namespace pnpgl {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size())
    throw InvalidArgument("Table::add_row: row has " + std::to_string(row.size()) +
                          " cells, table has " + std::to_string(columns.size()) + " columns");
  rows.push_back(std::move(row));
}

std::size_t Table::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw InvalidArgument("Table: no column named '" + std::string(name) + "'");
}

Vector Table::column(std::string_view name) const {
  const std::size_t c = column_index(name);
  Vector out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    const double* v = std::get_if<double>(&r[c]);
    if (v == nullptr) throw InvalidArgument("Table: column '" + std::string(name) + "' is text");
    out.push_back(*v);
  }
  return out;
}

double Table::number(std::size_t row, std::string_view name) const {
  return std::get<double>(rows.at(row).at(column_index(name)));
}

const std::string& Table::text(std::size_t row, std::string_view name) const {
  return std::get<std::string>(rows.at(row).at(column_index(name)));
}

namespace {

void append_field(std::string& out, std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) {
    out += s;
    return;
  }
  out += '"';
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

std::vector<std::vector<std::string>> split_csv(std::string_view csv) {
  std::vector<std::vector<std::string>> lines;
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < csv.size(); ++i) {
    const char c = csv[i];
    any = true;
    if (quoted) {
      if (c == '"') {
        if (i + 1 < csv.size() && csv[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\n') {
      fields.push_back(std::move(cur));
      cur.clear();
      lines.push_back(std::move(fields));
      fields.clear();
      any = false;
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw ParseError("CSV: unterminated quoted field");
  if (any) {
    fields.push_back(std::move(cur));
    lines.push_back(std::move(fields));
  }
  return lines;
}

}  // namespace

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    append_field(out, columns[i]);
  }
  out += '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      if (const double* v = std::get_if<double>(&r[i]))
        out += format_double(*v);
      else
        append_field(out, std::get<std::string>(r[i]));
    }
    out += '\n';
  }
  return out;
}

Table Table::from_csv(std::string_view csv) {
  auto lines = split_csv(csv);
  if (lines.empty()) throw ParseError("CSV: missing header row");
  Table t;
  t.columns = std::move(lines.front());
  for (std::size_t l = 1; l < lines.size(); ++l) {
    if (lines[l].size() != t.columns.size())
      throw ParseError("CSV: row " + std::to_string(l) + " has the wrong number of fields");
    std::vector<Cell> row;
    for (const std::string& f : lines[l]) {
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (!f.empty() && res.ec == std::errc() && res.ptr == f.data() + f.size())
        row.emplace_back(v);
      else
        row.emplace_back(f);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace pnpgl
