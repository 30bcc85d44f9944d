#include "hilma/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <system_error>

#include "hilma/errors.hpp"

namespace hilma {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_cell(const std::string& field, int line_no) {
  if (field.empty()) return std::numeric_limits<double>::quiet_NaN();
  double value = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw DataError("line " + std::to_string(line_no) + ": cannot parse '" +
                    field + "' as a number");
  }
  return value;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (int j = 0; j < n_cols(); ++j) {
    if (names[static_cast<std::size_t>(j)] == name) return j;
  }
  return -1;
}

CsvTable csv_parse(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      table.names = split_fields(line);
      for (std::size_t j = 0; j < table.names.size(); ++j) {
        if (table.names[j].empty()) {
          throw DataError("line 1: header field " + std::to_string(j + 1) +
                          " is empty");
        }
      }
      continue;
    }
    if (line.empty()) continue;  // tolerate a trailing blank line
    const auto fields = split_fields(line);
    if (fields.size() != table.names.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(table.names.size()) + " fields, found " +
                      std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      row[j] = parse_cell(fields[j], line_no);
    }
    table.rows.push_back(std::move(row));
  }
  if (line_no == 0) throw DataError("empty input: a header row is required");
  return table;
}

CsvTable csv_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return csv_parse(buffer.str());
}

std::string format_double(double value) {
  std::array<char, 32> buf;
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw UsageError("cannot format value");
  return std::string(buf.data(), ptr);
}

std::string csv_format(const CsvTable& table) {
  std::string out;
  for (std::size_t j = 0; j < table.names.size(); ++j) {
    if (j) out += ',';
    out += table.names[j];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.names.size()) {
      throw UsageError("table row has " + std::to_string(row.size()) +
                       " cells but the header has " +
                       std::to_string(table.names.size()));
    }
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      if (!std::isnan(row[j])) out += format_double(row[j]);
    }
    out += '\n';
  }
  return out;
}

void csv_write(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << csv_format(table);
  if (!out) throw DataError("write to '" + path + "' failed");
}

TableAsDataset dataset_from_table(const CsvTable& table,
                                  const std::string& response_name) {
  const int yc = table.column(response_name);
  if (yc < 0) {
    std::string cols;
    for (std::size_t j = 0; j < table.names.size(); ++j) {
      if (j) cols += ", ";
      cols += table.names[j];
    }
    throw DataError("no column named '" + response_name + "' (columns: " +
                    cols + ")");
  }
  const int n = table.n_rows();
  if (n == 0) throw DataError("the file holds no data rows");
  const int p = table.n_cols() - 1;
  Matrix covariates(n, p);
  Vector response(n);
  for (int i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    int jj = 0;
    for (int j = 0; j < table.n_cols(); ++j) {
      const double cell = row[static_cast<std::size_t>(j)];
      if (j == yc) {
        response[i] = cell;
        continue;
      }
      if (std::isnan(cell)) {
        throw DataError("line " + std::to_string(i + 2) + ": covariate '" +
                        table.names[static_cast<std::size_t>(j)] +
                        "' is missing; only the response may have empty cells");
      }
      covariates(i, jj++) = cell;
    }
  }
  auto [data, order] = reorder_observed_first(covariates, response);
  return TableAsDataset{std::move(data), std::move(order), yc};
}

}  // namespace hilma
