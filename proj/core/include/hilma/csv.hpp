#pragma once

#include <string>
#include <vector>

#include "hilma/dataset.hpp"
#include "hilma/types.hpp"

namespace hilma {

// A parsed CSV file: comma-separated, '.' decimal point, a mandatory header
// row, one numeric value per cell, empty cell = missing (stored as NaN).
struct CsvTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;

  int n_rows() const { return static_cast<int>(rows.size()); }
  int n_cols() const { return static_cast<int>(names.size()); }
  // Index of a named column, -1 when absent.
  int column(const std::string& name) const;
};

// Parse/serialize. Parse errors throw DataError naming the 1-based line.
CsvTable csv_parse(const std::string& text);
CsvTable csv_read(const std::string& path);
std::string csv_format(const CsvTable& table);
void csv_write(const std::string& path, const CsvTable& table);

// Shortest decimal representation that parses back to exactly this value.
std::string format_double(double value);

// A table viewed as modelling data: the named column is the response (empty
// cells are the missing responses), every other column is a covariate and
// must be complete. Rows are reordered observed-first; source_row maps a
// dataset row back to its 0-based data row in the table.
struct TableAsDataset {
  Dataset data;
  std::vector<int> source_row;
  int response_column = 0;
};

TableAsDataset dataset_from_table(const CsvTable& table,
                                  const std::string& response_name);

}  // namespace hilma
