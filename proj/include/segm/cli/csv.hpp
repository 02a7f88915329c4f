#pragma once

#include <segm/dataset.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace segm::cli {

using CsvRow = std::vector<std::string>;

// RFC 4180 records: comma separated, double-quoted fields with "" escapes,
// LF or CRLF line ends. A leading UTF-8 BOM is skipped.
std::vector<CsvRow> parse_csv(std::istream& in);

// First record is the header; every later cell must be a finite number.
// Errors give 1-based file row and column.
Dataset read_dataset(std::istream& in);
Dataset load_csv(const std::string& path);

std::string csv_field(const std::string& s);
// Shortest round-trip decimal form.
std::string format_number(double v);

void write_csv_row(std::ostream& out, const CsvRow& row);
void write_dataset(std::ostream& out, const Dataset& data);

}  // namespace segm::cli
