#include <segm/cli/csv.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace segm::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::string cell_name(std::size_t row, std::size_t col, const CsvRow& header) {
    std::string out = "row " + std::to_string(row) + ", column " + std::to_string(col);
    if (col >= 1 && col <= header.size()) out += " ('" + header[col - 1] + "')";
    return out;
}

}  // namespace

std::vector<CsvRow> parse_csv(std::istream& in) {
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);

    std::vector<CsvRow> rows;
    CsvRow row;
    std::string field;
    bool quoted = false, field_started = false;
    std::size_t line = 1;
    auto end_field = [&] {
        row.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        // Blank lines are skipped.
        if (!(row.size() == 1 && row[0].empty())) rows.push_back(row);
        row.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
            continue;
        } else if (c == '\n') {
            end_row();
            ++line;
        } else {
            field += c;
            field_started = true;
        }
    }
    if (quoted) throw DataError("unterminated quoted field near line " + std::to_string(line));
    if (!field.empty() || !row.empty()) end_row();
    return rows;
}

Dataset read_dataset(std::istream& in) {
    auto rows = parse_csv(in);
    if (rows.empty()) throw DataError("empty CSV: no header row");
    CsvRow header = rows.front();
    for (auto& h : header) h = trim(h);
    if (rows.size() == 1) throw DataError("no data rows");
    const std::size_t d = header.size();
    const std::size_t n = rows.size() - 1;
    if (n < 2) throw DataError("need at least 2 data rows, got " + std::to_string(n));
    if (d < 2) throw DataError("need at least 2 columns, got " + std::to_string(d));

    Matrix values(static_cast<Index>(n), static_cast<Index>(d));
    for (std::size_t r = 0; r < n; ++r) {
        const CsvRow& row = rows[r + 1];
        // File row numbers count the header as row 1.
        const std::size_t file_row = r + 2;
        if (row.size() != d)
            throw DataError("row " + std::to_string(file_row) + " has " + std::to_string(row.size()) +
                            " fields, expected " + std::to_string(d));
        for (std::size_t c = 0; c < d; ++c) {
            const std::string cell = trim(row[c]);
            double v = 0.0;
            const char* first = cell.data();
            const char* last = first + cell.size();
            if (!cell.empty() && *first == '+') ++first;
            auto [ptr, ec] = std::from_chars(first, last, v);
            if (cell.empty() || ec != std::errc() || ptr != last)
                throw DataError(cell_name(file_row, c + 1, header) + ": non-numeric value '" + cell + "'");
            if (!std::isfinite(v))
                throw DataError(cell_name(file_row, c + 1, header) + ": non-finite value '" + cell + "'");
            values(static_cast<Index>(r), static_cast<Index>(c)) = v;
        }
    }
    return Dataset(std::move(values), std::move(header));
}

Dataset load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open input file '" + path + "'");
    return read_dataset(in);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_csv_row(std::ostream& out, const CsvRow& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out << ',';
        out << csv_field(row[c]);
    }
    out << '\n';
}

void write_dataset(std::ostream& out, const Dataset& data) {
    write_csv_row(out, data.column_names());
    for (Index r = 0; r < data.n(); ++r) {
        CsvRow row;
        row.reserve(static_cast<std::size_t>(data.d()));
        for (Index c = 0; c < data.d(); ++c) row.push_back(format_number(data.values()(r, c)));
        write_csv_row(out, row);
    }
}

}  // namespace segm::cli
