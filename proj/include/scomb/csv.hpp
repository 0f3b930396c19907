#pragma once

#include <string>
#include <vector>

namespace scomb::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index for a header name, or -1.
    int column(const std::string& name) const;
};

/// Read a comma-separated UTF-8 file with a mandatory header row.
/// Handles double-quoted fields with embedded commas/quotes and both
/// LF and CRLF line endings.
Table read_file(const std::string& path);

Table parse(const std::string& text);

/// Quote a field if it contains a comma, quote, or newline.
std::string escape_field(const std::string& field);

/// Fixed, locale-independent float formatting used for every CSV the
/// library writes; %.15g keeps re-parsed values within 1e-12 relative.
std::string format_double(double v);

void write_file(const std::string& path, const Table& table);

}  // namespace scomb::csv
