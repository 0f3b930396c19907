#include "scomb/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "scomb/errors.hpp"

namespace scomb::csv {

int Table::column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
}

namespace {

// Splits one logical CSV record starting at `pos`; advances `pos` past the
// record terminator. Quoted fields may contain commas, newlines, and doubled
// quotes.
std::vector<std::string> parse_record(const std::string& text, size_t& pos) {
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    while (pos < text.size()) {
        char c = text[pos];
        if (in_quotes) {
            if (c == '"') {
                if (pos + 1 < text.size() && text[pos + 1] == '"') {
                    field.push_back('"');
                    pos += 2;
                } else {
                    in_quotes = false;
                    ++pos;
                }
            } else {
                field.push_back(c);
                ++pos;
            }
            continue;
        }
        if (c == '"' && field.empty()) {
            in_quotes = true;
            ++pos;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            ++pos;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
            ++pos;
            fields.push_back(std::move(field));
            return fields;
        } else {
            field.push_back(c);
            ++pos;
        }
    }
    if (in_quotes) fail(Errc::parse_error, "unterminated quoted field");
    fields.push_back(std::move(field));
    return fields;
}

}  // namespace

Table parse(const std::string& text) {
    Table t;
    size_t pos = 0;
    if (text.empty()) fail(Errc::parse_error, "empty csv input");
    t.header = parse_record(text, pos);
    size_t line = 2;
    while (pos < text.size()) {
        auto fields = parse_record(text, pos);
        // A trailing newline produces one empty field; skip blank records.
        if (fields.size() == 1 && fields[0].empty()) {
            ++line;
            continue;
        }
        if (fields.size() != t.header.size()) {
            fail(Errc::parse_error, "line " + std::to_string(line) + ": expected " +
                                        std::to_string(t.header.size()) + " fields, got " +
                                        std::to_string(fields.size()));
        }
        t.rows.push_back(std::move(fields));
        ++line;
    }
    return t;
}

Table read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_error, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) fail(Errc::io_error, "read failed for " + path);
    try {
        return parse(buf.str());
    } catch (const Error& e) {
        if (e.code() == Errc::parse_error) fail(Errc::parse_error, path + ": " + e.what());
        throw;
    }
}

std::string escape_field(const std::string& field) {
    bool needs_quotes = false;
    for (char c : field) {
        if (c == ',' || c == '"' || c == '\n' || c == '\r') {
            needs_quotes = true;
            break;
        }
    }
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    return buf;
}

void write_file(const std::string& path, const Table& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io_error, "cannot open " + path + " for writing");
    auto emit_row = [&out](const std::vector<std::string>& row) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << escape_field(row[i]);
        }
        out << '\n';
    };
    emit_row(table.header);
    for (const auto& row : table.rows) emit_row(row);
    if (!out) fail(Errc::io_error, "write failed for " + path);
}

}  // namespace scomb::csv
