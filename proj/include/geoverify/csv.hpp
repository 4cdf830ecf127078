#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "geoverify/error.hpp"

namespace geoverify::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
inline std::vector<std::string> split(std::string_view line, std::size_t row = 0) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char ch = line[k];
        if (quoted) {
            if (ch == '"') {
                if (k + 1 < line.size() && line[k + 1] == '"') {
                    cur.push_back('"');
                    ++k;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    if (quoted) throw ParseError(row, "unterminated quoted field");
    fields.push_back(std::move(cur));
    return fields;
}

inline std::string quote(std::string_view field) {
    if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += "\"\"";
        else out.push_back(ch);
    }
    out += '"';
    return out;
}

inline std::string join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t k = 0; k < fields.size(); ++k) {
        if (k) out += ',';
        out += quote(fields[k]);
    }
    return out;
}

/// Six significant digits; non-finite values print as inf / -inf / nan.
inline std::string format_g6(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

/// Full round-trip precision, for coordinates written by the toolkit.
inline std::string format_exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  // 1-based data row index per row

    std::size_t column(std::string_view name) const {
        for (std::size_t k = 0; k < header.size(); ++k) {
            if (header[k] == name) return k;
        }
        throw ParseError(0, "missing column '" + std::string(name) + "'");
    }
};

/// Reads a UTF-8 CSV with a header row. Lines starting with '#' and blank
/// lines are skipped. Data rows are numbered from 1 after the header.
inline Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    Table t;
    std::string line;
    bool have_header = false;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (!have_header) {
            t.header = split(line, 0);
            have_header = true;
            continue;
        }
        ++row;
        auto fields = split(line, row);
        if (fields.size() != t.header.size())
            throw ParseError(row, "expected " + std::to_string(t.header.size()) + " fields, got " +
                                      std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
        t.line_numbers.push_back(row);
    }
    if (!have_header) throw ParseError(0, path.string() + ": missing header row");
    return t;
}

/// "# params: key=value key=value ..." in key order.
inline std::string params_line(const std::map<std::string, std::string>& params) {
    std::string out = "# params:";
    for (const auto& [k, v] : params) out += " " + k + "=" + v;
    return out;
}

inline double parse_double(const std::string& s, std::size_t row, std::string_view what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::logic_error&) {
        throw ParseError(row, "bad " + std::string(what) + " '" + s + "'");
    }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

}  // namespace geoverify::csv
