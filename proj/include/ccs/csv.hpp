#pragma once

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ccs/error.hpp"

namespace ccs::csv {

// Minimal RFC-4180-ish parsing: comma separated, double quotes escape commas
// and embedded quotes. UTF-8 passes through untouched.
inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(std::move(field));
    return out;
}

inline std::string escape_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        return std::nullopt;
    }
};

inline Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open CSV file '" + path + "'");
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw IoError("CSV file '" + path + "' is empty (no header row)");
    t.header = split_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        t.rows.push_back(split_line(line));
    }
    return t;
}

// Shortest round-trip formatting so written files re-ingest bit-exactly.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return std::nullopt;
    std::size_t end = s.find_last_not_of(" \t") + 1;
    double value = 0.0;
    auto res = std::from_chars(s.data() + begin, s.data() + end, value);
    if (res.ec != std::errc() || res.ptr != s.data() + end) return std::nullopt;
    return value;
}

inline void write_file(const std::string& path, const Table& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write CSV file '" + path + "'");
    std::ostringstream ss;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (i) ss << ',';
        ss << escape_field(t.header[i]);
    }
    ss << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) ss << ',';
            ss << escape_field(row[i]);
        }
        ss << '\n';
    }
    out << ss.str();
    if (!out) throw IoError("short write to CSV file '" + path + "'");
}

} // namespace ccs::csv
