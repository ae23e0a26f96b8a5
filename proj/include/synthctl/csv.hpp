#pragma once

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "synthctl/errors.hpp"

namespace synthctl {

/// One parsed CSV record plus the physical line it started on (1-based).
struct CsvRecord {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

/// RFC 4180 reader: quoted fields, doubled-quote escapes, LF or CRLF endings.
/// Reads the whole stream; blank trailing line is ignored.
inline std::vector<CsvRecord> read_csv(std::istream& in) {
    std::vector<CsvRecord> records;
    std::string field;
    CsvRecord record;
    record.line = 1;
    std::size_t line = 1;
    bool in_quotes = false;
    bool record_open = false;

    auto end_field = [&] {
        record.fields.push_back(std::move(field));
        field.clear();
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record = CsvRecord{};
        record.line = line;
        record_open = false;
    };

    char c;
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty())
                    throw ParseError(line, field.size() + 1,
                                     "quote inside unquoted field");
                in_quotes = true;
                record_open = true;
                break;
            case ',':
                end_field();
                record_open = true;
                break;
            case '\r':
                break;  // handled by the following '\n'
            case '\n':
                ++line;
                if (record_open || !field.empty() || !record.fields.empty())
                    end_record();
                record.line = line;
                break;
            default:
                field.push_back(c);
                record_open = true;
                break;
        }
    }
    if (in_quotes) throw ParseError(line, 1, "unterminated quoted field");
    if (record_open || !field.empty() || !record.fields.empty()) end_record();
    return records;
}

/// Quotes a field only when RFC 4180 requires it.
inline std::string csv_escape(std::string_view s) {
    bool needs_quotes = s.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs_quotes) return std::string(s);
    std::string out;
    out.reserve(s.size() + 2);
    out.push_back('"');
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.put(',');
        out << csv_escape(fields[i]);
    }
    out.put('\n');
}

/// Shortest round-trip decimal rendering; locale-independent and deterministic.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, ptr);
}

/// Strict double parse: the whole field must be consumed.
inline std::optional<double> try_parse_double(std::string_view s) {
    if (s.empty()) return std::nullopt;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

}  // namespace synthctl
