#include "latentme/cli/csv.hpp"

#include "latentme/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fnmatch.h>
#include <fstream>
#include <limits>

namespace latentme::cli {

namespace {

bool parse_double(const std::string& text, double& out) {
    std::size_t b = 0, e = text.size();
    while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
    if (b == e) return false;
    const char* first = text.data() + b;
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, text.data() + e, out);
    return res.ec == std::errc() && res.ptr == text.data() + e;
}

// Reads one record, possibly spanning lines inside quotes. Returns false at EOF.
bool read_record(std::istream& in, std::size_t& line, std::vector<std::string>& fields,
                 const std::string& source) {
    fields.clear();
    std::string field;
    bool in_quotes = false, any = false, after_quote = false;
    const std::size_t start_line = line + 1;
    int c;
    while ((c = in.get()) != EOF) {
        any = true;
        const char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    field += '"';
                    in.get();
                } else {
                    in_quotes = false;
                    after_quote = true;
                }
            } else {
                if (ch == '\n') ++line;
                field += ch;
            }
            continue;
        }
        if (ch == '"' && field.empty() && !after_quote) {
            in_quotes = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
            after_quote = false;
        } else if (ch == '\n') {
            ++line;
            if (!field.empty() && field.back() == '\r') field.pop_back();
            fields.push_back(std::move(field));
            return true;
        } else if (after_quote) {
            if (ch != '\r' && ch != ' ')
                throw Error(ErrorCode::ParseError, source + ":" + std::to_string(start_line) +
                                                       ": text after closing quote");
        } else {
            field += ch;
        }
    }
    if (in_quotes)
        throw Error(ErrorCode::ParseError,
                    source + ":" + std::to_string(start_line) + ": unterminated quoted field");
    if (!any) return false;
    ++line;
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(std::move(field));
    return true;
}

bool record_is_empty(const std::vector<std::string>& fields) {
    return fields.size() == 1 && fields[0].empty();
}

}  // namespace

bool is_blank_cell(const std::string& cell) {
    const auto b = cell.find_first_not_of(" \t");
    if (b == std::string::npos) return true;
    const auto e = cell.find_last_not_of(" \t");
    const std::string t = cell.substr(b, e - b + 1);
    return t == "NA" || t == "na" || t == "NaN" || t == "nan" || t == ".";
}

std::size_t CsvTable::column_index(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::ParseError, "no column named '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::has_column(const std::string& name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
}

CsvTable read_csv(std::istream& in, const std::string& source) {
    CsvTable table;
    std::vector<std::string> fields;
    std::size_t line = 0;
    bool first = true;
    while (read_record(in, line, fields, source)) {
        if (record_is_empty(fields)) continue;
        if (first) {
            first = false;
            const bool numeric = std::all_of(fields.begin(), fields.end(), [](const std::string& f) {
                double v;
                return is_blank_cell(f) || parse_double(f, v);
            });
            if (!numeric) {
                table.header = fields;
                continue;
            }
            table.had_header = false;
            for (std::size_t j = 0; j < fields.size(); ++j)
                table.header.push_back("column_" + std::to_string(j + 1));
        }
        if (fields.size() != table.header.size())
            throw Error(ErrorCode::ParseError,
                        source + ":" + std::to_string(line) + ": expected " +
                            std::to_string(table.header.size()) + " fields, found " +
                            std::to_string(fields.size()));
        table.rows.push_back(fields);
        table.line_numbers.push_back(line);
    }
    if (table.header.empty()) throw Error(ErrorCode::ParseError, source + ": empty file");
    return table;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
    return read_csv(in, path.string());
}

core::Vector numeric_column(const CsvTable& table, const std::string& name) {
    const std::size_t j = table.column_index(name);
    core::Vector out(static_cast<Eigen::Index>(table.rows.size()));
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const std::string& cell = table.rows[i][j];
        double v = std::numeric_limits<double>::quiet_NaN();
        if (!is_blank_cell(cell) && !parse_double(cell, v))
            throw Error(ErrorCode::ParseError, "line " + std::to_string(table.line_numbers[i]) +
                                                   ": column '" + name + "' has non-numeric value '" +
                                                   cell + "'");
        out(static_cast<Eigen::Index>(i)) = v;
    }
    return out;
}

std::vector<std::string> resolve_columns(const CsvTable& table,
                                         const std::vector<std::string>& patterns) {
    std::vector<std::string> out;
    auto add = [&](const std::string& name) {
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    };
    for (const auto& pat : patterns) {
        if (pat.find_first_of("*?[") == std::string::npos) {
            table.column_index(pat);  // throws if absent
            add(pat);
            continue;
        }
        bool hit = false;
        for (const auto& name : table.header)
            if (fnmatch(pat.c_str(), name.c_str(), 0) == 0) {
                add(name);
                hit = true;
            }
        if (!hit) throw Error(ErrorCode::ParseError, "pattern '" + pat + "' matches no column");
    }
    return out;
}

}  // namespace latentme::cli
