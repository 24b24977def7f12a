#pragma once

#include "latentme/core.hpp"

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace latentme::cli {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    /// 1-based source line of each row, for diagnostics.
    std::vector<std::size_t> line_numbers;
    bool had_header = true;

    std::size_t column_index(const std::string& name) const;
    bool has_column(const std::string& name) const;
};

/// RFC-4180-style reader: quoted fields with doubled quotes, CRLF tolerated.
/// The first record is the header unless every field in it parses as a
/// number, in which case columns are named column_1, column_2, ...
/// Ragged records throw ParseError naming the offending line.
CsvTable read_csv(std::istream& in, const std::string& source = "<input>");
CsvTable read_csv_file(const std::filesystem::path& path);

/// Numeric view of a column; blank cells (and NA) become NaN.
core::Vector numeric_column(const CsvTable& table, const std::string& name);

/// Resolves a mix of literal names and shell globs against the header,
/// preserving header order for glob hits and request order otherwise.
std::vector<std::string> resolve_columns(const CsvTable& table,
                                         const std::vector<std::string>& patterns);

bool is_blank_cell(const std::string& cell);

}  // namespace latentme::cli
