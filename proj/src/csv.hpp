#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace kpa::detail {

/// A delimited table with a header row. Quoted fields follow RFC 4180
/// (doubled quotes, embedded delimiters and newlines).
class Table {
public:
    static Table parse(std::string_view content, char delimiter, bool allow_quotes,
                       std::string_view source);

    const std::vector<std::string>& header() const { return header_; }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }

    /// Column index by name; throws DataError naming the source if absent.
    std::size_t column(std::string_view name) const;
    bool has_column(std::string_view name) const;

    /// 1-based line number of a data row in the source, for diagnostics.
    std::size_t line_of(std::size_t row) const { return lines_[row]; }
    const std::string& source() const { return source_; }

private:
    std::string source_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
    std::vector<std::size_t> lines_;
};

std::string csv_escape(std::string_view field);

std::string_view trim(std::string_view s);

double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

}  // namespace kpa::detail
