#include "csv.hpp"

#include <algorithm>
#include <charconv>

#include "kpa/error.hpp"

namespace kpa::detail {

namespace {

struct RawRow {
    std::vector<std::string> fields;
    std::size_t line = 0;
};

std::vector<RawRow> split_records(std::string_view content, char delim, bool allow_quotes,
                                  std::string_view source) {
    std::vector<RawRow> out;
    RawRow row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;
    row.line = 1;

    auto end_field = [&] {
        row.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        // A blank line yields one empty field; skip it.
        if (!(row.fields.size() == 1 && row.fields.front().empty())) out.push_back(std::move(row));
        row = RawRow{};
        row.line = line;
    };

    for (std::size_t i = 0; i < content.size(); ++i) {
        const char c = content[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && allow_quotes && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == delim) {
            end_field();
        } else if (c == '\r') {
            // tolerate CRLF
        } else if (c == '\n') {
            ++line;
            end_row();
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) {
        throw DataError(std::string(source) + ": unterminated quoted field");
    }
    if (field_started || !field.empty() || !row.fields.empty()) end_row();
    return out;
}

}  // namespace

Table Table::parse(std::string_view content, char delimiter, bool allow_quotes,
                   std::string_view source) {
    // Strip a UTF-8 byte order mark.
    if (content.substr(0, 3) == "\xEF\xBB\xBF") content.remove_prefix(3);

    Table t;
    t.source_ = std::string(source);
    auto records = split_records(content, delimiter, allow_quotes, source);
    if (records.empty()) throw DataError(t.source_ + ": missing header row");

    t.header_ = std::move(records.front().fields);
    for (auto& h : t.header_) h = std::string(trim(h));
    for (std::size_t i = 1; i < records.size(); ++i) {
        auto& r = records[i];
        if (r.fields.size() != t.header_.size()) {
            throw DataError(t.source_ + ":" + std::to_string(r.line) + ": expected " +
                            std::to_string(t.header_.size()) + " fields, found " +
                            std::to_string(r.fields.size()));
        }
        t.lines_.push_back(r.line);
        t.rows_.push_back(std::move(r.fields));
    }
    return t;
}

bool Table::has_column(std::string_view name) const {
    return std::find(header_.begin(), header_.end(), name) != header_.end();
}

std::size_t Table::column(std::string_view name) const {
    auto it = std::find(header_.begin(), header_.end(), name);
    if (it == header_.end()) {
        throw DataError(source_ + ": missing column '" + std::string(name) + "'");
    }
    return static_cast<std::size_t>(it - header_.begin());
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

double parse_double(std::string_view text, std::string_view what) {
    auto t = trim(text);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
        throw DataError(std::string(what) + ": not a number: '" + std::string(text) + "'");
    }
    return v;
}

long long parse_int(std::string_view text, std::string_view what) {
    auto t = trim(text);
    if (!t.empty() && t.front() == '+') t.remove_prefix(1);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
        throw DataError(std::string(what) + ": not an integer: '" + std::string(text) + "'");
    }
    return v;
}

}  // namespace kpa::detail
