#pragma once

#include <charconv>
#include <filesystem>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace lsd::io {

/// Shortest round-trip decimal form of a double.
std::string format_number(double v);

/// RFC 4180 subset: header row, comma separators, \n line ends, fields
/// quoted only when they contain a comma, quote or newline.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    template <typename... Fields>
    void row(const Fields&... fields) {
        std::vector<std::string> cells;
        (cells.push_back(cell(fields)), ...);
        add_row(cells);
    }
    void add_row(const std::vector<std::string>& cells);

    const std::string& text() const { return text_; }
    void save(const std::filesystem::path& path) const;

private:
    template <typename V>
    static std::string cell(const V& v) {
        if constexpr (std::is_floating_point_v<V>) return format_number(static_cast<double>(v));
        else if constexpr (std::is_integral_v<V>) return std::to_string(v);
        else return std::string(v);
    }

    std::size_t columns_;
    std::string text_;
};

/// Parsed CSV: header plus string cells.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;
    double number(std::size_t row, std::string_view column) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace lsd::io
