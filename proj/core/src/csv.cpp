#include "lsd/csv.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "lsd/binary_io.hpp"
#include "lsd/error.hpp"

namespace lsd::io {

std::string format_number(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

namespace {

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) { add_row(header); }

void CsvWriter::add_row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) {
        throw FormatError("csv row has " + std::to_string(cells.size()) + " fields, header has " + std::to_string(columns_));
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) text_ += ',';
        text_ += quote(cells[i]);
    }
    text_ += '\n';
}

void CsvWriter::save(const std::filesystem::path& path) const { write_text(path, text_); }

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw FormatError("csv has no column '" + std::string(name) + "'");
}

double CsvTable::number(std::size_t row, std::string_view name) const {
    const std::string& s = rows.at(row).at(column(name));
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw FormatError("csv cell '" + s + "' in column '" + std::string(name) + "' is not a number");
    }
    return v;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cur;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char c = line[i];
            if (quoted) {
                if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else if (c == '"') {
                    quoted = false;
                } else {
                    cur += c;
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                cells.push_back(std::move(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
        cells.push_back(std::move(cur));
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            t.rows.push_back(std::move(cells));
        }
    }
    return t;
}

}  // namespace lsd::io
