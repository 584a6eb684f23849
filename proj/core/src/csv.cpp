#include "surropt/csv.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

#include "surropt/error.hpp"

namespace surropt::csv {

std::string num(double value) { return fmt::format("{}", value); }
std::string num(long long value) { return fmt::format("{}", value); }
std::string num(std::uint64_t value) { return fmt::format("{}", value); }

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw IoError(fmt::format("csv: missing column '{}'", name));
}

namespace {

void write_line(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out << ',';
        out << cells[i];
    }
    out << '\n';
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

void write(const std::filesystem::path& path, const Table& table) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
    write_line(out, table.header);
    for (const auto& row : table.rows) write_line(out, row);
    out.flush();
    if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

Table read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
    Table table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            table.header = split(line);
            first = false;
        } else {
            table.rows.push_back(split(line));
        }
    }
    if (first) throw IoError(fmt::format("'{}' is empty", path.string()));
    return table;
}

}  // namespace surropt::csv
