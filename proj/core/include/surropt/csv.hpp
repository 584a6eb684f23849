#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace surropt::csv {

/// Shortest representation that parses back to the same double.
std::string num(double value);
std::string num(long long value);
inline std::string num(long value) { return num(static_cast<long long>(value)); }
inline std::string num(int value) { return num(static_cast<long long>(value)); }
std::string num(std::uint64_t value);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; throws IoError if absent.
    std::size_t column(std::string_view name) const;
};

/// Overwrites `path`. Throws IoError if the file cannot be written.
void write(const std::filesystem::path& path, const Table& table);

/// Plain comma-separated reader (no quoting; the writer never emits any).
Table read(const std::filesystem::path& path);

}  // namespace surropt::csv
