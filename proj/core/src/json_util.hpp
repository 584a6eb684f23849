#pragma once

// Strict typed access to JSON objects; every failure names the dotted key path.

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "surropt/error.hpp"

namespace surropt::detail {

inline std::string join_key(const std::string& prefix, std::string_view key) {
    return prefix.empty() ? std::string(key) : prefix + "." + std::string(key);
}

inline void require_object(const nlohmann::json& doc, const std::string& path) {
    if (!doc.is_object()) throw ConfigError(path, "expected a JSON object");
}

inline void reject_unknown(const nlohmann::json& doc, const std::string& prefix,
                           std::initializer_list<std::string_view> known) {
    for (const auto& [key, value] : doc.items()) {
        bool ok = false;
        for (auto k : known) ok = ok || key == k;
        if (!ok) throw ConfigError(join_key(prefix, key), "unknown key");
    }
}

inline void read_int(const nlohmann::json& doc, const std::string& prefix, std::string_view key, int& out) {
    const auto it = doc.find(std::string(key));
    if (it == doc.end()) return;
    if (!it->is_number_integer()) throw ConfigError(join_key(prefix, key), "expected an integer");
    const auto v = it->get<std::int64_t>();
    if (v < INT32_MIN || v > INT32_MAX) throw ConfigError(join_key(prefix, key), "integer out of range");
    out = static_cast<int>(v);
}

inline void read_long(const nlohmann::json& doc, const std::string& prefix, std::string_view key, long& out) {
    const auto it = doc.find(std::string(key));
    if (it == doc.end()) return;
    if (!it->is_number_integer()) throw ConfigError(join_key(prefix, key), "expected an integer");
    out = static_cast<long>(it->get<std::int64_t>());
}

inline void read_u64(const nlohmann::json& doc, const std::string& prefix, std::string_view key,
                     std::uint64_t& out) {
    const auto it = doc.find(std::string(key));
    if (it == doc.end()) return;
    const bool ok = it->is_number_unsigned() || (it->is_number_integer() && it->get<std::int64_t>() >= 0);
    if (!ok) throw ConfigError(join_key(prefix, key), "expected a non-negative integer");
    out = it->get<std::uint64_t>();
}

inline void read_double(const nlohmann::json& doc, const std::string& prefix, std::string_view key,
                        double& out) {
    const auto it = doc.find(std::string(key));
    if (it == doc.end()) return;
    if (!it->is_number()) throw ConfigError(join_key(prefix, key), "expected a number");
    out = it->get<double>();
}

inline void read_string(const nlohmann::json& doc, const std::string& prefix, std::string_view key,
                        std::string& out) {
    const auto it = doc.find(std::string(key));
    if (it == doc.end()) return;
    if (!it->is_string()) throw ConfigError(join_key(prefix, key), "expected a string");
    out = it->get<std::string>();
}

}  // namespace surropt::detail
