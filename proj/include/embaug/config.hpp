#pragma once

#include "embaug/common.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace embaug {

/// Sectioned key=value text:
///
///     # full-line comments start with '#' or ';'
///     [dataset]
///     d = 64
///     sigma = 0.25
///
/// Keys must appear under a `[section]` header; duplicate sections or duplicate
/// keys within a section are rejected. Values are stored verbatim (trimmed);
/// typed access happens through the getters. Parse errors carry the 1-based
/// line number as their offset.
class ConfigFile {
public:
    using Section = std::map<std::string, std::string>;

    static ConfigFile parse(const std::string& text);
    static ConfigFile load(const std::string& path);

    bool has(std::string_view section, std::string_view key) const;

    /// Verbatim value; throws ContractError when the key is absent.
    const std::string& raw(std::string_view section, std::string_view key) const;

    std::string get_string(std::string_view section, std::string_view key,
                           std::string_view fallback) const;
    std::uint64_t get_u64(std::string_view section, std::string_view key,
                          std::uint64_t fallback) const;
    double get_double(std::string_view section, std::string_view key, double fallback) const;
    bool get_bool(std::string_view section, std::string_view key, bool fallback) const;

    const std::map<std::string, Section>& sections() const { return sections_; }

private:
    std::map<std::string, Section> sections_;
};

enum class ConfigKind { U64, F64, Bool, String };

/// section -> key -> expected kind. Every key is optional; the schema only
/// polices spelling and value syntax.
using ConfigSchema = std::map<std::string, std::map<std::string, ConfigKind>>;

/// Rejects unknown sections, unknown keys, and values that do not parse as
/// their declared kind.
void validate_config(const ConfigFile& cfg, const ConfigSchema& schema);

}  // namespace embaug
