#include "embaug/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace embaug {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

[[noreturn]] void fail_line(std::size_t line, const std::string& why) {
    throw ParseError("config: line " + std::to_string(line) + ": " + why, line);
}

std::string key_label(std::string_view section, std::string_view key) {
    return "[" + std::string(section) + "] " + std::string(key);
}

std::uint64_t parse_u64(std::string_view section, std::string_view key, const std::string& v) {
    std::uint64_t out = 0;
    const char* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || p != end) {
        throw ContractError("config: " + key_label(section, key) +
                            ": expected an unsigned integer, got \"" + v + "\"");
    }
    return out;
}

double parse_double(std::string_view section, std::string_view key, const std::string& v) {
    double out = 0.0;
    const char* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || p != end) {
        throw ContractError("config: " + key_label(section, key) + ": expected a number, got \"" +
                            v + "\"");
    }
    return out;
}

bool parse_bool(std::string_view section, std::string_view key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ContractError("config: " + key_label(section, key) +
                        ": expected true/false/1/0, got \"" + v + "\"");
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string raw_line;
    std::string current;  // active section name; keys are invalid until one opens
    std::size_t line_no = 0;
    while (std::getline(in, raw_line)) {
        ++line_no;
        std::string line = trim(raw_line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line[0] == '[') {
            if (line.back() != ']') fail_line(line_no, "section header is missing ']'");
            std::string name = trim(std::string_view(line).substr(1, line.size() - 2));
            if (name.empty()) fail_line(line_no, "empty section name");
            if (cfg.sections_.count(name) != 0) {
                fail_line(line_no, "duplicate section [" + name + "]");
            }
            cfg.sections_.emplace(name, Section{});
            current = name;
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail_line(line_no, "expected key = value");
        std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) fail_line(line_no, "empty key");
        if (current.empty()) {
            fail_line(line_no, "key \"" + key + "\" appears before any [section]");
        }
        auto [it, inserted] = cfg.sections_[current].emplace(key, value);
        if (!inserted) fail_line(line_no, "duplicate key \"" + key + "\" in [" + current + "]");
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContractError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

bool ConfigFile::has(std::string_view section, std::string_view key) const {
    auto s = sections_.find(std::string(section));
    return s != sections_.end() && s->second.count(std::string(key)) != 0;
}

const std::string& ConfigFile::raw(std::string_view section, std::string_view key) const {
    auto s = sections_.find(std::string(section));
    if (s != sections_.end()) {
        auto k = s->second.find(std::string(key));
        if (k != s->second.end()) return k->second;
    }
    throw ContractError("config: missing " + key_label(section, key));
}

std::string ConfigFile::get_string(std::string_view section, std::string_view key,
                                   std::string_view fallback) const {
    return has(section, key) ? raw(section, key) : std::string(fallback);
}

std::uint64_t ConfigFile::get_u64(std::string_view section, std::string_view key,
                                  std::uint64_t fallback) const {
    return has(section, key) ? parse_u64(section, key, raw(section, key)) : fallback;
}

double ConfigFile::get_double(std::string_view section, std::string_view key,
                              double fallback) const {
    return has(section, key) ? parse_double(section, key, raw(section, key)) : fallback;
}

bool ConfigFile::get_bool(std::string_view section, std::string_view key, bool fallback) const {
    return has(section, key) ? parse_bool(section, key, raw(section, key)) : fallback;
}

void validate_config(const ConfigFile& cfg, const ConfigSchema& schema) {
    for (const auto& [name, section] : cfg.sections()) {
        auto s = schema.find(name);
        if (s == schema.end()) throw ContractError("config: unknown section [" + name + "]");
        for (const auto& [key, value] : section) {
            auto k = s->second.find(key);
            if (k == s->second.end()) {
                throw ContractError("config: unknown key \"" + key + "\" in [" + name + "]");
            }
            switch (k->second) {
                case ConfigKind::U64: parse_u64(name, key, value); break;
                case ConfigKind::F64: parse_double(name, key, value); break;
                case ConfigKind::Bool: parse_bool(name, key, value); break;
                case ConfigKind::String: break;
            }
        }
    }
}

}  // namespace embaug
