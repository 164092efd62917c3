#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ganaug/core/check.hpp"
#include "ganaug/core/hash.hpp"

namespace ganaug {

// Plain-text configuration: `key = value` lines, optional `[section]` headers
// (section becomes a `section.` key prefix), `#` comments. CLI flags override
// file values which override built-in defaults; the resolved config is echoed
// into every run record.
class KvConfig {
  public:
    KvConfig() = default;

    static KvConfig parse_string(const std::string& text, const std::string& origin = "<string>") {
        KvConfig cfg;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string s = strip(line);
            if (s.empty() || s[0] == '#') continue;
            if (s.front() == '[' && s.back() == ']') {
                section = strip(s.substr(1, s.size() - 2));
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw ParseError(format_msg(origin, ":", lineno, ": expected `key = value`, got: ", s));
            std::string key = strip(s.substr(0, eq));
            std::string value = strip(s.substr(eq + 1));
            if (key.empty()) throw ParseError(format_msg(origin, ":", lineno, ": empty key"));
            if (!section.empty()) key = section + "." + key;
            cfg.kv_[key] = value;
        }
        return cfg;
    }

    static KvConfig parse_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        check(in.good(), "cannot open config file: ", path.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse_string(buf.str(), path.string());
    }

    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    std::string get_str(const std::string& key, const std::string& fallback) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? fallback : it->second;
    }
    double get_double(const std::string& key, double fallback) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        try {
            return std::stod(it->second);
        } catch (...) {
            throw ParseError(format_msg("config key `", key, "`: not a number: ", it->second));
        }
    }
    int64_t get_int(const std::string& key, int64_t fallback) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        try {
            return std::stoll(it->second);
        } catch (...) {
            throw ParseError(format_msg("config key `", key, "`: not an integer: ", it->second));
        }
    }
    bool get_bool(const std::string& key, bool fallback) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        const std::string& v = it->second;
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw ParseError(format_msg("config key `", key, "`: not a boolean: ", v));
    }
    std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        return split_list(it->second);
    }

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }

    const std::map<std::string, std::string>& entries() const { return kv_; }

    // sorted key=value dump; stable input for config hashing
    std::string canonical() const {
        std::ostringstream os;
        for (const auto& [k, v] : kv_) os << k << " = " << v << "\n";
        return os.str();
    }

    uint64_t config_hash() const { return fnv1a64(canonical()); }

    static std::vector<std::string> split_list(const std::string& s) {
        std::vector<std::string> out;
        std::string item;
        std::istringstream in(s);
        while (std::getline(in, item, ',')) {
            item = strip(item);
            if (!item.empty()) out.push_back(item);
        }
        return out;
    }

  private:
    static std::string strip(const std::string& s) {
        size_t b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        size_t e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    std::map<std::string, std::string> kv_;
};

}  // namespace ganaug
