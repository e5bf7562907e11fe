#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sdwsn {

// Flat `key = value` configuration with dotted sections and '#' comments.
// Manifests reuse the same syntax; keys under "config." re-resolve to plain
// config keys so a manifest can be fed straight back as --config.
class Config {
public:
    static Config parse(const std::string& text);
    static Config parse_file(const std::string& path);

    bool has(const std::string& key) const;
    void set(const std::string& key, const std::string& value);

    std::string get_string(const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_uint64(const std::string& key,
                             std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    // comma-separated list of doubles
    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) const;

    // throws std::invalid_argument naming the key
    std::string require_string(const std::string& key) const;

    const std::map<std::string, std::string>& values() const { return values_; }
    std::string serialize() const;  // sorted keys, one per line

private:
    std::map<std::string, std::string> values_;
};

}  // namespace sdwsn
