#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sdwsn/config.hpp"

namespace sdwsn {

inline constexpr const char* kArtifactName = "sdwsn";
inline constexpr const char* kArtifactVersion = "0.1.0";

// FNV-1a 64-bit content fingerprint (integrity marker, not cryptographic).
std::uint64_t fnv1a64(std::string_view data);
std::string file_digest(const std::string& path);  // "fnv1a:<16 hex>"

// Reproducibility record written next to every command's outputs. The config
// block is the fully resolved configuration, so feeding the manifest back as
// --config re-runs the command identically.
struct RunManifest {
    std::string command;
    std::uint64_t seed = 0;
    Config config;
    std::vector<std::pair<std::string, std::string>> inputs;   // path, digest
    std::vector<std::pair<std::string, std::string>> outputs;  // path, digest

    void add_input(const std::string& path);
    void add_output(const std::string& path);
    std::string serialize() const;
    void write(const std::string& path) const;
};

}  // namespace sdwsn
