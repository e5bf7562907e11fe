#include "sdwsn/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sdwsn {

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string file_digest(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for digest: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a:%016llx",
                  static_cast<unsigned long long>(fnv1a64(ss.str())));
    return buf;
}

void RunManifest::add_input(const std::string& path) {
    inputs.emplace_back(path, file_digest(path));
}

void RunManifest::add_output(const std::string& path) {
    outputs.emplace_back(path, file_digest(path));
}

std::string RunManifest::serialize() const {
    std::ostringstream out;
    out << "run.manifest_version = 1\n";
    out << "run.artifact = " << kArtifactName << " " << kArtifactVersion << "\n";
    out << "run.command = " << command << "\n";
    out << "run.seed = " << seed << "\n";
    for (const auto& [k, v] : config.values())
        out << "config." << k << " = " << v << "\n";
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        out << "input." << i << ".path = " << inputs[i].first << "\n";
        out << "input." << i << ".digest = " << inputs[i].second << "\n";
    }
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        out << "output." << i << ".path = " << outputs[i].first << "\n";
        out << "output." << i << ".digest = " << outputs[i].second << "\n";
    }
    return out.str();
}

void RunManifest::write(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << serialize();
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace sdwsn
