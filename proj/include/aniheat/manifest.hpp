#pragma once

#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aniheat/errors.hpp"
#include "aniheat/version.hpp"

namespace aniheat {

/// FNV-1a 64-bit content hash; a light integrity check, not a cryptographic one.
inline std::uint64_t fnv1a64(std::span<const unsigned char> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    return fnv1a64(std::span<const unsigned char>(
        reinterpret_cast<const unsigned char*>(s.data()), s.size()));
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::uint64_t file_fnv1a64(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("file_fnv1a64: cannot open " + path.string());
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a64(s);
}

/// Record of one run: config hash, tool version, timestamps, per-output
/// checksums and accumulated warnings.
class RunManifest {
public:
    RunManifest(std::string config_hash, std::uint64_t seed)
        : config_hash_(std::move(config_hash)), seed_(seed) {
        std::time_t now = std::time(nullptr);
        char buf[32];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        created_ = buf;
    }

    void add_output(const std::filesystem::path& root, const std::string& relative) {
        Output o;
        o.path = relative;
        const auto full = root / relative;
        o.bytes = std::filesystem::file_size(full);
        o.hash = hash_hex(file_fnv1a64(full));
        outputs_.push_back(std::move(o));
    }

    void add_warning(std::string w) { warnings_.push_back(std::move(w)); }
    const std::vector<std::string>& warnings() const { return warnings_; }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["tool"] = kToolName;
        j["tool_version"] = kToolVersion;
        j["config_hash"] = config_hash_;
        j["seed"] = seed_;
        j["created"] = created_;
        j["outputs"] = nlohmann::json::array();
        for (const Output& o : outputs_)
            j["outputs"].push_back({{"path", o.path}, {"bytes", o.bytes}, {"fnv1a64", o.hash}});
        j["warnings"] = warnings_;
        return j;
    }

    void write(const std::filesystem::path& root) const {
        std::ofstream out(root / "manifest.json");
        if (!out) throw IoError("RunManifest: cannot write manifest.json");
        out << to_json().dump(2) << "\n";
    }

private:
    struct Output {
        std::string path;
        std::uintmax_t bytes = 0;
        std::string hash;
    };

    std::string config_hash_;
    std::uint64_t seed_ = 0;
    std::string created_;
    std::vector<Output> outputs_;
    std::vector<std::string> warnings_;
};

/// Re-hashes every file listed in a directory's manifest.json; returns one
/// message per missing or mismatching output.
inline std::vector<std::string> verify_manifest(const std::filesystem::path& root) {
    std::vector<std::string> problems;
    const auto manifest_path = root / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) {
        problems.push_back("manifest.json not found in " + root.string());
        return problems;
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        problems.push_back(std::string("manifest.json unreadable: ") + e.what());
        return problems;
    }
    for (const auto& o : j.value("outputs", nlohmann::json::array())) {
        const std::string rel = o.value("path", "");
        const std::string expected = o.value("fnv1a64", "");
        const auto full = root / rel;
        if (!std::filesystem::exists(full)) {
            problems.push_back("missing output: " + rel);
            continue;
        }
        const std::string actual = hash_hex(file_fnv1a64(full));
        if (actual != expected)
            problems.push_back("checksum mismatch for " + rel + ": expected " + expected + ", got " +
                               actual);
    }
    return problems;
}

} // namespace aniheat
