#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace valex {

// Flat key=value configuration with paper defaults pre-filled. Unknown keys
// are rejected; the CLI mirrors every key as a flag.
class PipelineConfig {
public:
    static PipelineConfig defaults();
    static PipelineConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const;
    void set(const std::string& key, const std::string& value);  // ConfigError on unknown key
    std::string get(const std::string& key) const;
    double get_double(const std::string& key) const;
    int get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    const std::map<std::string, std::string>& values() const { return values_; }
    nlohmann::json to_json() const;

private:
    std::map<std::string, std::string> values_;
};

// Reproducibility record written atomically into the run directory before any
// artifact is finalized.
struct RunManifest {
    std::string command;
    nlohmann::json resolved_config;
    std::map<std::string, std::string> input_hashes;  // path -> 64-bit content hash, hex
    std::uint64_t seed = 0;
    std::string tool_version;
    std::string started_at_utc;
    std::vector<std::string> outputs;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
    void write_atomic(const std::filesystem::path& path) const;
    static RunManifest load(const std::filesystem::path& path);
};

std::string tool_version();
std::string file_hash_hex(const std::filesystem::path& path);
std::string utc_timestamp();          // ISO-8601, second resolution
std::string utc_timestamp_compact();  // YYYYMMDDTHHMMSS for directory names

}  // namespace valex
