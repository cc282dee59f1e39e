#include "valex/manifest.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include "valex/error.hpp"
#include "valex/rng.hpp"

namespace valex {

namespace {

// Every knob the pipeline understands, with its paper-default value.
// max_epochs/max_tokens differ between word-level pretraining and
// sentence-level fine-tuning, so they are separate keys.
const std::map<std::string, std::string>& default_values() {
    static const std::map<std::string, std::string> defaults = {
        {"alpha", "2.5"},
        {"beta", "1000"},
        {"split_ratio", "0.8"},
        {"max_iterations", "50"},
        {"cold_start", "false"},
        {"learning_rate", "0.01"},
        {"pretrain_max_epochs", "100"},
        {"pretrain_max_tokens", "10"},
        {"finetune_max_epochs", "20"},
        {"finetune_max_tokens", "512"},
        {"patience", "5"},
        {"dropout", "0.2"},
        {"batch_size", "32"},
        {"seed", "0"},
        {"objective", "regression"},
        {"task", "binary"},
        {"n_train", "100"},
        {"n_dev", "50"},
        {"parallelism", "1"},
        {"max_retries", "3"},
        {"retry_backoff", "0.25"},
        {"scorer_endpoint", ""},
        {"encoder_dim", "32"},
        {"merge_policy", "mean"},
        {"case_fold", "false"},
    };
    return defaults;
}

std::string trim(const std::string& s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

}  // namespace

PipelineConfig PipelineConfig::defaults() {
    PipelineConfig config;
    config.values_ = default_values();
    return config;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    PipelineConfig config = defaults();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ": line " + std::to_string(line_no) +
                              ": expected key = value");
        }
        try {
            config.set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return config;
}

bool PipelineConfig::has(const std::string& key) const { return values_.count(key) > 0; }

void PipelineConfig::set(const std::string& key, const std::string& value) {
    if (!default_values().count(key)) throw ConfigError("unknown config key '" + key + "'");
    values_[key] = value;
}

std::string PipelineConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

double PipelineConfig::get_double(const std::string& key) const {
    auto text = get(key);
    if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
    double value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError("config key '" + key + "' is not a number: '" + text + "'");
    }
    return value;
}

int PipelineConfig::get_int(const std::string& key) const {
    auto text = get(key);
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError("config key '" + key + "' is not an integer: '" + text + "'");
    }
    return value;
}

std::uint64_t PipelineConfig::get_u64(const std::string& key) const {
    auto text = get(key);
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError("config key '" + key + "' is not an unsigned integer: '" + text + "'");
    }
    return value;
}

bool PipelineConfig::get_bool(const std::string& key) const {
    auto text = get(key);
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError("config key '" + key + "' is not a boolean: '" + text + "'");
}

nlohmann::json PipelineConfig::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [key, value] : values_) j[key] = value;
    return j;
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = resolved_config;
    j["inputs"] = input_hashes;
    j["seed"] = seed;
    j["tool_version"] = tool_version;
    j["started_at"] = started_at_utc;
    j["outputs"] = outputs;
    return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.resolved_config = j.at("config");
    m.input_hashes = j.at("inputs").get<std::map<std::string, std::string>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.started_at_utc = j.at("started_at").get<std::string>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    return m;
}

void RunManifest::write_atomic(const std::filesystem::path& path) const {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out << to_json().dump(2) << '\n';
        if (!out) throw IoError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed manifest '" + path.string() + "': " + e.what());
    }
    return from_json(j);
}

std::string tool_version() { return "valex 0.1.0"; }

std::string file_hash_hex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::uint64_t h = 14695981039346656037ull;
    char buf[16384];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
        if (!in) break;
    }
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

namespace {

std::string format_utc(const char* fmt) {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), fmt, &tm);
    return buf;
}

}  // namespace

std::string utc_timestamp() { return format_utc("%Y-%m-%dT%H:%M:%SZ"); }

std::string utc_timestamp_compact() { return format_utc("%Y%m%dT%H%M%S"); }

}  // namespace valex
