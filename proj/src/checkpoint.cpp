#include "valex/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "valex/error.hpp"
#include "valex/reference_encoder.hpp"
#include "valex/rng.hpp"

namespace valex {

nlohmann::json train_config_to_json(const TrainConfig& c) {
    return {
        {"learning_rate", c.learning_rate}, {"max_epochs", c.max_epochs}, {"patience", c.patience},
        {"dropout", c.dropout},             {"max_tokens", c.max_tokens}, {"batch_size", c.batch_size},
        {"seed", c.seed},
    };
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.learning_rate = j.at("learning_rate").get<Scalar>();
    c.max_epochs = j.at("max_epochs").get<int>();
    c.patience = j.at("patience").get<int>();
    c.dropout = j.at("dropout").get<Scalar>();
    c.max_tokens = j.at("max_tokens").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
}

nlohmann::json Checkpoint::to_json() const {
    nlohmann::json j;
    j["format"] = kFormatTag;
    j["format_version"] = kFormatVersion;
    j["backend"] = backend_kind;
    j["state"] = backend_state;
    j["objective"] = to_string(objective);
    j["labels"] = labels;
    j["config"] = train_config_to_json(config);
    j["metadata"] = metadata;
    return j;
}

Checkpoint Checkpoint::from_json(const nlohmann::json& j) {
    if (j.value("format", "") != kFormatTag) {
        throw ValidationError("not a checkpoint: missing format tag");
    }
    if (j.at("format_version").get<int>() != kFormatVersion) {
        throw ValidationError("unsupported checkpoint version " + j.at("format_version").dump());
    }
    Checkpoint c;
    c.backend_kind = j.at("backend").get<std::string>();
    c.backend_state = j.at("state");
    c.objective = objective_from_string(j.at("objective").get<std::string>());
    c.labels = j.at("labels").get<std::vector<std::string>>();
    c.config = train_config_from_json(j.at("config"));
    c.metadata = j.value("metadata", nlohmann::json::object());
    return c;
}

void Checkpoint::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << to_json().dump(2) << '\n';
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed checkpoint '" + path.string() + "': " + e.what());
    }
    return from_json(j);
}

std::unique_ptr<EncoderBackend> Checkpoint::instantiate() const {
    if (backend_kind == "reference") {
        auto backend = std::make_unique<ReferenceEncoder>(config.seed);
        backend->load_state(backend_state);
        return backend;
    }
    throw ValidationError("unknown backend kind '" + backend_kind + "'");
}

std::string Checkpoint::content_id() const {
    std::uint64_t h = fnv1a64(to_json().dump());
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

}  // namespace valex
