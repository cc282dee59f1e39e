#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "valex/encoder.hpp"

namespace valex {

// Self-describing trained-model container. Serialized as JSON with a format
// tag; holds everything needed to reconstruct the backend and to rerun the
// job that produced it (config, seed, input hash).
struct Checkpoint {
    static constexpr const char* kFormatTag = "valex-checkpoint";
    static constexpr int kFormatVersion = 1;

    std::string backend_kind;     // "reference", or an adapter name
    nlohmann::json backend_state;
    Objective objective = Objective::mse;
    std::vector<std::string> labels;  // class names in head order; empty for regression
    TrainConfig config;
    nlohmann::json metadata;      // producer-specific: input hashes, warnings, curve summary

    nlohmann::json to_json() const;
    static Checkpoint from_json(const nlohmann::json& j);

    void save(const std::filesystem::path& path) const;
    static Checkpoint load(const std::filesystem::path& path);

    // Rebuilds the trained backend. Only backend kinds compiled into this
    // binary are accepted; unknown kinds raise ValidationError.
    std::unique_ptr<EncoderBackend> instantiate() const;

    // Stable content hash of the serialized form, used as the model id.
    std::string content_id() const;
};

nlohmann::json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace valex
