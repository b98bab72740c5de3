#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "mci/data/vocabulary.hpp"
#include "mci/nn/model.hpp"

namespace mci::nn {

/// Stored next to the weights: full model config, its hash and the vocabulary.
struct CheckpointManifest {
    ModelConfig config;
    std::string config_hash;
    data::Vocabulary vocab;
    nlohmann::json extra = nlohmann::json::object();  // free-form training notes

    nlohmann::json to_json() const;
    static CheckpointManifest from_json(const nlohmann::json& j);
};

std::string config_hash(const ModelConfig& cfg);

/// One archive of named parameter and buffer blocks plus the manifest.
void save_checkpoint(const std::filesystem::path& path, MciModel& model, const data::Vocabulary& vocab,
                     const nlohmann::json& extra = nlohmann::json::object());

struct LoadedCheckpoint {
    MciModel model{nullptr};
    CheckpointManifest manifest;
    std::string id;  // sha256 of the file bytes
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);
CheckpointManifest read_manifest(const std::filesystem::path& path);

}  // namespace mci::nn
