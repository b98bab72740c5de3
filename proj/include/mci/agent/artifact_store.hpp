#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mci::agent {

struct ArtifactRef {
    std::string id;          // sha256 of the bytes
    std::string media_type;  // png, txt or json
    std::size_t length = 0;

    nlohmann::json to_json() const { return {{"id", id}, {"media_type", media_type}, {"length", length}}; }
};

struct Artifact {
    ArtifactRef ref;
    std::vector<std::uint8_t> bytes;
};

std::string mime_type(const std::string& media_type);

/// Content-addressed files: dir/<id>.<media_type>. Writing bytes that are
/// already stored is a no-op, so stored artifacts never change.
class ArtifactStore {
public:
    explicit ArtifactStore(std::filesystem::path dir);

    ArtifactRef put(std::span<const std::uint8_t> bytes, const std::string& media_type);
    ArtifactRef put_text(const std::string& text, const std::string& media_type = "txt");
    std::optional<Artifact> get(const std::string& id) const;
    std::optional<ArtifactRef> find(const std::string& id) const;
    bool contains(const std::string& id) const { return find(id).has_value(); }

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    mutable std::mutex mutex_;
};

/// True for a 64-character lowercase hex string.
bool looks_like_artifact_id(const std::string& s);

}  // namespace mci::agent
