#include "mci/agent/artifact_store.hpp"

#include <fstream>

#include "mci/data/png_io.hpp"
#include "mci/error.hpp"
#include "mci/util/hash.hpp"

namespace mci::agent {

namespace {

const char* const kMediaTypes[] = {"png", "txt", "json"};

}  // namespace

std::string mime_type(const std::string& media_type) {
    if (media_type == "png") return "image/png";
    if (media_type == "json") return "application/json";
    return "text/plain; charset=utf-8";
}

bool looks_like_artifact_id(const std::string& s) {
    if (s.size() != 64) return false;
    for (char c : s)
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    return true;
}

ArtifactStore::ArtifactStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_)) throw IoError("artifact dir not writable: " + dir_.string());
}

ArtifactRef ArtifactStore::put(std::span<const std::uint8_t> bytes, const std::string& media_type) {
    bool known = false;
    for (const auto* m : kMediaTypes) known = known || media_type == m;
    if (!known) throw Error("unsupported artifact media type '" + media_type + "'");
    ArtifactRef ref{util::sha256_hex(bytes), media_type, bytes.size()};
    std::lock_guard lock(mutex_);
    const auto path = dir_ / (ref.id + "." + media_type);
    if (!std::filesystem::exists(path)) {
        // Write then rename so readers never see a partial file.
        const auto tmp = dir_ / (ref.id + "." + media_type + ".part");
        data::write_file(tmp, bytes);
        std::filesystem::rename(tmp, path);
    }
    return ref;
}

ArtifactRef ArtifactStore::put_text(const std::string& text, const std::string& media_type) {
    return put(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()), media_type);
}

std::optional<ArtifactRef> ArtifactStore::find(const std::string& id) const {
    if (!looks_like_artifact_id(id)) return std::nullopt;
    for (const auto* m : kMediaTypes) {
        const auto path = dir_ / (id + "." + m);
        std::error_code ec;
        const auto size = std::filesystem::file_size(path, ec);
        if (!ec) return ArtifactRef{id, m, static_cast<std::size_t>(size)};
    }
    return std::nullopt;
}

std::optional<Artifact> ArtifactStore::get(const std::string& id) const {
    const auto ref = find(id);
    if (!ref) return std::nullopt;
    return Artifact{*ref, data::read_file(dir_ / (id + "." + ref->media_type))};
}

}  // namespace mci::agent
