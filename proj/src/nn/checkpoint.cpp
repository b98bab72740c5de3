#include "mci/nn/checkpoint.hpp"

#include "mci/data/png_io.hpp"
#include "mci/error.hpp"
#include "mci/util/hash.hpp"

namespace mci::nn {

nlohmann::json CheckpointManifest::to_json() const {
    return {{"config", config}, {"config_hash", config_hash}, {"vocabulary", vocab.to_json()}, {"extra", extra}};
}

CheckpointManifest CheckpointManifest::from_json(const nlohmann::json& j) {
    CheckpointManifest m;
    m.config = j.at("config").get<ModelConfig>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.vocab = data::Vocabulary::from_json(j.at("vocabulary"));
    if (j.contains("extra")) m.extra = j.at("extra");
    return m;
}

std::string config_hash(const ModelConfig& cfg) { return util::sha256_hex(nlohmann::json(cfg).dump()); }

void save_checkpoint(const std::filesystem::path& path, MciModel& model, const data::Vocabulary& vocab,
                     const nlohmann::json& extra) {
    if (vocab.size() != model->config().vocab_size) throw Error("vocabulary size does not match the model");
    CheckpointManifest m{model->config(), config_hash(model->config()), vocab, extra};
    torch::serialize::OutputArchive archive;
    model->save(archive);
    archive.write("manifest", c10::IValue(m.to_json().dump()));
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    archive.save_to(path.string());
}

namespace {

CheckpointManifest read_manifest_from(torch::serialize::InputArchive& archive, const std::filesystem::path& path) {
    c10::IValue value;
    if (!archive.try_read("manifest", value) || !value.isString())
        throw IoError(path.string() + ": checkpoint has no manifest");
    auto m = CheckpointManifest::from_json(nlohmann::json::parse(value.toStringRef()));
    if (m.config_hash != config_hash(m.config)) throw IoError(path.string() + ": manifest config hash mismatch");
    return m;
}

torch::serialize::InputArchive open_archive(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("checkpoint not found: " + path.string());
    torch::serialize::InputArchive archive;
    try {
        archive.load_from(path.string());
    } catch (const c10::Error& e) {
        throw IoError(path.string() + ": " + e.what_without_backtrace());
    }
    return archive;
}

}  // namespace

CheckpointManifest read_manifest(const std::filesystem::path& path) {
    auto archive = open_archive(path);
    return read_manifest_from(archive, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    auto archive = open_archive(path);
    LoadedCheckpoint out;
    out.manifest = read_manifest_from(archive, path);
    if (out.manifest.vocab.size() != out.manifest.config.vocab_size)
        throw IoError(path.string() + ": vocabulary size does not match the config");
    out.model = MciModel(out.manifest.config);
    try {
        out.model->load(archive);
    } catch (const c10::Error& e) {
        throw IoError(path.string() + ": " + e.what_without_backtrace());
    }
    out.model->eval();
    out.id = util::sha256_hex(data::read_file(path));
    return out;
}

}  // namespace mci::nn
