#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "mci/agent/artifact_store.hpp"
#include "mci/agent/session.hpp"
#include "mci/agent/tool_spec.hpp"
#include "mci/data/image.hpp"
#include "mci/data/vocabulary.hpp"
#include "mci/error.hpp"
#include "mci/nn/model.hpp"

namespace mci::agent {

/// A tool rejected its input or failed while running.
class ToolError : public Error {
public:
    using Error::Error;
};

/// Loaded model shared by every session; inference is serialised.
struct ModelHandle {
    nn::MciModel model{nullptr};
    data::Vocabulary vocab;
    std::string checkpoint_id;
    std::mutex mutex;
};

struct PairImages {
    std::string ref;
    data::RgbImage t1, t2;
    double resolution_m_per_px = 0.5;
};

/// Stores both PNGs and a JSON record naming them; the record's id is the
/// pair ref, so identical uploads give identical refs.
std::string store_pair(ArtifactStore& store, const data::RgbImage& t1, const data::RgbImage& t2,
                       double resolution_m_per_px = 0.5);

/// What a tool can reach while it runs.
class ToolContext {
public:
    ToolContext(ArtifactStore& store, std::shared_ptr<ModelHandle> model, std::shared_ptr<Session> session);

    ArtifactStore& store() { return store_; }
    ModelHandle& model();
    Session* session() { return session_.get(); }

    /// "latest" resolves to the session's most recent upload.
    std::string resolve_pair(const std::string& ref) const;
    PairImages load_pair(const std::string& ref) const;
    /// "<pair ref|latest>:t1" / ":t2", or a stored PNG.
    data::RgbImage load_image(const std::string& ref) const;
    data::LabelMap load_mask(const std::string& ref) const;

    void emit(ReplyArtifact a);
    const std::vector<ReplyArtifact>& produced() const { return produced_; }

private:
    ArtifactStore& store_;
    std::shared_ptr<ModelHandle> model_;
    std::shared_ptr<Session> session_;
    std::vector<ReplyArtifact> produced_;
};

/// Named colours (red, green, blue, yellow, cyan, magenta, white, black,
/// orange, purple, gray) or #rrggbb.
data::Rgb parse_color(const std::string& text);

/// "building=green,road=blue" -> per-class colours; unnamed classes keep the
/// mask codec colour.
std::array<data::Rgb, data::kNumClasses> parse_color_mapping(const std::string& mapping);

data::RgbImage recolor(const data::LabelMap& mask, const std::array<data::Rgb, data::kNumClasses>& colors);
/// Changed pixels blended toward their codec colour by alpha; background untouched.
data::RgbImage overlay(const data::LabelMap& mask, const data::RgbImage& image, double alpha);

/// Per class: {"pixels": n, "m2": n * resolution^2}.
nlohmann::json area_stats(const data::LabelMap& mask, double resolution_m_per_px);

/// load_pair, detect_changes, caption_changes, count_objects, recolor_mask,
/// overlay, area_stats.
ToolRegistry default_registry();

}  // namespace mci::agent
