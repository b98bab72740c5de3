#include "mci/agent/tools.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "mci/data/mask_codec.hpp"
#include "mci/data/png_io.hpp"
#include "mci/data/stats.hpp"

namespace mci::agent {

namespace {

std::string store_png(ArtifactStore& store, const data::RgbImage& image) {
    return store.put(data::encode_png(image), "png").id;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\n");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\n") - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

data::ChangeClass parse_class(const std::string& name) {
    try {
        return data::parse_change_class(lower(trim(name)));
    } catch (const Error&) {
        throw ToolError("unknown class '" + name + "' (expected building or road)");
    }
}

}  // namespace

std::string store_pair(ArtifactStore& store, const data::RgbImage& t1, const data::RgbImage& t2,
                       double resolution_m_per_px) {
    if (t1.height() != t2.height() || t1.width() != t2.width()) throw ToolError("t1 and t2 differ in size");
    const nlohmann::json record = {{"t1", store_png(store, t1)},
                                   {"t2", store_png(store, t2)},
                                   {"resolution_m_per_px", resolution_m_per_px}};
    return store.put_text(record.dump(), "json").id;
}

ToolContext::ToolContext(ArtifactStore& store, std::shared_ptr<ModelHandle> model, std::shared_ptr<Session> session)
    : store_(store), model_(std::move(model)), session_(std::move(session)) {}

ModelHandle& ToolContext::model() {
    if (!model_ || !model_->model) throw ToolError("no model is loaded");
    return *model_;
}

std::string ToolContext::resolve_pair(const std::string& ref) const {
    if (ref == "latest") {
        const auto latest = session_ ? session_->latest_pair() : std::nullopt;
        if (!latest) throw ToolError("no image pair has been uploaded in this session");
        return *latest;
    }
    return ref;
}

PairImages ToolContext::load_pair(const std::string& ref) const {
    const auto id = resolve_pair(ref);
    const auto art = store_.get(id);
    if (!art || art->ref.media_type != "json") throw ToolError("unknown pair '" + ref + "'");
    nlohmann::json record;
    try {
        record = nlohmann::json::parse(art->bytes.begin(), art->bytes.end());
        const auto t1 = store_.get(record.at("t1").get<std::string>());
        const auto t2 = store_.get(record.at("t2").get<std::string>());
        if (!t1 || !t2) throw ToolError("pair '" + ref + "' points at missing images");
        return PairImages{id, data::decode_png(t1->bytes), data::decode_png(t2->bytes),
                          record.value("resolution_m_per_px", 0.5)};
    } catch (const nlohmann::json::exception&) {
        throw ToolError("'" + ref + "' is not a pair");
    }
}

data::RgbImage ToolContext::load_image(const std::string& ref) const {
    const auto colon = ref.rfind(':');
    if (colon != std::string::npos) {
        const auto which = ref.substr(colon + 1);
        if (which != "t1" && which != "t2") throw ToolError("image ref '" + ref + "' must end in :t1 or :t2");
        auto pair = load_pair(ref.substr(0, colon));
        return which == "t1" ? pair.t1 : pair.t2;
    }
    const auto art = store_.get(ref);
    if (!art || art->ref.media_type != "png") throw ToolError("unknown image '" + ref + "'");
    return data::decode_png(art->bytes);
}

data::LabelMap ToolContext::load_mask(const std::string& ref) const {
    const auto art = store_.get(ref);
    if (!art || art->ref.media_type != "png") throw ToolError("unknown mask '" + ref + "'");
    try {
        return data::decode_mask(data::decode_png(art->bytes));
    } catch (const data::MaskDecodeError& e) {
        throw ToolError("'" + ref + "' is not a change mask: " + e.what());
    }
}

void ToolContext::emit(ReplyArtifact a) { produced_.push_back(std::move(a)); }

data::Rgb parse_color(const std::string& text) {
    const auto t = lower(trim(text));
    static const std::pair<const char*, data::Rgb> named[] = {
        {"red", {255, 0, 0}},     {"green", {0, 255, 0}},     {"blue", {0, 0, 255}},    {"yellow", {255, 255, 0}},
        {"cyan", {0, 255, 255}},  {"magenta", {255, 0, 255}}, {"white", {255, 255, 255}}, {"black", {0, 0, 0}},
        {"orange", {255, 165, 0}}, {"purple", {128, 0, 128}}, {"gray", {128, 128, 128}}, {"grey", {128, 128, 128}}};
    for (const auto& [name, rgb] : named)
        if (t == name) return rgb;
    if (t.size() == 7 && t[0] == '#' && std::all_of(t.begin() + 1, t.end(), ::isxdigit)) {
        const auto v = std::stoul(t.substr(1), nullptr, 16);
        return {static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>((v >> 8) & 0xff),
                static_cast<std::uint8_t>(v & 0xff)};
    }
    throw ToolError("unknown colour '" + text + "'");
}

std::array<data::Rgb, data::kNumClasses> parse_color_mapping(const std::string& mapping) {
    std::array<data::Rgb, data::kNumClasses> colors{};
    for (int c = 0; c < data::kNumClasses; ++c) colors[c] = data::class_color(static_cast<data::ChangeClass>(c));
    std::stringstream ss(mapping);
    bool any = false;
    for (std::string item; std::getline(ss, item, ',');) {
        if (trim(item).empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ToolError("mapping entry '" + trim(item) + "' needs class=colour");
        colors[static_cast<int>(parse_class(item.substr(0, eq)))] = parse_color(item.substr(eq + 1));
        any = true;
    }
    if (!any) throw ToolError("empty colour mapping");
    return colors;
}

data::RgbImage recolor(const data::LabelMap& mask, const std::array<data::Rgb, data::kNumClasses>& colors) {
    data::RgbImage out(mask.height(), mask.width());
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) out.set(y, x, colors[static_cast<int>(mask.at(y, x))]);
    return out;
}

data::RgbImage overlay(const data::LabelMap& mask, const data::RgbImage& image, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ToolError("alpha must lie in [0, 1]");
    if (mask.height() != image.height() || mask.width() != image.width())
        throw ToolError("mask and image differ in size");
    data::RgbImage out = image;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) {
            const auto cls = mask.at(y, x);
            if (cls == data::ChangeClass::background) continue;
            const auto color = data::class_color(cls);
            const auto px = image.at(y, x);
            data::Rgb blended{};
            for (int k = 0; k < 3; ++k)
                blended[k] = static_cast<std::uint8_t>(std::lround((1 - alpha) * px[k] + alpha * color[k]));
            out.set(y, x, blended);
        }
    return out;
}

nlohmann::json area_stats(const data::LabelMap& mask, double res) {
    const auto counts = data::pixel_counts(mask);
    nlohmann::json out = nlohmann::json::object();
    for (int c = 0; c < data::kNumClasses; ++c) {
        const auto n = counts[static_cast<std::size_t>(c)];
        out[data::to_string(static_cast<data::ChangeClass>(c))] = {{"pixels", n},
                                                                   {"m2", static_cast<double>(n) * res * res}};
    }
    out["resolution_m_per_px"] = res;
    return out;
}

namespace {

Value make(ValueType t, nlohmann::json v) { return Value{t, std::move(v)}; }

std::string str(const Value& v) { return v.data.get<std::string>(); }

}  // namespace

ToolRegistry default_registry() {
    ToolRegistry r;
    const ParamSpec pair_param{"pair", ValueType::pair_ref, "an uploaded pair, or \"latest\""};
    const ParamSpec mask_param{"mask", ValueType::mask_ref, "a change mask from detect_changes"};

    r.add({"load_pair", "Checks that an image pair exists and returns its canonical ref.", {pair_param},
           ValueType::pair_ref},
          [](const std::vector<Value>& a, ToolContext& ctx) {
              return make(ValueType::pair_ref, ctx.load_pair(str(a[0])).ref);
          });

    r.add({"detect_changes", "Segments changed buildings and roads between T1 and T2; returns the change mask.",
           {pair_param}, ValueType::mask_ref},
          [](const std::vector<Value>& a, ToolContext& ctx) {
              const auto pair = ctx.load_pair(str(a[0]));
              auto& m = ctx.model();
              data::LabelMap mask;
              {
                  std::lock_guard lock(m.mutex);
                  mask = nn::predict(m.model, m.vocab, pair.t1, pair.t2).mask;
              }
              const auto id = store_png(ctx.store(), data::encode_mask(mask));
              ctx.emit({id, "mask", std::nullopt});
              return make(ValueType::mask_ref, id);
          });

    r.add({"caption_changes", "Describes the changes between T1 and T2 in one sentence.", {pair_param},
           ValueType::string},
          [](const std::vector<Value>& a, ToolContext& ctx) {
              const auto pair = ctx.load_pair(str(a[0]));
              auto& m = ctx.model();
              std::string caption;
              {
                  std::lock_guard lock(m.mutex);
                  caption = nn::predict(m.model, m.vocab, pair.t1, pair.t2).caption;
              }
              const auto ref = ctx.store().put_text(caption, "txt");
              ctx.emit({ref.id, "caption", caption});
              if (ctx.session()) ctx.session()->set_caption(caption);
              return make(ValueType::string, caption);
          });

    r.add({"count_objects", "Counts changed objects of one class (connected regions of the mask).",
           {mask_param, {"class", ValueType::string, "building or road"}}, ValueType::integer},
          [](const std::vector<Value>& a, ToolContext& ctx) {
              const auto cls = parse_class(str(a[1]));
              const auto n = data::count_objects(ctx.load_mask(str(a[0])), cls);
              if (ctx.session()) ctx.session()->set_count(data::to_string(cls), n);
              return make(ValueType::integer, n);
          });

    r.add({"recolor_mask", "Renders a mask with chosen colours per class.",
           {mask_param, {"mapping", ValueType::string, "comma-separated class=colour, e.g. building=green,road=blue"}},
           ValueType::image_ref},
          [](const std::vector<Value>& a, ToolContext& ctx) {
              const auto colors = parse_color_mapping(str(a[1]));
              const auto id = store_png(ctx.store(), recolor(ctx.load_mask(str(a[0])), colors));
              ctx.emit({id, "image", std::nullopt});
              return make(ValueType::image_ref, id);
          });

    r.add({"overlay", "Blends the mask colours over an image.",
           {mask_param,
            {"image", ValueType::image_ref, "\"latest:t1\", \"latest:t2\" or an image ref"},
            {"alpha", ValueType::real, "mask opacity in [0, 1]"}},
           ValueType::image_ref},
          [](const std::vector<Value>& a, ToolContext& ctx) {
              const auto out = overlay(ctx.load_mask(str(a[0])), ctx.load_image(str(a[1])), a[2].data.get<double>());
              const auto id = store_png(ctx.store(), out);
              ctx.emit({id, "image", std::nullopt});
              return make(ValueType::image_ref, id);
          });

    r.add({"area_stats", "Changed area per class in pixels and square metres.", {mask_param}, ValueType::json},
          [](const std::vector<Value>& a, ToolContext& ctx) {
              double res = 0.5;
              if (ctx.session() && ctx.session()->latest_pair()) res = ctx.load_pair("latest").resolution_m_per_px;
              const auto stats = area_stats(ctx.load_mask(str(a[0])), res);
              const auto ref = ctx.store().put_text(stats.dump(), "json");
              ctx.emit({ref.id, "stats", std::nullopt});
              return make(ValueType::json, stats);
          });
    return r;
}

}  // namespace mci::agent
