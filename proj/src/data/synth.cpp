#include "mci/data/synth.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <optional>
#include <random>

#include "mci/data/corpus.hpp"
#include "mci/data/mask_codec.hpp"
#include "mci/data/png_io.hpp"
#include "mci/error.hpp"

namespace fs = std::filesystem;

namespace mci::data {
namespace {

constexpr int kGrid = 4;          // every object edge sits on this grid
constexpr int kRoadWidth = 8;
constexpr int kClearance = 4;     // minimum gap between objects

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    int uniform(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    bool chance(int percent) { return uniform(0, 99) < percent; }

private:
    std::mt19937_64 engine_;
};

struct Rect {
    int x, y, w, h;
};

enum class Scenario { none, buildings_in, road_only, road_and_buildings, buildings_out };

class Occupancy {
public:
    explicit Occupancy(int size) : size_(size), cells_(static_cast<std::size_t>(size) * size, 0) {}

    bool free(const Rect& r) const {
        const int x0 = std::max(0, r.x - kClearance), y0 = std::max(0, r.y - kClearance);
        const int x1 = std::min(size_, r.x + r.w + kClearance), y1 = std::min(size_, r.y + r.h + kClearance);
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x)
                if (cells_[static_cast<std::size_t>(y) * size_ + x]) return false;
        return true;
    }
    void take(const Rect& r) {
        for (int y = r.y; y < r.y + r.h; ++y)
            for (int x = r.x; x < r.x + r.w; ++x) cells_[static_cast<std::size_t>(y) * size_ + x] = 1;
    }

private:
    int size_;
    std::vector<std::uint8_t> cells_;
};

const std::array<Rgb, 3> kGroundPalette = {Rgb{96, 120, 72}, Rgb{150, 135, 100}, Rgb{120, 128, 96}};
const std::array<Rgb, 4> kRoofPalette = {Rgb{205, 205, 210}, Rgb{175, 80, 60}, Rgb{85, 110, 165}, Rgb{225, 190, 150}};
constexpr Rgb kRoadTone{118, 118, 116};

std::uint8_t clamp_u8(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

void paint(RgbImage& img, const Rect& r, Rgb base, Rng& rng, int noise) {
    for (int y = r.y; y < r.y + r.h; ++y)
        for (int x = r.x; x < r.x + r.w; ++x) {
            const int n = rng.uniform(-noise, noise);
            img.set(y, x, {clamp_u8(base[0] + n), clamp_u8(base[1] + n), clamp_u8(base[2] + n)});
        }
}

void paint_ground(RgbImage& img, Rgb base, int shift, Rng& rng) {
    paint(img, {0, 0, img.width(), img.height()}, {clamp_u8(base[0] + shift), clamp_u8(base[1] + shift),
                                                   clamp_u8(base[2] + shift)},
          rng, 8);
}

void paint_building(RgbImage& img, const Rect& r, Rgb roof, Rng& rng) {
    paint(img, r, roof, rng, 4);
    // darker rim reads as a roof edge
    const Rgb rim{clamp_u8(roof[0] - 60), clamp_u8(roof[1] - 60), clamp_u8(roof[2] - 60)};
    for (int x = r.x; x < r.x + r.w; ++x) {
        img.set(r.y, x, rim);
        img.set(r.y + r.h - 1, x, rim);
    }
    for (int y = r.y; y < r.y + r.h; ++y) {
        img.set(y, r.x, rim);
        img.set(y, r.x + r.w - 1, rim);
    }
}

int snap(int v) { return (v / kGrid) * kGrid; }

std::optional<Rect> place_building(Occupancy& occ, int size, Rng& rng) {
    const int max_side = std::max(12, size / 8);
    for (int attempt = 0; attempt < 64; ++attempt) {
        const int w = snap(rng.uniform(12, max_side));
        const int h = snap(rng.uniform(12, max_side));
        const int x = snap(rng.uniform(kGrid, size - w - kGrid));
        const int y = snap(rng.uniform(kGrid, size - h - kGrid));
        const Rect r{x, y, w, h};
        if (occ.free(r)) {
            occ.take(r);
            return r;
        }
    }
    return std::nullopt;
}

// A straight band across the image, optionally with one perpendicular branch
// joined to it; always a single 8-connected component.
std::vector<Rect> make_road(int size, Rng& rng) {
    std::vector<Rect> bands;
    const bool horizontal = rng.chance(50);
    const int at = snap(rng.uniform(size / 4, 3 * size / 4 - kRoadWidth));
    if (horizontal)
        bands.push_back({0, at, size, kRoadWidth});
    else
        bands.push_back({at, 0, kRoadWidth, size});
    if (rng.chance(50)) {
        const int along = snap(rng.uniform(size / 4, 3 * size / 4 - kRoadWidth));
        const bool towards_start = rng.chance(50);
        if (horizontal) {
            const int y0 = towards_start ? 0 : at + kRoadWidth;
            const int len = towards_start ? at : size - y0;
            bands.push_back({along, y0, kRoadWidth, len});
        } else {
            const int x0 = towards_start ? 0 : at + kRoadWidth;
            const int len = towards_start ? at : size - x0;
            bands.push_back({x0, along, len, kRoadWidth});
        }
    }
    return bands;
}

Rect bounding(const std::vector<Rect>& rs) {
    int x0 = rs[0].x, y0 = rs[0].y, x1 = rs[0].x + rs[0].w, y1 = rs[0].y + rs[0].h;
    for (const auto& r : rs) {
        x0 = std::min(x0, r.x);
        y0 = std::min(y0, r.y);
        x1 = std::max(x1, r.x + r.w);
        y1 = std::max(y1, r.y + r.h);
    }
    return {x0, y0, x1 - x0, y1 - y0};
}

const char* number_word(std::size_t n) {
    static const char* words[] = {"zero", "one", "two", "three", "four", "five"};
    return n < 6 ? words[n] : "many";
}

std::string location_phrase(const std::vector<Edit>& edits, ChangeClass cls, int size) {
    double cx = 0, cy = 0;
    int n = 0;
    for (const auto& e : edits) {
        if (e.cls != cls) continue;
        cx += e.x + e.w / 2.0;
        cy += e.y + e.h / 2.0;
        ++n;
    }
    if (n == 0) return "center";
    cx /= n;
    cy /= n;
    const char* vert = cy < size / 3.0 ? "top" : (cy > 2.0 * size / 3.0 ? "bottom" : "");
    const char* horiz = cx < size / 3.0 ? "left" : (cx > 2.0 * size / 3.0 ? "right" : "");
    std::string phrase = vert;
    if (*horiz) phrase += phrase.empty() ? horiz : std::string(" ") + horiz;
    return phrase.empty() ? "center" : phrase;
}

}  // namespace

std::int64_t SynthPair::edit_count(ChangeClass cls) const {
    return std::count_if(edits.begin(), edits.end(), [&](const Edit& e) { return e.cls == cls; });
}

std::vector<std::string> describe_edits(const std::vector<Edit>& edits, int size) {
    std::size_t built = 0, removed = 0, roads = 0;
    for (const auto& e : edits) {
        if (e.cls == ChangeClass::road) ++roads;
        else if (e.op == EditOp::insert) ++built;
        else ++removed;
    }
    const std::string loc = location_phrase(edits, ChangeClass::building, size);
    const std::string road_loc = location_phrase(edits, ChangeClass::road, size);
    const std::string n = number_word(built);

    if (edits.empty()) {
        return {"the scene is the same as before", "there is no difference", "nothing has changed in the scene",
                "the two scenes seem identical", "no change has occurred"};
    }
    if (roads > 0 && built > 0) {
        return {"some houses are built along the road", "a road and " + n + " buildings appear",
                "a road is built with " + n + " houses beside it", n + " houses and a road appear",
                "many houses are constructed along a new road"};
    }
    if (roads > 0) {
        return {"a road is built at the " + road_loc, "a new road appears at the " + road_loc,
                "a road is constructed in the scene", "there is a new road at the " + road_loc,
                "a road appears at the " + road_loc};
    }
    if (removed > 0) {
        if (removed == 1) {
            return {"a building at the " + loc + " is removed", "a house is demolished at the " + loc,
                    "one building disappears at the " + loc, "the building at the " + loc + " is gone",
                    "a building is removed from the scene"};
        }
        const std::string m = number_word(removed);
        return {m + " buildings at the " + loc + " are removed", m + " houses are demolished at the " + loc,
                "some buildings disappear at the " + loc, "the buildings at the " + loc + " are gone",
                m + " buildings are removed from the scene"};
    }
    if (built == 1) {
        return {"a building appears at the " + loc, "a house is built at the " + loc,
                "a new building is constructed at the " + loc, "there is a new house at the " + loc,
                "one building appears at the " + loc};
    }
    return {n + " buildings appear at the " + loc, n + " houses are built at the " + loc,
            "some new buildings are constructed at the " + loc, "there are " + n + " new houses at the " + loc,
            n + " buildings are built in the scene"};
}

SynthPair synthesize_pair(std::uint64_t seed, int index, int size, Split split) {
    if (size < 64) throw Error("synthetic image size must be at least 64");
    Rng rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(index) * 0xBF58476D1CE4E5B9ULL + 1);

    const Scenario scenarios[] = {Scenario::none, Scenario::buildings_in, Scenario::buildings_in,
                                  Scenario::road_only, Scenario::road_and_buildings, Scenario::buildings_out};
    const Scenario scenario = scenarios[rng.uniform(0, 5)];

    SynthPair out;
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%06d.png", to_string(split).c_str(), index);
    out.filename = name;
    out.pair.id = pair_id_from_filename(out.filename);
    out.pair.split = split;
    out.pair.resolution_m_per_px = 0.5;
    out.pair.t1 = RgbImage(size, size);
    out.pair.t2 = RgbImage(size, size);
    out.mask = LabelMap(size, size);

    const Rgb ground = kGroundPalette[rng.uniform(0, static_cast<int>(kGroundPalette.size()) - 1)];
    paint_ground(out.pair.t1, ground, 0, rng);
    paint_ground(out.pair.t2, ground, rng.uniform(-6, 6), rng);

    Occupancy occ(size);

    if (scenario == Scenario::road_only || scenario == Scenario::road_and_buildings) {
        const auto bands = make_road(size, rng);
        for (const auto& b : bands) {
            occ.take(b);
            paint(out.pair.t2, b, kRoadTone, rng, 3);
            for (int y = b.y; y < b.y + b.h; ++y)
                for (int x = b.x; x < b.x + b.w; ++x) out.mask.set(y, x, ChangeClass::road);
        }
        const Rect bb = bounding(bands);
        out.edits.push_back({ChangeClass::road, EditOp::insert, bb.x, bb.y, bb.w, bb.h});
    }

    int n_insert = 0, n_remove = 0;
    switch (scenario) {
        case Scenario::buildings_in: n_insert = rng.uniform(1, 3); break;
        case Scenario::road_and_buildings: n_insert = rng.uniform(2, 4); break;
        case Scenario::buildings_out: n_remove = rng.uniform(1, 2); break;
        default: break;
    }
    for (int i = 0; i < n_insert + n_remove; ++i) {
        const auto r = place_building(occ, size, rng);
        if (!r) break;
        const Rgb roof = kRoofPalette[rng.uniform(0, static_cast<int>(kRoofPalette.size()) - 1)];
        const bool insert = i < n_insert;
        paint_building(insert ? out.pair.t2 : out.pair.t1, *r, roof, rng);
        for (int y = r->y; y < r->y + r->h; ++y)
            for (int x = r->x; x < r->x + r->w; ++x) out.mask.set(y, x, ChangeClass::building);
        out.edits.push_back({ChangeClass::building, insert ? EditOp::insert : EditOp::remove, r->x, r->y, r->w, r->h});
    }

    // Unchanged buildings appear identically in both dates.
    const int n_static = rng.uniform(0, 2);
    for (int i = 0; i < n_static; ++i) {
        const auto r = place_building(occ, size, rng);
        if (!r) break;
        const Rgb roof = kRoofPalette[rng.uniform(0, static_cast<int>(kRoofPalette.size()) - 1)];
        Rng twin(rng.uniform(0, 1 << 30));
        Rng twin_copy = twin;
        paint_building(out.pair.t1, *r, roof, twin);
        paint_building(out.pair.t2, *r, roof, twin_copy);
    }

    out.captions = describe_edits(out.edits, size);
    return out;
}

nlohmann::json edit_log_json(const std::vector<SynthPair>& pairs) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& p : pairs) {
        nlohmann::json edits = nlohmann::json::array();
        for (const auto& e : p.edits) {
            edits.push_back({{"class", to_string(e.cls)},
                             {"op", e.op == EditOp::insert ? "insert" : "remove"},
                             {"x", e.x}, {"y", e.y}, {"w", e.w}, {"h", e.h}});
        }
        list.push_back({{"filename", p.filename},
                        {"split", to_string(p.pair.split)},
                        {"edits", edits},
                        {"counts", {{"building", p.edit_count(ChangeClass::building)},
                                    {"road", p.edit_count(ChangeClass::road)}}}});
    }
    return {{"pairs", list}};
}

std::vector<SynthPair> synthesize_corpus(const SynthOptions& opts, const fs::path& out_dir) {
    if (opts.n_pairs < 1) throw Error("synthesize_corpus needs at least one pair");
    if (opts.n_val < 0 || opts.n_test < 0 || opts.n_val + opts.n_test > opts.n_pairs)
        throw Error("val/test counts exceed the number of pairs");
    const int n_train = opts.n_pairs - opts.n_val - opts.n_test;

    std::vector<SynthPair> pairs;
    std::vector<CaptionEntry> captions;
    for (int i = 0; i < opts.n_pairs; ++i) {
        const Split split = i < n_train ? Split::train : (i < n_train + opts.n_val ? Split::val : Split::test);
        SynthPair p = synthesize_pair(opts.seed, i, opts.size, split);
        const fs::path split_dir = out_dir / to_string(split);
        write_png(split_dir / "A" / p.filename, p.pair.t1);
        write_png(split_dir / "B" / p.filename, p.pair.t2);
        write_png(split_dir / "label" / p.filename, encode_mask(p.mask));
        captions.push_back({p.filename, split, p.captions});
        pairs.push_back(std::move(p));
    }
    write_captions_json(out_dir / "captions.json", captions);

    std::ofstream log(out_dir / "edit_log.json", std::ios::trunc);
    if (!log) throw IoError("cannot write edit log under " + out_dir.string());
    log << edit_log_json(pairs).dump(1) << '\n';
    return pairs;
}

}  // namespace mci::data
