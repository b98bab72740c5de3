#include "mci/data/stats.hpp"

#include <algorithm>
#include <numeric>

namespace mci::data {
namespace {

// Disjoint-set forest over provisional labels.
class UnionFind {
public:
    int make() {
        parent_.push_back(static_cast<int>(parent_.size()));
        return parent_.back();
    }
    int find(int a) {
        while (parent_[a] != a) {
            parent_[a] = parent_[parent_[a]];
            a = parent_[a];
        }
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) std::swap(a, b);
        parent_[a] = b;  // smaller label wins so roots follow scan order
    }

private:
    std::vector<int> parent_;
};

}  // namespace

std::vector<ObjectInfo> find_objects(const LabelMap& mask) {
    const int h = mask.height();
    const int w = mask.width();
    std::vector<int> label(static_cast<std::size_t>(h) * w, -1);
    UnionFind uf;

    // First pass: provisional labels from the already-visited 8-neighbours
    // (W, NW, N, NE).
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const ChangeClass c = mask.at(y, x);
            if (c == ChangeClass::background) continue;
            int current = -1;
            const int dy[] = {0, -1, -1, -1};
            const int dx[] = {-1, -1, 0, 1};
            for (int k = 0; k < 4; ++k) {
                const int ny = y + dy[k], nx = x + dx[k];
                if (ny < 0 || nx < 0 || nx >= w) continue;
                if (mask.at(ny, nx) != c) continue;
                const int l = label[static_cast<std::size_t>(ny) * w + nx];
                if (current < 0)
                    current = l;
                else
                    uf.unite(current, l);
            }
            if (current < 0) current = uf.make();
            label[static_cast<std::size_t>(y) * w + x] = current;
        }
    }

    // Second pass: resolve roots and accumulate per-object extents.
    std::vector<int> root_to_object;
    std::vector<ObjectInfo> objects;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int l = label[static_cast<std::size_t>(y) * w + x];
            if (l < 0) continue;
            const int r = uf.find(l);
            if (static_cast<std::size_t>(r) >= root_to_object.size()) root_to_object.resize(r + 1, -1);
            if (root_to_object[r] < 0) {
                root_to_object[r] = static_cast<int>(objects.size());
                ObjectInfo o;
                o.cls = mask.at(y, x);
                o.min_x = o.max_x = x;
                o.min_y = o.max_y = y;
                objects.push_back(o);
            }
            ObjectInfo& o = objects[root_to_object[r]];
            ++o.area;
            o.min_x = std::min(o.min_x, x);
            o.max_x = std::max(o.max_x, x);
            o.max_y = std::max(o.max_y, y);
        }
    }
    for (auto& o : objects)
        o.bbox_area = static_cast<std::int64_t>(o.max_x - o.min_x + 1) * (o.max_y - o.min_y + 1);
    return objects;
}

std::int64_t count_objects(const LabelMap& mask, ChangeClass cls) {
    const auto objects = find_objects(mask);
    return std::count_if(objects.begin(), objects.end(), [&](const ObjectInfo& o) { return o.cls == cls; });
}

std::array<std::int64_t, kNumClasses> pixel_counts(const LabelMap& mask) {
    std::array<std::int64_t, kNumClasses> counts{};
    for (auto v : mask.raw()) ++counts[v];
    return counts;
}

double SplitStats::average_per_image(ChangeClass cls) const {
    const auto i = static_cast<std::size_t>(cls);
    return images_with[i] == 0 ? 0.0 : static_cast<double>(objects[i]) / static_cast<double>(images_with[i]);
}

void SplitStats::merge(const SplitStats& other) {
    images += other.images;
    for (int c = 0; c < kNumClasses; ++c) {
        objects[c] += other.objects[c];
        images_with[c] += other.images_with[c];
    }
    object_list.insert(object_list.end(), other.object_list.begin(), other.object_list.end());
}

nlohmann::json SplitStats::to_json(bool include_objects) const {
    nlohmann::json j;
    j["images"] = images;
    for (auto cls : {ChangeClass::road, ChangeClass::building}) {
        const auto i = static_cast<std::size_t>(cls);
        j[to_string(cls)] = {{"objects", objects[i]},
                             {"images_with", images_with[i]},
                             {"average_per_image", average_per_image(cls)}};
    }
    if (include_objects) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& o : object_list)
            list.push_back({{"class", to_string(o.cls)}, {"area", o.area}, {"bbox_area", o.bbox_area}});
        j["objects"] = std::move(list);
    }
    return j;
}

void StatsAccumulator::add(const LabelMap& mask) {
    ++stats_.images;
    std::array<bool, kNumClasses> seen{};
    for (const auto& o : find_objects(mask)) {
        const auto i = static_cast<std::size_t>(o.cls);
        ++stats_.objects[i];
        seen[i] = true;
        stats_.object_list.push_back(o);
    }
    for (int c = 0; c < kNumClasses; ++c)
        if (seen[c]) ++stats_.images_with[c];
}

SplitStats DatasetStats::total() const {
    SplitStats t;
    for (const auto& [_, s] : per_split) t.merge(s);
    return t;
}

nlohmann::json DatasetStats::to_json(bool include_objects) const {
    nlohmann::json j;
    for (const auto& [split, s] : per_split) j[to_string(split)] = s.to_json(include_objects);
    j["total"] = total().to_json(false);
    return j;
}

}  // namespace mci::data
