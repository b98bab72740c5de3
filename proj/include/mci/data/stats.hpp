#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include <nlohmann/json.hpp>

#include "mci/data/image.hpp"

namespace mci::data {

/// One changed object: a maximal 8-connected set of same-class pixels.
struct ObjectInfo {
    ChangeClass cls = ChangeClass::background;
    std::int64_t area = 0;
    std::int64_t bbox_area = 0;
    int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};

/// Objects of every non-background class, ordered by first pixel in
/// row-major scan.
std::vector<ObjectInfo> find_objects(const LabelMap& mask);
std::int64_t count_objects(const LabelMap& mask, ChangeClass cls);
std::array<std::int64_t, kNumClasses> pixel_counts(const LabelMap& mask);

struct SplitStats {
    std::int64_t images = 0;
    std::array<std::int64_t, kNumClasses> objects{};      // indexed by ChangeClass
    std::array<std::int64_t, kNumClasses> images_with{};  // images containing >= 1 object of the class
    std::vector<ObjectInfo> object_list;

    /// objects / images_with, 0 when no image holds the class.
    double average_per_image(ChangeClass cls) const;
    void merge(const SplitStats& other);
    nlohmann::json to_json(bool include_objects = false) const;
};

class StatsAccumulator {
public:
    void add(const LabelMap& mask);
    const SplitStats& result() const { return stats_; }

private:
    SplitStats stats_;
};

template <typename MaskRange>
SplitStats compute_stats(const MaskRange& masks) {
    StatsAccumulator acc;
    for (const auto& m : masks) acc.add(m);
    return acc.result();
}

struct DatasetStats {
    std::map<Split, SplitStats> per_split;
    SplitStats total() const;
    nlohmann::json to_json(bool include_objects = false) const;
};

}  // namespace mci::data
