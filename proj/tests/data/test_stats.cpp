#include <doctest.h>

#include <random>

#include "mci/data/stats.hpp"
#include "oracles/flood_fill.hpp"

using namespace mci::data;

namespace {

std::vector<oracle::Blob> engine_blobs(const LabelMap& m) {
    std::vector<oracle::Blob> out;
    for (const auto& o : find_objects(m)) out.push_back({static_cast<int>(o.cls), static_cast<long>(o.area),
                                                         static_cast<long>(o.bbox_area)});
    std::sort(out.begin(), out.end());
    return out;
}

void fill(LabelMap& m, int y, int x, int h, int w, ChangeClass c) {
    for (int yy = y; yy < y + h; ++yy)
        for (int xx = x; xx < x + w; ++xx) m.set(yy, xx, c);
}

}  // namespace

TEST_CASE("two disjoint building blobs count as two") {
    LabelMap m(10, 10);
    fill(m, 0, 0, 2, 2, ChangeClass::building);
    fill(m, 6, 6, 3, 3, ChangeClass::building);
    CHECK(count_objects(m, ChangeClass::building) == 2);
    CHECK(count_objects(m, ChangeClass::road) == 0);
}

TEST_CASE("rectangle area equals bbox area") {
    LabelMap m(8, 8);
    fill(m, 2, 1, 3, 4, ChangeClass::building);
    const auto objs = find_objects(m);
    REQUIRE(objs.size() == 1);
    CHECK(objs[0].area == 12);
    CHECK(objs[0].bbox_area == 12);
}

TEST_CASE("diagonal neighbours join under 8-connectivity; classes never merge") {
    LabelMap m(4, 4);
    m.set(0, 0, ChangeClass::road);
    m.set(1, 1, ChangeClass::road);
    m.set(2, 2, ChangeClass::building);
    CHECK(count_objects(m, ChangeClass::road) == 1);
    CHECK(count_objects(m, ChangeClass::building) == 1);
    const auto objs = find_objects(m);
    CHECK(objs[0].bbox_area == 4);
}

TEST_CASE("U shape needs label merging") {
    LabelMap m(5, 5);
    fill(m, 0, 0, 4, 1, ChangeClass::building);
    fill(m, 0, 4, 4, 1, ChangeClass::building);
    fill(m, 4, 0, 1, 5, ChangeClass::building);
    CHECK(count_objects(m, ChangeClass::building) == 1);
}

TEST_CASE("component labelling matches flood fill on random masks") {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 500; ++trial) {
        const LabelMap m = oracle::random_blob_mask(rng, 8 + trial % 25, 8 + (trial * 7) % 31);
        const auto expected = oracle::flood_fill_blobs(m);
        REQUIRE(engine_blobs(m) == expected);
        for (const auto& o : find_objects(m)) {
            CHECK(o.area > 0);
            CHECK(o.area <= o.bbox_area);
        }
    }
}

TEST_CASE("split statistics aggregate counts and images") {
    LabelMap a(6, 6), b(6, 6), c(6, 6);
    fill(a, 0, 0, 2, 2, ChangeClass::building);
    fill(a, 4, 4, 2, 2, ChangeClass::building);
    fill(b, 0, 0, 6, 1, ChangeClass::road);
    const SplitStats s = compute_stats(std::vector<LabelMap>{a, b, c});
    CHECK(s.images == 3);
    CHECK(s.objects[1] == 2);
    CHECK(s.objects[2] == 1);
    CHECK(s.images_with[1] == 1);
    CHECK(s.images_with[2] == 1);
    CHECK(s.average_per_image(ChangeClass::building) == doctest::Approx(2.0));
    CHECK(s.object_list.size() == 3);
}
