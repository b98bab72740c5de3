#include <doctest.h>

#include <random>

#include "mci/data/mask_codec.hpp"
#include "mci/data/png_io.hpp"

using namespace mci::data;

namespace {

LabelMap random_mask(std::mt19937& rng, int h, int w) {
    LabelMap m(h, w);
    std::uniform_int_distribution<int> cls(0, 2);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m.set(y, x, static_cast<ChangeClass>(cls(rng)));
    return m;
}

}  // namespace

TEST_CASE("png encode/decode preserves pixels") {
    RgbImage img(5, 7);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x)
            img.set(y, x, {static_cast<std::uint8_t>(y * 40), static_cast<std::uint8_t>(x * 30), 200});
    const auto bytes = encode_png(img);
    CHECK(decode_png(bytes) == img);
    CHECK(encode_png(img) == bytes);
}

TEST_CASE("png decode rejects garbage") {
    std::vector<std::uint8_t> junk = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    CHECK_THROWS_AS(decode_png(junk), mci::IoError);
}

TEST_CASE("mask codec colours") {
    LabelMap m(1, 3);
    m.set(0, 1, ChangeClass::building);
    m.set(0, 2, ChangeClass::road);
    const RgbImage rgb = encode_mask(m);
    CHECK(rgb.at(0, 0) == Rgb{0, 0, 0});
    CHECK(rgb.at(0, 1) == Rgb{255, 0, 0});
    CHECK(rgb.at(0, 2) == Rgb{255, 255, 0});
}

TEST_CASE("mask codec round trip is byte-identical through png") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const LabelMap m = random_mask(rng, 3 + trial % 7, 4 + trial % 5);
        const auto png = encode_png(encode_mask(m));
        const LabelMap back = decode_mask(decode_png(png));
        CHECK(back == m);
        CHECK(encode_png(encode_mask(back)) == png);
    }
}

TEST_CASE("unknown mask colour reports the first offending pixel") {
    RgbImage rgb(4, 4);
    rgb.set(2, 3, {1, 2, 3});
    rgb.set(3, 0, {9, 9, 9});
    try {
        decode_mask(rgb);
        FAIL("expected MaskDecodeError");
    } catch (const MaskDecodeError& e) {
        CHECK(e.y() == 2);
        CHECK(e.x() == 3);
        CHECK(e.color() == Rgb{1, 2, 3});
    }
}
