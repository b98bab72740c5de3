#include <doctest.h>

#include <random>

#include "mci/error.hpp"
#include "mci/metrics/segmentation.hpp"
#include "oracles/miou_oracle.hpp"

using namespace mci::data;
using mci::metrics::ConfusionMatrix;

using oracle::oracle_miou;
using oracle::random_mask;

TEST_CASE("perfect prediction gives MIoU 1") {
    std::mt19937 rng(1);
    std::vector<LabelMap> masks;
    for (int i = 0; i < 4; ++i) masks.push_back(random_mask(rng, 8, 8));
    CHECK(mci::metrics::miou(masks, masks) == 1.0);
}

TEST_CASE("disjoint two-class prediction gives 0") {
    LabelMap pred(4, 4, ChangeClass::background), gt(4, 4, ChangeClass::building);
    CHECK(mci::metrics::miou({pred}, {gt}, 2) == 0.0);
    // with the third class absent everywhere it scores 1 under three classes
    CHECK(mci::metrics::miou({pred}, {gt}, 3) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("global confusion matches per-pixel oracle exactly") {
    std::mt19937 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<LabelMap> preds, gts;
        for (int i = 0; i < 1 + trial % 4; ++i) {
            preds.push_back(random_mask(rng, 8, 8));
            gts.push_back(random_mask(rng, 8, 8));
        }
        CHECK(mci::metrics::miou(preds, gts) == oracle_miou(preds, gts));
    }
}

TEST_CASE("confusion matrices merge associatively") {
    std::mt19937 rng(5);
    const auto p1 = random_mask(rng, 6, 6), g1 = random_mask(rng, 6, 6);
    const auto p2 = random_mask(rng, 6, 6), g2 = random_mask(rng, 6, 6);
    ConfusionMatrix whole, a, b;
    whole.add(p1, g1);
    whole.add(p2, g2);
    a.add(p1, g1);
    b.add(p2, g2);
    a.merge(b);
    CHECK(a.mean_iou() == whole.mean_iou());
    CHECK(a.total() == 72);
    CHECK(a.true_positive(1) + a.false_negative(1) ==
          std::count(g1.raw().begin(), g1.raw().end(), 1) + std::count(g2.raw().begin(), g2.raw().end(), 1));
}

TEST_CASE("shape mismatch is an error") {
    CHECK_THROWS_AS(mci::metrics::miou({LabelMap(2, 2)}, {LabelMap(2, 3)}), mci::ShapeError);
    CHECK_THROWS_AS(mci::metrics::miou({LabelMap(2, 2)}, {}), mci::ShapeError);
}
