#include <doctest.h>
#include <torch/torch.h>

#include <random>

#include "mci/error.hpp"
#include "mci/nn/backbone.hpp"

using namespace mci::nn;

namespace {

std::vector<torch::Tensor> snapshot(const torch::nn::Module& m) {
    std::vector<torch::Tensor> out;
    for (const auto& p : m.parameters()) out.push_back(p.detach().clone());
    for (const auto& b : m.buffers()) out.push_back(b.detach().clone());
    return out;
}

bool same(const std::vector<torch::Tensor>& a, const std::vector<torch::Tensor>& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!torch::equal(a[i], b[i])) return false;
    return a.size() == b.size();
}

void train_steps(SmallConvBackbone& backbone, int steps) {
    torch::nn::Conv2d probe(torch::nn::Conv2dOptions(backbone.channels()[3], 1, 1));
    std::vector<torch::Tensor> params = probe->parameters();
    for (const auto& p : backbone.parameters())
        if (p.requires_grad()) params.push_back(p);
    torch::optim::Adam opt(params, torch::optim::AdamOptions(1e-2));
    backbone.train();
    for (int i = 0; i < steps; ++i) {
        opt.zero_grad();
        const auto [p1, p2] = encode_pair(backbone, torch::randn({2, 3, 64, 64}), torch::randn({2, 3, 64, 64}));
        (probe(p1[3]) - probe(p2[3])).pow(2).mean().add(probe(p1[3]).mean()).backward();
        opt.step();
    }
}

}  // namespace

TEST_CASE("default pyramid shapes at 256") {
    torch::manual_seed(1);
    SmallConvBackbone backbone(BackboneConfig{});
    backbone.eval();
    torch::NoGradGuard g;
    const auto p = backbone.encode(torch::randn({1, 3, 256, 256}));
    CHECK(p[0].sizes() == torch::IntArrayRef({1, 32, 64, 64}));
    CHECK(p[1].sizes() == torch::IntArrayRef({1, 64, 32, 32}));
    CHECK(p[2].sizes() == torch::IntArrayRef({1, 128, 16, 16}));
    CHECK(p[3].sizes() == torch::IntArrayRef({1, 256, 8, 8}));
}

TEST_CASE("pyramid shapes follow the config for random sizes") {
    std::mt19937 rng(2);
    std::uniform_int_distribution<int> k(1, 4);
    BackboneConfig cfg;
    cfg.channels = {4, 6, 8, 10};
    cfg.depth = {1, 0, 1, 2};
    SmallConvBackbone backbone(cfg);
    backbone.eval();
    torch::NoGradGuard g;
    for (int i = 0; i < 5; ++i) {
        const std::int64_t h = 32 * k(rng), w = 32 * k(rng);
        const auto p = backbone.encode(torch::randn({1, 3, h, w}));
        for (int s = 0; s < 4; ++s) {
            CHECK(p[s].size(1) == cfg.channels[s]);
            CHECK(p[s].size(2) == h / (4 << s));
            CHECK(p[s].size(3) == w / (4 << s));
        }
    }
}

TEST_CASE("sizes not divisible by 32 are rejected") {
    SmallConvBackbone backbone(BackboneConfig{});
    CHECK_THROWS_AS(backbone.encode(torch::zeros({1, 3, 48, 64})), mci::ShapeError);
    CHECK_THROWS_AS(encode_pair(backbone, torch::zeros({1, 3, 64, 64}), torch::zeros({1, 3, 64, 96})),
                    mci::ShapeError);
}

TEST_CASE("weight sharing: identical dates and swapped dates") {
    torch::manual_seed(3);
    BackboneConfig cfg;
    cfg.channels = {8, 8, 16, 16};
    SmallConvBackbone backbone(cfg);
    backbone.eval();
    torch::NoGradGuard g;
    const auto a = torch::randn({2, 3, 64, 64}), b = torch::randn({2, 3, 64, 64});
    const auto [x1, x2] = encode_pair(backbone, a, a);
    for (int s = 0; s < 4; ++s) CHECK(torch::equal(x1[s], x2[s]));
    const auto [p1, p2] = encode_pair(backbone, a, b);
    const auto [q1, q2] = encode_pair(backbone, b, a);
    for (int s = 0; s < 4; ++s) {
        CHECK(torch::equal(p1[s], q2[s]));
        CHECK(torch::equal(p2[s], q1[s]));
    }
}

TEST_CASE("freeze keeps parameters and statistics bit-identical") {
    torch::manual_seed(4);
    BackboneConfig cfg;
    cfg.channels = {4, 8, 8, 8};
    cfg.depth = {1, 1, 1, 1};
    SmallConvBackbone frozen(cfg), control(cfg);
    frozen.freeze();
    frozen.freeze();
    CHECK(frozen.frozen());
    const auto before = snapshot(frozen);
    train_steps(frozen, 10);
    CHECK(same(before, snapshot(frozen)));
    for (const auto& p : frozen.parameters()) CHECK(!p.requires_grad());
    for (const auto& m : frozen.modules(false)) CHECK(!m->is_training());

    const auto control_before = snapshot(control);
    train_steps(control, 1);
    CHECK(!same(control_before, snapshot(control)));
}

TEST_CASE("gradient reaches the encoder only when unfrozen") {
    torch::manual_seed(5);
    BackboneConfig cfg;
    cfg.channels = {4, 4, 4, 4};
    SmallConvBackbone backbone(cfg);
    const auto x = torch::randn({2, 3, 32, 32});
    backbone.encode(x)[3].sum().backward();
    for (const auto& p : backbone.parameters()) {
        CHECK(p.grad().defined());
    }
    SmallConvBackbone frozen(cfg);
    frozen.freeze();
    const auto out = frozen.encode(x)[3];
    CHECK(!out.requires_grad());
}

TEST_CASE("external variant needs a path and a loadable module") {
    BackboneConfig cfg;
    cfg.variant = BackboneVariant::external;
    CHECK_THROWS_AS(make_backbone(cfg), mci::Error);
    cfg.external_path = "/nonexistent/encoder.pt";
    CHECK_THROWS_AS(make_backbone(cfg), mci::IoError);
}
