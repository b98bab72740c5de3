#include <doctest.h>
#include <torch/torch.h>

#include "mci/error.hpp"
#include "mci/nn/bi3.hpp"
#include "oracles/finite_difference.hpp"

using namespace mci::nn;

namespace {

torch::Tensor rand64(std::vector<std::int64_t> shape) {
    return torch::randn(shape, torch::kFloat64).requires_grad_(true);
}

}  // namespace

TEST_CASE("token view is row-major and invertible") {
    const auto x = torch::arange(2 * 3 * 4 * 5, torch::kFloat32).view({2, 3, 4, 5});
    const auto t = to_tokens(x);
    CHECK(t.sizes() == torch::IntArrayRef({2, 20, 3}));
    CHECK(t[1][7][2].item<float>() == x[1][2][1][2].item<float>());
    CHECK(torch::equal(from_tokens(t, 4, 5), x));
}

TEST_CASE("lpe never decreases its input") {
    torch::manual_seed(1);
    Lpe lpe(6);
    lpe->train();
    for (int i = 0; i < 50; ++i) {
        const auto x = torch::randn({2, 6, 5, 7}) * 3;
        CHECK((lpe(x) - x).min().item<float>() >= 0.0f);
    }
}

TEST_CASE("lpe with zeroed convolutions and BN scale is the identity") {
    Lpe lpe(4);
    torch::NoGradGuard g;
    for (auto& p : lpe->parameters()) p.zero_();
    const auto x = torch::randn({2, 4, 6, 6});
    CHECK(torch::equal(lpe(x), x));
}

TEST_CASE("gdfa on identical inputs is constant over positions") {
    torch::manual_seed(2);
    Gdfa gdfa(8, 8);
    torch::NoGradGuard g;
    const auto x = torch::randn({1, 16, 8});
    const auto out = gdfa(x, x);
    CHECK((out - out[0][0]).abs().max().item<float>() < 1e-5f);
    const auto expected = gdfa->w_v(gdfa->w_d->bias.unsqueeze(0));
    CHECK(torch::allclose(out[0][3], expected[0], 1e-5, 1e-6));
}

TEST_CASE("gdfa with one token returns its value row") {
    torch::manual_seed(3);
    Gdfa gdfa(5, 5);
    torch::NoGradGuard g;
    const auto a = torch::randn({2, 1, 5}), b = torch::randn({2, 1, 5});
    CHECK(torch::equal(gdfa(a, b), gdfa->values(a, b)));
}

TEST_CASE("gdfa attention rows are stochastic") {
    torch::manual_seed(4);
    Gdfa gdfa(6, 4);
    gdfa->to(torch::kFloat64);
    torch::NoGradGuard g;
    const auto a = torch::randn({2, 9, 6}, torch::kFloat64), b = torch::randn({2, 9, 6}, torch::kFloat64);
    const auto att = gdfa->attention(a, b);
    CHECK((att.sum(-1) - 1).abs().max().item<double>() < 1e-12);
    CHECK(gdfa(a, b).sizes() == a.sizes());
}

TEST_CASE("gdfa shape mismatch throws") {
    Gdfa gdfa(4, 4);
    CHECK_THROWS_AS(gdfa(torch::zeros({1, 3, 4}), torch::zeros({1, 2, 4})), mci::ShapeError);
}

TEST_CASE("lpe gradient matches finite differences") {
    torch::manual_seed(5);
    Lpe lpe(3);
    lpe->to(torch::kFloat64);
    const auto x = rand64({2, 3, 4, 4});
    const auto r = oracle::grad_check([&] { return lpe(x); }, oracle::with_parameters({{"x", x}}, *lpe));
    INFO(r.worst);
    CHECK(r.max_rel_err < 1e-5);
}

TEST_CASE("gdfa gradient matches finite differences") {
    torch::manual_seed(6);
    Gdfa gdfa(6, 4);
    gdfa->to(torch::kFloat64);
    const auto a = rand64({2, 16, 6}), b = rand64({2, 16, 6});
    const auto r = oracle::grad_check([&] { return gdfa(a, b); },
                                      oracle::with_parameters({{"anchor", a}, {"other", b}}, *gdfa));
    INFO(r.worst);
    CHECK(r.max_rel_err < 1e-5);
}

TEST_CASE("three-layer stack gradient matches finite differences") {
    torch::manual_seed(7);
    Bi3Config cfg;
    Bi3Stack stack(8, cfg);
    stack->to(torch::kFloat64);
    const auto x1 = rand64({2, 8, 4, 4}), x2 = rand64({2, 8, 4, 4});
    const auto r = oracle::grad_check(
        [&] {
            const auto [z1, z2] = stack(x1, x2);
            return torch::cat({z1, z2}, 1);
        },
        oracle::with_parameters({{"x1", x1}, {"x2", x2}}, *stack));
    INFO(r.worst);
    CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("bi3 layer with shared gdfa weights is swap-symmetric") {
    torch::manual_seed(8);
    Bi3Config cfg;
    cfg.share_gdfa_weights = true;
    Bi3Layer layer(6, cfg);
    layer->eval();
    torch::NoGradGuard g;
    const auto a = torch::randn({1, 6, 5, 5}), b = torch::randn({1, 6, 5, 5});
    const auto [p, q] = layer(a, b);
    const auto [r, s] = layer(b, a);
    CHECK(torch::equal(p, s));
    CHECK(torch::equal(q, r));
}

TEST_CASE("bi3 layer keeps shape and is repeatable in eval mode") {
    torch::manual_seed(9);
    Bi3Layer layer(8, Bi3Config{});
    layer->eval();
    torch::NoGradGuard g;
    for (auto [h, w] : {std::pair{5, 5}, std::pair{6, 9}, std::pair{8, 8}}) {
        const auto a = torch::randn({2, 8, h, w}), b = torch::randn({2, 8, h, w});
        const auto [p, q] = layer(a, b);
        CHECK(p.sizes() == a.sizes());
        CHECK(q.sizes() == b.sizes());
        const auto [p2, q2] = layer(a, b);
        CHECK(torch::equal(p, p2));
        CHECK(torch::equal(q, q2));
    }
    CHECK_THROWS_AS(layer(torch::zeros({1, 8, 5, 5}), torch::zeros({1, 8, 5, 6})), mci::ShapeError);
}

TEST_CASE("every bi3 parameter receives gradient") {
    torch::manual_seed(10);
    Bi3Layer layer(6, Bi3Config{});
    layer->train();
    const auto a = torch::randn({2, 6, 5, 5}), b = torch::randn({2, 6, 5, 5});
    const auto [p, q] = layer(a, b);
    ((p * torch::randn_like(p)).sum() + (q * torch::randn_like(q)).sum()).backward();
    for (const auto& kv : layer->named_parameters()) {
        INFO(kv.key());
        CHECK(kv.value().grad().defined());
        CHECK(kv.value().grad().abs().sum().item<double>() > 0);
    }
}

TEST_CASE("gdfa projects back when the attention width differs") {
    Gdfa gdfa(8, 4);
    CHECK(gdfa->proj);
    CHECK(gdfa(torch::randn({1, 3, 8}), torch::randn({1, 3, 8})).size(2) == 8);
    Gdfa same(8, 0);
    CHECK(same->attn_dim() == 8);
    CHECK(!same->proj);
}
