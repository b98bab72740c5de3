#include <doctest.h>
#include <torch/torch.h>

#include "mci/data/vocabulary.hpp"
#include "mci/error.hpp"
#include "mci/nn/captioning_head.hpp"
#include "oracles/finite_difference.hpp"

using namespace mci::nn;
using mci::data::Vocabulary;

namespace {

DecoderConfig small_decoder() {
    DecoderConfig d;
    d.embed_dim = 16;
    d.heads = 4;
    d.layers = 2;
    d.ffn_dim = 32;
    d.max_len = 12;
    return d;
}

}  // namespace

TEST_CASE("bridge with the refinement path zeroed returns the merge") {
    DomainBridge bridge(4, 8);
    torch::NoGradGuard g;
    bridge->out->weight.zero_();
    bridge->out->bias.zero_();
    const auto a = torch::randn({1, 4, 3, 3}), b = torch::randn({1, 4, 3, 3});
    CHECK(torch::equal(bridge(a, b), bridge->merge(torch::cat({a, b}, 1))));
}

TEST_CASE("bridge output at default widths") {
    DomainBridge bridge(256, 512);
    bridge->eval();
    torch::NoGradGuard g;
    CHECK(bridge(torch::randn({1, 256, 8, 8}), torch::randn({1, 256, 8, 8})).sizes() ==
          torch::IntArrayRef({1, 512, 8, 8}));
}

TEST_CASE("bridge gradient matches finite differences") {
    torch::manual_seed(21);
    DomainBridge bridge(3, 4);
    bridge->to(torch::kFloat64);
    const auto a = torch::randn({2, 3, 4, 4}, torch::kFloat64).requires_grad_(true);
    const auto b = torch::randn({2, 3, 4, 4}, torch::kFloat64).requires_grad_(true);
    const auto r = oracle::grad_check([&] { return bridge(a, b); },
                                      oracle::with_parameters({{"x1", a}, {"x2", b}}, *bridge));
    INFO(r.worst);
    CHECK(r.max_rel_err < 1e-5);
}

TEST_CASE("sinusoidal table") {
    const auto t = sinusoidal_positions(5, 6);
    CHECK(t.sizes() == torch::IntArrayRef({5, 6}));
    CHECK(t[0][0].item<double>() == 0.0);
    CHECK(t[0][1].item<double>() == 1.0);
    CHECK(t[3][2].item<double>() == doctest::Approx(std::sin(3.0 / std::pow(10000.0, 2.0 / 6))));
}

TEST_CASE("decoding is causal") {
    torch::manual_seed(22);
    CaptioningHead head(8, Bi3Config{}, small_decoder(), 20);
    head->eval();
    torch::NoGradGuard g;
    const auto memory = torch::randn({1, 4, 16});
    auto tokens = torch::tensor({1, 5, 7, 9, 4, 6}, torch::kInt64).unsqueeze(0);
    const auto base = head(memory, tokens);
    for (int t = 0; t < 5; ++t) {
        auto changed = tokens.clone();
        changed[0][t + 1] = 11;
        const auto other = head(memory, changed);
        CHECK(torch::equal(base.narrow(1, 0, t + 1), other.narrow(1, 0, t + 1)));
    }
}

TEST_CASE("cross-attention over a single memory token returns its value row") {
    torch::manual_seed(23);
    MultiHeadAttention attn(8, 2);
    torch::NoGradGuard g;
    const auto query = torch::randn({1, 5, 8}), memory = torch::randn({1, 1, 8});
    const auto out = attn(query, memory);
    const auto expected = attn->o(attn->v(memory));
    for (int i = 0; i < 5; ++i) CHECK(torch::allclose(out[0][i], expected[0][0], 1e-6, 1e-6));
}

TEST_CASE("decode_step validates the prefix") {
    CaptioningHead head(8, Bi3Config{}, small_decoder(), 20);
    const auto memory = torch::randn({1, 4, 16});
    CHECK_THROWS_AS(head->decode_step(memory, torch::zeros({1, 0}, torch::kInt64)), mci::Error);
    CHECK_THROWS_AS(head->decode_step(memory, torch::tensor({5, 6}, torch::kInt64).unsqueeze(0)), mci::Error);
    CHECK_THROWS_AS(head->decode_step(memory, torch::ones({1, 12}, torch::kInt64)), mci::Error);
    CHECK(head->decode_step(memory, torch::ones({1, 1}, torch::kInt64)).sizes() == torch::IntArrayRef({1, 20}));
}

TEST_CASE("untrained generation stops by max_len") {
    torch::manual_seed(24);
    auto cfg = small_decoder();
    CaptioningHead head(8, Bi3Config{}, cfg, 30);
    head->eval();
    for (int i = 0; i < 3; ++i) {
        const auto memory = torch::randn({2, 4, 16});
        for (const auto& seq : head->generate(memory, DecodeMode::greedy, 1)) {
            CHECK(seq.size() <= static_cast<std::size_t>(cfg.max_len));
            CHECK(seq.front() == Vocabulary::kBos);
        }
        for (const auto& seq : head->generate(memory, DecodeMode::beam, 3)) {
            CHECK(seq.size() <= static_cast<std::size_t>(cfg.max_len));
            CHECK(seq.front() == Vocabulary::kBos);
        }
    }
}

TEST_CASE("beam of width one equals greedy") {
    torch::manual_seed(25);
    CaptioningHead head(8, Bi3Config{}, small_decoder(), 9);
    head->eval();
    for (int i = 0; i < 10; ++i) {
        const auto memory = torch::randn({1, 4, 16}) * 2;
        CHECK(head->beam(memory, 1) == head->greedy(memory).front());
    }
}

TEST_CASE("memory has one token per stride-32 cell") {
    torch::manual_seed(26);
    CaptioningHead head(8, Bi3Config{}, small_decoder(), 10);
    head->eval();
    torch::NoGradGuard g;
    FeaturePyramid p;
    for (int s = 0; s < 3; ++s) p[s] = torch::zeros({1});
    p[3] = torch::randn({2, 8, 3, 5});
    CHECK(head->memory(p, p).sizes() == torch::IntArrayRef({2, 15, 16}));
}
