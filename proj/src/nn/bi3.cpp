#include "mci/nn/bi3.hpp"

#include <cmath>

#include "mci/error.hpp"

namespace mci::nn {

namespace F = torch::nn::functional;

torch::Tensor to_tokens(const torch::Tensor& map) { return map.flatten(2).transpose(1, 2); }

torch::Tensor from_tokens(const torch::Tensor& tokens, std::int64_t h, std::int64_t w) {
    return tokens.transpose(1, 2).reshape({tokens.size(0), tokens.size(2), h, w});
}

LpeImpl::LpeImpl(std::int64_t c) {
    using torch::nn::Conv2dOptions;
    conv3x3 = register_module("conv3x3", torch::nn::Conv2d(Conv2dOptions(c, c, 3).padding(1)));
    conv5x1 = register_module("conv5x1", torch::nn::Conv2d(Conv2dOptions(c, c, {5, 1}).padding({2, 0})));
    conv1x5 = register_module("conv1x5", torch::nn::Conv2d(Conv2dOptions(c, c, {1, 5}).padding({0, 2})));
    fuse = register_module("fuse", torch::nn::Conv2d(Conv2dOptions(3 * c, c, 1)));
    bn = register_module("bn", torch::nn::BatchNorm2d(c));
}

torch::Tensor LpeImpl::forward(const torch::Tensor& x) {
    const auto f = torch::cat({conv3x3(x), conv5x1(x), conv1x5(x)}, 1);
    return x + torch::relu(bn(fuse(f)));
}

GdfaImpl::GdfaImpl(std::int64_t c, std::int64_t d) : attn_dim_(d > 0 ? d : c) {
    w_d = register_module("w_d", torch::nn::Linear(c, attn_dim_));
    w_q = register_module("w_q", torch::nn::Linear(c, attn_dim_));
    w_k = register_module("w_k", torch::nn::Linear(attn_dim_, attn_dim_));
    w_v = register_module("w_v", torch::nn::Linear(attn_dim_, attn_dim_));
    if (attn_dim_ != c) proj = register_module("proj", torch::nn::Linear(attn_dim_, c));
}

torch::Tensor GdfaImpl::guide(const torch::Tensor& anchor, const torch::Tensor& other) {
    if (!anchor.sizes().equals(other.sizes())) throw ShapeError("gdfa inputs differ in shape");
    return w_d((other - anchor) * anchor);
}

torch::Tensor GdfaImpl::attention(const torch::Tensor& anchor, const torch::Tensor& other) {
    const auto g = guide(anchor, other);
    const auto scores = torch::matmul(w_q(anchor), w_k(g).transpose(1, 2)) / std::sqrt(double(attn_dim_));
    return torch::softmax(scores, -1);
}

torch::Tensor GdfaImpl::values(const torch::Tensor& anchor, const torch::Tensor& other) {
    return w_v(guide(anchor, other));
}

torch::Tensor GdfaImpl::forward(const torch::Tensor& anchor, const torch::Tensor& other) {
    const auto g = guide(anchor, other);
    const auto scores = torch::matmul(w_q(anchor), w_k(g).transpose(1, 2)) / std::sqrt(double(attn_dim_));
    auto out = torch::matmul(torch::softmax(scores, -1), w_v(g));
    return proj ? proj(out) : out;
}

Bi3LayerImpl::Bi3LayerImpl(std::int64_t c, const Bi3Config& cfg) {
    cfg.validate();
    lpe = register_module("lpe", Lpe(c));
    gdfa_left = register_module("gdfa_left", Gdfa(c, cfg.attn_dim));
    gdfa_right = cfg.share_gdfa_weights ? gdfa_left : register_module("gdfa_right", Gdfa(c, cfg.attn_dim));
    norm_attn = register_module("norm_attn", torch::nn::LayerNorm(torch::nn::LayerNormOptions({c})));
    norm_mlp = register_module("norm_mlp", torch::nn::LayerNorm(torch::nn::LayerNormOptions({c})));
    const auto hidden = std::max<std::int64_t>(1, std::llround(cfg.mlp_ratio * double(c)));
    mlp = torch::nn::Sequential(torch::nn::Linear(c, hidden));
    if (cfg.mlp_activation == Activation::gelu) mlp->push_back(torch::nn::GELU());
    else mlp->push_back(torch::nn::ReLU());
    mlp->push_back(torch::nn::Linear(hidden, c));
    mlp = register_module("mlp", mlp);
}

torch::Tensor Bi3LayerImpl::refine(const torch::Tensor& y) { return norm_mlp(y + mlp->forward(y)); }

BiMaps Bi3LayerImpl::forward(const torch::Tensor& x1, const torch::Tensor& x2) {
    if (x1.dim() != 4 || !x1.sizes().equals(x2.sizes())) throw ShapeError("bi3 inputs must be equal NCHW maps");
    const auto h = x1.size(2), w = x1.size(3);
    const auto lp1 = to_tokens(lpe(x1));
    const auto lp2 = to_tokens(lpe(x2));
    const auto y1 = norm_attn(lp1 + gdfa_left(lp1, lp2));
    const auto y2 = norm_attn(lp2 + gdfa_right(lp2, lp1));
    return {from_tokens(refine(y1), h, w), from_tokens(refine(y2), h, w)};
}

Bi3StackImpl::Bi3StackImpl(std::int64_t c, const Bi3Config& cfg) {
    cfg.validate();
    layers = register_module("layers", torch::nn::ModuleList());
    for (int i = 0; i < cfg.num_layers; ++i) layers->push_back(Bi3Layer(c, cfg));
}

BiMaps Bi3StackImpl::forward(const torch::Tensor& x1, const torch::Tensor& x2) {
    BiMaps x{x1, x2};
    for (const auto& m : *layers) {
        const auto [z1, z2] = m->as<Bi3LayerImpl>()->forward(x.first, x.second);
        x = {x.first + z1, x.second + z2};
    }
    return x;
}

}  // namespace mci::nn
