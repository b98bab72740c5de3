#pragma once

#include <torch/torch.h>

#include <utility>

#include "mci/nn/config.hpp"

namespace mci::nn {

/// (B,C,h,w) -> (B,h*w,C), row-major over positions.
torch::Tensor to_tokens(const torch::Tensor& map);
/// Inverse of to_tokens.
torch::Tensor from_tokens(const torch::Tensor& tokens, std::int64_t h, std::int64_t w);

/// Local perception enhancement: three kernel shapes, fused by a 1x1 conv,
/// added back to the input after BN and ReLU.
class LpeImpl : public torch::nn::Module {
public:
    explicit LpeImpl(std::int64_t channels);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Conv2d conv3x3{nullptr}, conv5x1{nullptr}, conv1x5{nullptr}, fuse{nullptr};
    torch::nn::BatchNorm2d bn{nullptr};
};
TORCH_MODULE(Lpe);

/// Difference-guided single-head attention. Queries come from the anchor;
/// keys and values come from (other - anchor) * anchor.
class GdfaImpl : public torch::nn::Module {
public:
    GdfaImpl(std::int64_t channels, std::int64_t attn_dim);

    /// Tokens (B,N,C) -> (B,N,C). Output is projected back to C when d != C.
    torch::Tensor forward(const torch::Tensor& anchor, const torch::Tensor& other);
    /// Row-stochastic (B,N,N) attention matrix.
    torch::Tensor attention(const torch::Tensor& anchor, const torch::Tensor& other);
    /// Pre-attention value tokens (B,N,d).
    torch::Tensor values(const torch::Tensor& anchor, const torch::Tensor& other);

    std::int64_t attn_dim() const { return attn_dim_; }

    torch::nn::Linear w_d{nullptr}, w_q{nullptr}, w_k{nullptr}, w_v{nullptr}, proj{nullptr};

private:
    torch::Tensor guide(const torch::Tensor& anchor, const torch::Tensor& other);
    std::int64_t attn_dim_;
};
TORCH_MODULE(Gdfa);

using BiMaps = std::pair<torch::Tensor, torch::Tensor>;

/// One bi-temporal interaction layer on NCHW maps. LPE, the norms and the
/// MLP are applied to both dates with the same weights.
class Bi3LayerImpl : public torch::nn::Module {
public:
    Bi3LayerImpl(std::int64_t channels, const Bi3Config& cfg);
    BiMaps forward(const torch::Tensor& x1, const torch::Tensor& x2);

    Lpe lpe{nullptr};
    Gdfa gdfa_left{nullptr}, gdfa_right{nullptr};
    torch::nn::LayerNorm norm_attn{nullptr}, norm_mlp{nullptr};
    torch::nn::Sequential mlp{nullptr};

private:
    torch::Tensor refine(const torch::Tensor& y);
};
TORCH_MODULE(Bi3Layer);

/// num_layers BI3 layers, each wrapped in an outer residual.
class Bi3StackImpl : public torch::nn::Module {
public:
    Bi3StackImpl(std::int64_t channels, const Bi3Config& cfg);
    BiMaps forward(const torch::Tensor& x1, const torch::Tensor& x2);

    torch::nn::ModuleList layers{nullptr};
};
TORCH_MODULE(Bi3Stack);

}  // namespace mci::nn
