#pragma once

#include <torch/torch.h>

#include <array>

#include "mci/data/image.hpp"
#include "mci/nn/backbone.hpp"
#include "mci/nn/bi3.hpp"
#include "mci/nn/config.hpp"

namespace mci::nn {

/// Per-pixel cosine similarity over channels, (B,C,h,w) -> (B,1,h,w).
/// Pixels where either vector is zero get 0.
torch::Tensor channel_cosine(const torch::Tensor& x1, const torch::Tensor& x2);

/// Convolution-based bi-temporal fusion at one scale.
class CbfImpl : public torch::nn::Module {
public:
    explicit CbfImpl(std::int64_t channels);
    torch::Tensor forward(const torch::Tensor& x1, const torch::Tensor& x2);
    /// The similarity map S (B,C,h,w).
    torch::Tensor similarity(const torch::Tensor& x1, const torch::Tensor& x2);

    torch::nn::Conv2d diff_conv{nullptr}, fuse_conv{nullptr}, out_conv{nullptr};
    torch::nn::BatchNorm2d bn{nullptr};
};
TORCH_MODULE(Cbf);

class DetectionHeadImpl : public torch::nn::Module {
public:
    /// With use_bi3 false the top scale goes straight to its CBF.
    DetectionHeadImpl(const std::array<std::int64_t, 4>& channels, const Bi3Config& bi3, bool use_bi3 = true);

    /// Logits (B,3,4*h1,4*w1), where h1,w1 are the stride-4 map dims.
    torch::Tensor forward(const FeaturePyramid& p1, const FeaturePyramid& p2);

    Bi3Stack bi3{nullptr};
    std::array<Cbf, 4> cbf{nullptr, nullptr, nullptr, nullptr};
    std::array<torch::nn::ConvTranspose2d, 3> deconv{nullptr, nullptr, nullptr};
    std::array<torch::nn::Conv2d, 3> adapter{nullptr, nullptr, nullptr};
    torch::nn::Conv2d classifier{nullptr};
};
TORCH_MODULE(DetectionHead);

/// Per-pixel argmax of (3,H,W) or (1,3,H,W) logits; ties go to the lowest
/// class index. Throws on NaN.
data::LabelMap logits_to_mask(const torch::Tensor& logits);

}  // namespace mci::nn
