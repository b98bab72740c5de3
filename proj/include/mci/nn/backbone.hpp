#pragma once

#include <torch/script.h>
#include <torch/torch.h>

#include <array>
#include <memory>
#include <utility>

#include "mci/nn/config.hpp"

namespace mci::nn {

/// Four NCHW maps at strides 4, 8, 16, 32.
using FeaturePyramid = std::array<torch::Tensor, 4>;

/// Siamese encoder interface. Both dates go through the same instance, so
/// weight sharing holds by construction.
class Backbone : public torch::nn::Module {
public:
    virtual FeaturePyramid encode(const torch::Tensor& images) = 0;
    virtual std::array<std::int64_t, 4> channels() const = 0;

    /// Excludes encoder parameters from optimisation and pins normalisation
    /// statistics. Idempotent.
    void freeze();
    bool frozen() const { return frozen_; }

    void train(bool on = true) override;

private:
    bool frozen_ = false;
};

/// Four stages, each a non-overlapping patch projection (4x4 then 2x2) and
/// `depth` conv3x3 + batch-norm + ReLU blocks.
class SmallConvBackbone : public Backbone {
public:
    explicit SmallConvBackbone(const BackboneConfig& cfg);

    FeaturePyramid encode(const torch::Tensor& images) override;
    std::array<std::int64_t, 4> channels() const override { return cfg_.channels; }

private:
    BackboneConfig cfg_;
    std::array<torch::nn::Sequential, 4> stages_;
};

/// Adapter for a pretrained encoder exported as TorchScript. The scripted
/// module must map (B,3,H,W) to a list/tuple of four maps matching the
/// configured channels.
class ExternalBackbone : public Backbone {
public:
    explicit ExternalBackbone(const BackboneConfig& cfg);

    FeaturePyramid encode(const torch::Tensor& images) override;
    std::array<std::int64_t, 4> channels() const override { return cfg_.channels; }

private:
    BackboneConfig cfg_;
    torch::jit::Module module_;
};

std::shared_ptr<Backbone> make_backbone(const BackboneConfig& cfg);

/// Runs both dates through one encoder. H and W must be multiples of 32.
std::pair<FeaturePyramid, FeaturePyramid> encode_pair(Backbone& backbone, const torch::Tensor& t1,
                                                      const torch::Tensor& t2);

void check_divisible_by_32(std::int64_t height, std::int64_t width);

}  // namespace mci::nn
