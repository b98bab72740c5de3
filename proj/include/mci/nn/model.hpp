#pragma once

#include <torch/torch.h>

#include <memory>
#include <string>
#include <vector>

#include "mci/data/image.hpp"
#include "mci/data/vocabulary.hpp"
#include "mci/nn/backbone.hpp"
#include "mci/nn/captioning_head.hpp"
#include "mci/nn/config.hpp"
#include "mci/nn/detection_head.hpp"

namespace mci::nn {

/// (3,H,W) float tensor scaled to [-1, 1].
torch::Tensor image_to_tensor(const data::RgbImage& image);
/// (H,W) int64 class indices.
torch::Tensor mask_to_tensor(const data::LabelMap& mask);

struct ModelOutput {
    torch::Tensor det_logits;  // (B,3,H,W)
    torch::Tensor cap_logits;  // (B*K,T,V)
};

/// Siamese backbone feeding a detection branch and a captioning branch.
class MciModelImpl : public torch::nn::Module {
public:
    explicit MciModelImpl(const ModelConfig& cfg);

    /// t1, t2: (B,3,H,W). tokens: (B*K,T) teacher-forcing inputs, K captions
    /// per pair in pair-major order. Either branch can be skipped.
    ModelOutput forward(const torch::Tensor& t1, const torch::Tensor& t2, const torch::Tensor& tokens,
                        bool run_detection = true, bool run_captioning = true);

    torch::Tensor detect(const torch::Tensor& t1, const torch::Tensor& t2);
    std::vector<TokenIds> caption(const torch::Tensor& t1, const torch::Tensor& t2);

    std::vector<torch::Tensor> backbone_parameters() const;
    std::vector<torch::Tensor> detection_parameters() const;
    std::vector<torch::Tensor> captioning_parameters() const;

    const ModelConfig& config() const { return cfg_; }

    std::shared_ptr<Backbone> backbone;
    DetectionHead detection{nullptr};
    CaptioningHead captioning{nullptr};

private:
    ModelConfig cfg_;
};
TORCH_MODULE(MciModel);

struct Prediction {
    data::LabelMap mask;
    TokenIds tokens;
    std::string caption;
};

/// Inference on one pair in eval mode; restores the previous mode.
Prediction predict(MciModel& model, const data::Vocabulary& vocab, const data::RgbImage& t1,
                   const data::RgbImage& t2);

/// Sum of element checksums over a parameter list, for freeze audits.
double parameter_checksum(const std::vector<torch::Tensor>& params);

}  // namespace mci::nn
