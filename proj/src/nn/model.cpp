#include "mci/nn/model.hpp"

#include "mci/error.hpp"

namespace mci::nn {

torch::Tensor image_to_tensor(const data::RgbImage& image) {
    const auto bytes = image.bytes();
    auto t = torch::from_blob(const_cast<std::uint8_t*>(bytes.data()), {image.height(), image.width(), 3},
                              torch::kUInt8)
                 .permute({2, 0, 1})
                 .to(torch::kFloat32);
    return t / 127.5 - 1.0;
}

torch::Tensor mask_to_tensor(const data::LabelMap& mask) {
    const auto raw = mask.raw();
    return torch::from_blob(const_cast<std::uint8_t*>(raw.data()), {mask.height(), mask.width()}, torch::kUInt8)
        .to(torch::kInt64);
}

MciModelImpl::MciModelImpl(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    backbone = register_module("backbone", make_backbone(cfg_.backbone));
    const auto ch = cfg_.backbone.channels;
    detection = register_module("detection", DetectionHead(ch, cfg_.bi3, cfg_.detection_bi3));
    captioning = register_module("captioning", CaptioningHead(ch[3], cfg_.bi3, cfg_.decoder, cfg_.vocab_size));
}

ModelOutput MciModelImpl::forward(const torch::Tensor& t1, const torch::Tensor& t2, const torch::Tensor& tokens,
                                  bool run_detection, bool run_captioning) {
    const auto [p1, p2] = encode_pair(*backbone, t1, t2);
    ModelOutput out;
    if (run_detection) out.det_logits = detection(p1, p2);
    if (run_captioning) {
        const auto batch = t1.size(0);
        if (!tokens.defined() || tokens.size(0) % batch != 0)
            throw ShapeError("caption rows must be a multiple of the pair count");
        const auto mem = captioning->memory(p1, p2).repeat_interleave(tokens.size(0) / batch, 0);
        out.cap_logits = captioning(mem, tokens);
    }
    return out;
}

torch::Tensor MciModelImpl::detect(const torch::Tensor& t1, const torch::Tensor& t2) {
    const auto [p1, p2] = encode_pair(*backbone, t1, t2);
    return detection(p1, p2);
}

std::vector<TokenIds> MciModelImpl::caption(const torch::Tensor& t1, const torch::Tensor& t2) {
    const auto [p1, p2] = encode_pair(*backbone, t1, t2);
    return captioning->generate(captioning->memory(p1, p2));
}

std::vector<torch::Tensor> MciModelImpl::backbone_parameters() const { return backbone->parameters(); }
std::vector<torch::Tensor> MciModelImpl::detection_parameters() const { return detection->parameters(); }
std::vector<torch::Tensor> MciModelImpl::captioning_parameters() const { return captioning->parameters(); }

Prediction predict(MciModel& model, const data::Vocabulary& vocab, const data::RgbImage& t1,
                   const data::RgbImage& t2) {
    if (t1.height() != t2.height() || t1.width() != t2.width()) throw ShapeError("t1 and t2 differ in size");
    torch::NoGradGuard guard;
    const bool was_training = model->is_training();
    model->eval();
    const auto a = image_to_tensor(t1).unsqueeze(0);
    const auto b = image_to_tensor(t2).unsqueeze(0);
    const auto [p1, p2] = encode_pair(*model->backbone, a, b);
    Prediction out;
    out.mask = logits_to_mask(model->detection(p1, p2));
    out.tokens = model->captioning->generate(model->captioning->memory(p1, p2)).front();
    out.caption = vocab.decode(out.tokens);
    if (was_training) model->train();
    return out;
}

double parameter_checksum(const std::vector<torch::Tensor>& params) {
    double sum = 0.0;
    for (const auto& p : params) sum += p.detach().to(torch::kFloat64).abs().sum().item<double>();
    return sum;
}

}  // namespace mci::nn
