#include "mci/nn/detection_head.hpp"

#include "mci/error.hpp"

namespace mci::nn {

namespace F = torch::nn::functional;

torch::Tensor channel_cosine(const torch::Tensor& x1, const torch::Tensor& x2) {
    const auto dot = (x1 * x2).sum(1, true);
    const auto denom = x1.norm(2, 1, true) * x2.norm(2, 1, true);
    const auto valid = denom > 0;
    // The clamp keeps the untaken branch finite so gradients stay clean.
    const auto safe = torch::where(valid, denom, torch::ones_like(denom));
    return torch::where(valid, dot / safe, torch::zeros_like(dot));
}

CbfImpl::CbfImpl(std::int64_t c) {
    using torch::nn::Conv2dOptions;
    diff_conv = register_module("diff_conv", torch::nn::Conv2d(Conv2dOptions(c, c, 3).padding(1)));
    fuse_conv = register_module("fuse_conv", torch::nn::Conv2d(Conv2dOptions(3 * c, c, 3).padding(1)));
    bn = register_module("bn", torch::nn::BatchNorm2d(c));
    out_conv = register_module("out_conv", torch::nn::Conv2d(Conv2dOptions(c, c, 1)));
}

torch::Tensor CbfImpl::similarity(const torch::Tensor& x1, const torch::Tensor& x2) {
    if (x1.dim() != 4 || !x1.sizes().equals(x2.sizes())) throw ShapeError("cbf inputs must be equal NCHW maps");
    return diff_conv(x2 - x1) + channel_cosine(x1, x2);
}

torch::Tensor CbfImpl::forward(const torch::Tensor& x1, const torch::Tensor& x2) {
    const auto f = torch::cat({x1, similarity(x1, x2), x2}, 1);
    return out_conv(torch::relu(bn(fuse_conv(f))));
}

DetectionHeadImpl::DetectionHeadImpl(const std::array<std::int64_t, 4>& ch, const Bi3Config& bi3_cfg, bool use_bi3) {
    if (use_bi3) bi3 = register_module("bi3", Bi3Stack(ch[3], bi3_cfg));
    for (std::size_t s = 0; s < 4; ++s) cbf[s] = register_module("cbf" + std::to_string(s + 1), Cbf(ch[s]));
    for (std::size_t s = 0; s < 3; ++s) {
        const auto up = ch[s + 1];
        deconv[s] = register_module("deconv" + std::to_string(s + 1),
                                    torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(up, up, 2).stride(2)));
        adapter[s] = register_module("adapter" + std::to_string(s + 1),
                                     torch::nn::Conv2d(torch::nn::Conv2dOptions(up, ch[s], 1)));
    }
    classifier = register_module("classifier", torch::nn::Conv2d(torch::nn::Conv2dOptions(ch[0], data::kNumClasses, 1)));
}

torch::Tensor DetectionHeadImpl::forward(const FeaturePyramid& p1, const FeaturePyramid& p2) {
    for (std::size_t s = 0; s < 4; ++s) {
        if (!p1[s].sizes().equals(p2[s].sizes()) || p1[s].size(1) != cbf[s]->out_conv->options.out_channels())
            throw ShapeError("pyramid scale " + std::to_string(s + 1) + " does not match the detection head");
    }
    auto top1 = p1[3], top2 = p2[3];
    if (bi3) std::tie(top1, top2) = bi3(top1, top2);
    auto d = cbf[3](top1, top2);
    for (int s = 2; s >= 0; --s) {
        const auto up = adapter[s](deconv[s](d));
        const auto fused = cbf[s](p1[s], p2[s]);
        if (!up.sizes().equals(fused.sizes())) throw ShapeError("pyramid scales are not consecutive halvings");
        d = fused + up;
    }
    const auto logits = classifier(d);
    return F::interpolate(logits, F::InterpolateFuncOptions()
                                      .size(std::vector<std::int64_t>{logits.size(2) * 4, logits.size(3) * 4})
                                      .mode(torch::kBilinear)
                                      .align_corners(false));
}

data::LabelMap logits_to_mask(const torch::Tensor& logits) {
    auto l = logits;
    if (l.dim() == 4) {
        if (l.size(0) != 1) throw ShapeError("logits_to_mask takes a single image");
        l = l[0];
    }
    if (l.dim() != 3 || l.size(0) != data::kNumClasses) throw ShapeError("logits must be (3,H,W)");
    l = l.detach().to(torch::kCPU, torch::kFloat64).contiguous();
    if (torch::isnan(l).any().item<bool>()) throw Error("logits contain NaN");
    const auto h = static_cast<int>(l.size(1)), w = static_cast<int>(l.size(2));
    const auto acc = l.accessor<double, 3>();
    data::LabelMap mask(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int best = 0;
            for (int c = 1; c < data::kNumClasses; ++c)
                if (acc[c][y][x] > acc[best][y][x]) best = c;
            mask.set(y, x, static_cast<data::ChangeClass>(best));
        }
    return mask;
}

}  // namespace mci::nn
