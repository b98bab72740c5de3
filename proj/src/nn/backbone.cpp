#include "mci/nn/backbone.hpp"

#include "mci/error.hpp"

namespace mci::nn {

namespace {

torch::nn::Sequential conv_bn_relu(std::int64_t in, std::int64_t out, std::int64_t kernel, std::int64_t stride,
                                   std::int64_t padding) {
    return torch::nn::Sequential(
        torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding).bias(false)),
        torch::nn::BatchNorm2d(out), torch::nn::ReLU());
}

}  // namespace

void Backbone::freeze() {
    for (auto& p : parameters()) p.set_requires_grad(false);
    frozen_ = true;
    train(is_training());
}

void Backbone::train(bool on) {
    torch::nn::Module::train(on);
    // Frozen encoders keep their running statistics fixed even while the heads train.
    if (frozen_ && on)
        for (auto& child : children()) child->train(false);
}

SmallConvBackbone::SmallConvBackbone(const BackboneConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    std::int64_t in = 3;
    for (std::size_t s = 0; s < 4; ++s) {
        const std::int64_t out = cfg_.channels[s];
        const std::int64_t patch = s == 0 ? 4 : 2;
        torch::nn::Sequential stage;
        stage->extend(*conv_bn_relu(in, out, patch, patch, 0));
        for (int d = 0; d < cfg_.depth[s]; ++d) stage->extend(*conv_bn_relu(out, out, 3, 1, 1));
        stages_[s] = register_module("stage" + std::to_string(s + 1), stage);
        in = out;
    }
}

FeaturePyramid SmallConvBackbone::encode(const torch::Tensor& images) {
    if (images.dim() != 4 || images.size(1) != 3) throw ShapeError("backbone expects (B,3,H,W) images");
    check_divisible_by_32(images.size(2), images.size(3));
    FeaturePyramid out;
    torch::Tensor x = images;
    for (std::size_t s = 0; s < 4; ++s) {
        x = stages_[s]->forward(x);
        out[s] = x;
    }
    return out;
}

ExternalBackbone::ExternalBackbone(const BackboneConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    try {
        module_ = torch::jit::load(cfg_.external_path);
    } catch (const c10::Error& e) {
        throw IoError("cannot load external backbone " + cfg_.external_path + ": " + e.what_without_backtrace());
    }
    // Expose the scripted weights so they train, freeze and checkpoint like native ones.
    for (const auto& p : module_.named_parameters(true)) {
        std::string name = p.name;
        std::replace(name.begin(), name.end(), '.', '_');
        register_parameter("ext_" + name, p.value, p.value.requires_grad());
    }
}

FeaturePyramid ExternalBackbone::encode(const torch::Tensor& images) {
    if (images.dim() != 4 || images.size(1) != 3) throw ShapeError("backbone expects (B,3,H,W) images");
    check_divisible_by_32(images.size(2), images.size(3));
    if (is_training() != module_.is_training()) {
        if (is_training()) module_.train();
        else module_.eval();
    }
    const auto result = module_.forward({images});
    std::vector<torch::Tensor> maps;
    if (result.isTuple()) {
        for (const auto& v : result.toTupleRef().elements()) maps.push_back(v.toTensor());
    } else if (result.isTensorList()) {
        maps = result.toTensorVector();
    } else if (result.isList()) {
        for (const auto& v : result.toListRef()) maps.push_back(v.toTensor());
    } else {
        throw ShapeError("external backbone must return a list or tuple of four maps");
    }
    if (maps.size() != 4) throw ShapeError("external backbone returned " + std::to_string(maps.size()) + " maps");
    FeaturePyramid out;
    for (std::size_t s = 0; s < 4; ++s) {
        const auto stride = std::int64_t{4} << s;
        const auto& m = maps[s];
        if (m.dim() != 4 || m.size(1) != cfg_.channels[s] || m.size(2) != images.size(2) / stride ||
            m.size(3) != images.size(3) / stride)
            throw ShapeError("external backbone scale " + std::to_string(s + 1) + " has unexpected shape");
        out[s] = m;
    }
    return out;
}

std::shared_ptr<Backbone> make_backbone(const BackboneConfig& cfg) {
    if (cfg.variant == BackboneVariant::external) return std::make_shared<ExternalBackbone>(cfg);
    return std::make_shared<SmallConvBackbone>(cfg);
}

void check_divisible_by_32(std::int64_t height, std::int64_t width) {
    if (height <= 0 || width <= 0 || height % 32 != 0 || width % 32 != 0)
        throw ShapeError("image size " + std::to_string(height) + "x" + std::to_string(width) +
                         " is not divisible by 32");
}

std::pair<FeaturePyramid, FeaturePyramid> encode_pair(Backbone& backbone, const torch::Tensor& t1,
                                                      const torch::Tensor& t2) {
    if (!t1.sizes().equals(t2.sizes())) throw ShapeError("t1 and t2 must have the same shape");
    const auto batch = t1.size(0);
    // One pass over both dates: same weights, one set of batch statistics.
    const auto both = backbone.encode(torch::cat({t1, t2}, 0));
    FeaturePyramid p1, p2;
    for (std::size_t s = 0; s < 4; ++s) {
        p1[s] = both[s].narrow(0, 0, batch);
        p2[s] = both[s].narrow(0, batch, batch);
    }
    return {p1, p2};
}

}  // namespace mci::nn
