#include "mci/nn/config.hpp"

#include "mci/error.hpp"

namespace mci::nn {

void BackboneConfig::validate() const {
    for (auto c : channels)
        if (c <= 0) throw Error("backbone channels must be positive");
    for (auto d : depth)
        if (d < 0) throw Error("backbone depth must be non-negative");
    if (variant == BackboneVariant::external && external_path.empty())
        throw Error("external backbone needs external_path");
}

void Bi3Config::validate() const {
    if (attn_dim < 0) throw Error("bi3 attn_dim must be positive (or 0 for the feature width)");
    if (num_layers < 1) throw Error("bi3 needs at least one layer");
    if (mlp_ratio <= 0) throw Error("bi3 mlp_ratio must be positive");
}

void DecoderConfig::validate() const {
    if (embed_dim <= 0 || heads <= 0 || embed_dim % heads != 0)
        throw Error("decoder embed_dim must be a positive multiple of heads");
    if (layers < 1) throw Error("decoder needs at least one layer");
    if (max_len < 2) throw Error("decoder max_len must be at least 2");
    if (ffn_dim <= 0) throw Error("decoder ffn_dim must be positive");
    if (beam_width < 1) throw Error("beam width must be at least 1");
}

void ModelConfig::validate() const {
    backbone.validate();
    bi3.validate();
    decoder.validate();
    if (vocab_size <= 4) throw Error("vocab_size must exceed the four special tokens");
}

ModelConfig ModelConfig::tiny(std::int64_t vocab_size) {
    ModelConfig c;
    c.backbone.channels = {16, 32, 48, 64};
    c.backbone.depth = {1, 1, 1, 1};
    c.bi3.num_layers = 1;
    c.bi3.mlp_ratio = 2.0;
    c.decoder.embed_dim = 64;
    c.decoder.layers = 1;
    c.decoder.heads = 4;
    c.decoder.ffn_dim = 128;
    c.decoder.max_len = 20;
    c.vocab_size = vocab_size;
    return c;
}

namespace {

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace

void to_json(nlohmann::json& j, const BackboneConfig& c) {
    j = {{"channels", c.channels},
         {"depth", c.depth},
         {"variant", c.variant == BackboneVariant::small_conv ? "small_conv" : "external"},
         {"external_path", c.external_path}};
}

void from_json(const nlohmann::json& j, BackboneConfig& c) {
    read_opt(j, "channels", c.channels);
    read_opt(j, "depth", c.depth);
    read_opt(j, "external_path", c.external_path);
    if (j.contains("variant")) {
        const auto v = j.at("variant").get<std::string>();
        if (v == "small_conv") c.variant = BackboneVariant::small_conv;
        else if (v == "external") c.variant = BackboneVariant::external;
        else throw Error("unknown backbone variant '" + v + "'");
    }
}

void to_json(nlohmann::json& j, const Bi3Config& c) {
    j = {{"attn_dim", c.attn_dim},
         {"mlp_ratio", c.mlp_ratio},
         {"num_layers", c.num_layers},
         {"share_gdfa_weights", c.share_gdfa_weights},
         {"mlp_activation", c.mlp_activation == Activation::gelu ? "gelu" : "relu"}};
}

void from_json(const nlohmann::json& j, Bi3Config& c) {
    read_opt(j, "attn_dim", c.attn_dim);
    read_opt(j, "mlp_ratio", c.mlp_ratio);
    read_opt(j, "num_layers", c.num_layers);
    read_opt(j, "share_gdfa_weights", c.share_gdfa_weights);
    if (j.contains("mlp_activation")) {
        const auto a = j.at("mlp_activation").get<std::string>();
        if (a == "gelu") c.mlp_activation = Activation::gelu;
        else if (a == "relu") c.mlp_activation = Activation::relu;
        else throw Error("unknown activation '" + a + "'");
    }
}

void to_json(nlohmann::json& j, const DecoderConfig& c) {
    j = {{"embed_dim", c.embed_dim}, {"layers", c.layers},   {"heads", c.heads},
         {"ffn_dim", c.ffn_dim},     {"max_len", c.max_len}, {"decode", c.decode == DecodeMode::greedy ? "greedy" : "beam"},
         {"beam_width", c.beam_width}};
}

void from_json(const nlohmann::json& j, DecoderConfig& c) {
    read_opt(j, "embed_dim", c.embed_dim);
    read_opt(j, "layers", c.layers);
    read_opt(j, "heads", c.heads);
    read_opt(j, "ffn_dim", c.ffn_dim);
    read_opt(j, "max_len", c.max_len);
    read_opt(j, "beam_width", c.beam_width);
    if (j.contains("decode")) {
        const auto d = j.at("decode").get<std::string>();
        if (d == "greedy") c.decode = DecodeMode::greedy;
        else if (d == "beam") c.decode = DecodeMode::beam;
        else throw Error("unknown decode mode '" + d + "'");
    }
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = {{"backbone", c.backbone},
         {"bi3", c.bi3},
         {"decoder", c.decoder},
         {"vocab_size", c.vocab_size},
         {"detection_bi3", c.detection_bi3}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
    read_opt(j, "backbone", c.backbone);
    read_opt(j, "bi3", c.bi3);
    read_opt(j, "decoder", c.decoder);
    read_opt(j, "vocab_size", c.vocab_size);
    read_opt(j, "detection_bi3", c.detection_bi3);
}

}  // namespace mci::nn
