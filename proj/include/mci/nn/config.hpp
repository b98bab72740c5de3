#pragma once

#include <array>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

namespace mci::nn {

enum class BackboneVariant { small_conv, external };

struct BackboneConfig {
    std::array<std::int64_t, 4> channels{32, 64, 128, 256};
    std::array<int, 4> depth{2, 2, 2, 2};
    BackboneVariant variant = BackboneVariant::small_conv;
    // TorchScript module returning four NCHW maps; used by the external variant.
    std::string external_path;

    void validate() const;
};

enum class Activation { gelu, relu };

struct Bi3Config {
    std::int64_t attn_dim = 0;  // 0: same as the feature width
    double mlp_ratio = 4.0;
    int num_layers = 3;
    bool share_gdfa_weights = false;
    Activation mlp_activation = Activation::gelu;

    void validate() const;
};

enum class DecodeMode { greedy, beam };

struct DecoderConfig {
    std::int64_t embed_dim = 512;
    int layers = 2;
    int heads = 8;
    std::int64_t ffn_dim = 2048;
    int max_len = 40;
    DecodeMode decode = DecodeMode::greedy;
    int beam_width = 3;

    void validate() const;
};

struct ModelConfig {
    BackboneConfig backbone;
    Bi3Config bi3;
    DecoderConfig decoder;
    std::int64_t vocab_size = 0;
    // Ablation switch: route the detection branch around its BI3 stack.
    bool detection_bi3 = true;

    void validate() const;
    /// Desk-scale defaults shrunk for CPU smoke runs.
    static ModelConfig tiny(std::int64_t vocab_size);
};

void to_json(nlohmann::json& j, const BackboneConfig& c);
void from_json(const nlohmann::json& j, BackboneConfig& c);
void to_json(nlohmann::json& j, const Bi3Config& c);
void from_json(const nlohmann::json& j, Bi3Config& c);
void to_json(nlohmann::json& j, const DecoderConfig& c);
void from_json(const nlohmann::json& j, DecoderConfig& c);
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace mci::nn
