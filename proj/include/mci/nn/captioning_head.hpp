#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <vector>

#include "mci/nn/backbone.hpp"
#include "mci/nn/bi3.hpp"
#include "mci/nn/config.hpp"

namespace mci::nn {

using TokenIds = std::vector<std::int64_t>;

/// Visual-to-text adapter: (B,C,h,w) x2 -> (B,E,h,w).
class DomainBridgeImpl : public torch::nn::Module {
public:
    DomainBridgeImpl(std::int64_t channels, std::int64_t embed_dim);
    torch::Tensor forward(const torch::Tensor& x1, const torch::Tensor& x2);

    torch::nn::Conv2d merge{nullptr}, reduce{nullptr}, spatial{nullptr}, out{nullptr};
    torch::nn::BatchNorm2d bn{nullptr};
};
TORCH_MODULE(DomainBridge);

class MultiHeadAttentionImpl : public torch::nn::Module {
public:
    MultiHeadAttentionImpl(std::int64_t embed_dim, int heads);

    /// query (B,Tq,E), source (B,Tk,E). `blocked` is an optional (Tq,Tk)
    /// bool mask; true entries are excluded.
    torch::Tensor forward(const torch::Tensor& query, const torch::Tensor& source,
                          const torch::Tensor& blocked = {});

    torch::nn::Linear q{nullptr}, k{nullptr}, v{nullptr}, o{nullptr};

private:
    int heads_;
};
TORCH_MODULE(MultiHeadAttention);

/// Post-norm decoder layer: causal self-attention, cross-attention, FFN.
class DecoderLayerImpl : public torch::nn::Module {
public:
    DecoderLayerImpl(std::int64_t embed_dim, int heads, std::int64_t ffn_dim);
    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& memory, const torch::Tensor& causal);

    MultiHeadAttention self_attn{nullptr}, cross_attn{nullptr};
    torch::nn::Sequential ffn{nullptr};
    torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr}, norm3{nullptr};
};
TORCH_MODULE(DecoderLayer);

/// (T,E) sinusoidal position table.
torch::Tensor sinusoidal_positions(std::int64_t length, std::int64_t embed_dim);

class CaptionDecoderImpl : public torch::nn::Module {
public:
    CaptionDecoderImpl(std::int64_t vocab_size, const DecoderConfig& cfg);
    /// memory (B,M,E), tokens (B,T) -> logits (B,T,V).
    torch::Tensor forward(const torch::Tensor& memory, const torch::Tensor& tokens);

    torch::nn::Embedding embed{nullptr};
    torch::nn::ModuleList layers{nullptr};
    torch::nn::Linear out{nullptr};

private:
    std::int64_t embed_dim_;
};
TORCH_MODULE(CaptionDecoder);

class CaptioningHeadImpl : public torch::nn::Module {
public:
    static constexpr std::int64_t kMaxGrid = 64;

    CaptioningHeadImpl(std::int64_t top_channels, const Bi3Config& bi3, const DecoderConfig& decoder,
                       std::int64_t vocab_size);

    /// Memory tokens (B, h4*w4, E) from the top pyramid scale.
    torch::Tensor memory(const FeaturePyramid& p1, const FeaturePyramid& p2);
    /// Teacher-forced logits (B,T,V); memory rows are matched one-to-one with token rows.
    torch::Tensor forward(const torch::Tensor& memory, const torch::Tensor& tokens);
    /// Next-token logits (B,V). The prefix must start with BOS and be shorter than max_len.
    torch::Tensor decode_step(const torch::Tensor& memory, const torch::Tensor& prefix);

    /// One sequence per memory row, BOS first, EOS last unless cut by max_len.
    std::vector<TokenIds> generate(const torch::Tensor& memory);
    std::vector<TokenIds> generate(const torch::Tensor& memory, DecodeMode mode, int beam_width);
    std::vector<TokenIds> greedy(const torch::Tensor& memory);
    /// Length-normalised beam search; finished beams leave the beam.
    TokenIds beam(const torch::Tensor& memory_row, int width);

    const DecoderConfig& config() const { return cfg_; }

    Bi3Stack bi3{nullptr};
    DomainBridge bridge{nullptr};
    torch::Tensor row_embed, col_embed;
    CaptionDecoder decoder{nullptr};

private:
    DecoderConfig cfg_;
    std::int64_t vocab_size_;
};
TORCH_MODULE(CaptioningHead);

}  // namespace mci::nn
