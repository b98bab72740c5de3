#include "mci/nn/captioning_head.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "mci/data/vocabulary.hpp"
#include "mci/error.hpp"

namespace mci::nn {

using data::Vocabulary;

DomainBridgeImpl::DomainBridgeImpl(std::int64_t c, std::int64_t e) {
    using torch::nn::Conv2dOptions;
    merge = register_module("merge", torch::nn::Conv2d(Conv2dOptions(2 * c, e, 1)));
    reduce = register_module("reduce", torch::nn::Conv2d(Conv2dOptions(e, e, 1)));
    bn = register_module("bn", torch::nn::BatchNorm2d(e));
    spatial = register_module("spatial", torch::nn::Conv2d(Conv2dOptions(e, e, 3).padding(1)));
    out = register_module("out", torch::nn::Conv2d(Conv2dOptions(e, e, 1)));
}

torch::Tensor DomainBridgeImpl::forward(const torch::Tensor& x1, const torch::Tensor& x2) {
    if (x1.dim() != 4 || !x1.sizes().equals(x2.sizes())) throw ShapeError("bridge inputs must be equal NCHW maps");
    const auto f1 = merge(torch::cat({x1, x2}, 1));
    const auto f2 = spatial(torch::relu(bn(reduce(f1))));
    return f1 + out(f2);
}

MultiHeadAttentionImpl::MultiHeadAttentionImpl(std::int64_t e, int heads) : heads_(heads) {
    if (heads <= 0 || e % heads != 0) throw Error("embed dim must be divisible by heads");
    q = register_module("q", torch::nn::Linear(e, e));
    k = register_module("k", torch::nn::Linear(e, e));
    v = register_module("v", torch::nn::Linear(e, e));
    o = register_module("o", torch::nn::Linear(e, e));
}

torch::Tensor MultiHeadAttentionImpl::forward(const torch::Tensor& query, const torch::Tensor& source,
                                              const torch::Tensor& blocked) {
    const auto b = query.size(0), tq = query.size(1), tk = source.size(1), e = query.size(2);
    const auto hd = e / heads_;
    auto split = [&](const torch::Tensor& t, std::int64_t len) {
        return t.view({b, len, heads_, hd}).transpose(1, 2);
    };
    const auto qh = split(q(query), tq);
    const auto kh = split(k(source), tk);
    const auto vh = split(v(source), tk);
    auto scores = torch::matmul(qh, kh.transpose(-2, -1)) / std::sqrt(double(hd));
    if (blocked.defined()) scores = scores.masked_fill(blocked, -std::numeric_limits<double>::infinity());
    const auto ctx = torch::matmul(torch::softmax(scores, -1), vh);
    return o(ctx.transpose(1, 2).reshape({b, tq, e}));
}

DecoderLayerImpl::DecoderLayerImpl(std::int64_t e, int heads, std::int64_t ffn_dim) {
    self_attn = register_module("self_attn", MultiHeadAttention(e, heads));
    cross_attn = register_module("cross_attn", MultiHeadAttention(e, heads));
    ffn = register_module("ffn", torch::nn::Sequential(torch::nn::Linear(e, ffn_dim), torch::nn::ReLU(),
                                                       torch::nn::Linear(ffn_dim, e)));
    norm1 = register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({e})));
    norm2 = register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({e})));
    norm3 = register_module("norm3", torch::nn::LayerNorm(torch::nn::LayerNormOptions({e})));
}

torch::Tensor DecoderLayerImpl::forward(const torch::Tensor& x, const torch::Tensor& memory,
                                        const torch::Tensor& causal) {
    auto h = norm1(x + self_attn(x, x, causal));
    h = norm2(h + cross_attn(h, memory));
    return norm3(h + ffn->forward(h));
}

torch::Tensor sinusoidal_positions(std::int64_t length, std::int64_t e) {
    const auto pos = torch::arange(length, torch::kFloat64).unsqueeze(1);
    const auto i = torch::arange(0, e, 2, torch::kFloat64);
    const auto freq = torch::exp(-std::log(10000.0) * i / double(e));
    auto table = torch::zeros({length, e}, torch::kFloat64);
    table.index_put_({torch::indexing::Slice(), torch::indexing::Slice(0, torch::indexing::None, 2)},
                     torch::sin(pos * freq));
    table.index_put_({torch::indexing::Slice(), torch::indexing::Slice(1, torch::indexing::None, 2)},
                     torch::cos(pos * freq).narrow(1, 0, e / 2));
    return table;
}

CaptionDecoderImpl::CaptionDecoderImpl(std::int64_t vocab_size, const DecoderConfig& cfg)
    : embed_dim_(cfg.embed_dim) {
    embed = register_module("embed", torch::nn::Embedding(vocab_size, cfg.embed_dim));
    layers = register_module("layers", torch::nn::ModuleList());
    for (int i = 0; i < cfg.layers; ++i) layers->push_back(DecoderLayer(cfg.embed_dim, cfg.heads, cfg.ffn_dim));
    out = register_module("out", torch::nn::Linear(cfg.embed_dim, vocab_size));
}

torch::Tensor CaptionDecoderImpl::forward(const torch::Tensor& memory, const torch::Tensor& tokens) {
    const auto t = tokens.size(1);
    const auto pos = sinusoidal_positions(t, embed_dim_).to(memory.options());
    auto x = embed(tokens) * std::sqrt(double(embed_dim_)) + pos;
    const auto causal = torch::ones({t, t}, torch::TensorOptions().dtype(torch::kBool).device(memory.device())).triu(1);
    for (const auto& layer : *layers) x = layer->as<DecoderLayerImpl>()->forward(x, memory, causal);
    return out(x);
}

CaptioningHeadImpl::CaptioningHeadImpl(std::int64_t top_channels, const Bi3Config& bi3_cfg,
                                       const DecoderConfig& decoder_cfg, std::int64_t vocab_size)
    : cfg_(decoder_cfg), vocab_size_(vocab_size) {
    cfg_.validate();
    bi3 = register_module("bi3", Bi3Stack(top_channels, bi3_cfg));
    bridge = register_module("bridge", DomainBridge(top_channels, cfg_.embed_dim));
    row_embed = register_parameter("row_embed", torch::randn({kMaxGrid, cfg_.embed_dim}) * 0.02);
    col_embed = register_parameter("col_embed", torch::randn({kMaxGrid, cfg_.embed_dim}) * 0.02);
    decoder = register_module("decoder", CaptionDecoder(vocab_size, cfg_));
}

torch::Tensor CaptioningHeadImpl::memory(const FeaturePyramid& p1, const FeaturePyramid& p2) {
    const auto [z1, z2] = bi3(p1[3], p2[3]);
    const auto grid = bridge(z1, z2);
    const auto h = grid.size(2), w = grid.size(3);
    if (h > kMaxGrid || w > kMaxGrid) throw ShapeError("feature grid exceeds the memory position table");
    const auto pos = row_embed.narrow(0, 0, h).unsqueeze(1) + col_embed.narrow(0, 0, w).unsqueeze(0);
    return to_tokens(grid) + pos.reshape({h * w, cfg_.embed_dim}).unsqueeze(0);
}

torch::Tensor CaptioningHeadImpl::forward(const torch::Tensor& memory, const torch::Tensor& tokens) {
    if (tokens.dim() != 2 || memory.dim() != 3 || memory.size(0) != tokens.size(0))
        throw ShapeError("memory (B,M,E) and tokens (B,T) must share B");
    return decoder(memory, tokens);
}

torch::Tensor CaptioningHeadImpl::decode_step(const torch::Tensor& memory, const torch::Tensor& prefix) {
    if (prefix.dim() != 2 || prefix.size(1) == 0) throw Error("decode_step needs a non-empty prefix");
    if ((prefix.select(1, 0) != Vocabulary::kBos).any().item<bool>()) throw Error("prefix must start with BOS");
    if (prefix.size(1) >= cfg_.max_len) throw Error("prefix already at max_len");
    return forward(memory, prefix).select(1, prefix.size(1) - 1);
}

std::vector<TokenIds> CaptioningHeadImpl::generate(const torch::Tensor& memory) {
    return generate(memory, cfg_.decode, cfg_.beam_width);
}

std::vector<TokenIds> CaptioningHeadImpl::generate(const torch::Tensor& memory, DecodeMode mode, int beam_width) {
    if (mode == DecodeMode::greedy) return greedy(memory);
    std::vector<TokenIds> out;
    for (std::int64_t b = 0; b < memory.size(0); ++b) out.push_back(beam(memory.narrow(0, b, 1), beam_width));
    return out;
}

namespace {

// Lowest index wins ties.
std::int64_t argmax_row(const double* row, std::int64_t n) {
    std::int64_t best = 0;
    for (std::int64_t i = 1; i < n; ++i)
        if (row[i] > row[best]) best = i;
    return best;
}

torch::Tensor log_probs(const torch::Tensor& logits) {
    return torch::log_softmax(logits.to(torch::kFloat64), -1).to(torch::kCPU).contiguous();
}

}  // namespace

std::vector<TokenIds> CaptioningHeadImpl::greedy(const torch::Tensor& memory) {
    torch::NoGradGuard guard;
    const auto batch = memory.size(0);
    std::vector<TokenIds> seqs(batch, TokenIds{Vocabulary::kBos});
    std::vector<bool> done(batch, false);
    for (int len = 1; len < cfg_.max_len; ++len) {
        std::vector<std::int64_t> flat;
        for (const auto& s : seqs) {
            flat.insert(flat.end(), s.begin(), s.end());
            flat.resize(flat.size() + (len - s.size()), Vocabulary::kPad);
        }
        const auto prefix = torch::tensor(flat, torch::kInt64).view({batch, len}).to(memory.device());
        const auto lp = log_probs(decode_step(memory, prefix));
        bool all_done = true;
        for (std::int64_t b = 0; b < batch; ++b) {
            if (done[b]) continue;
            const auto next = argmax_row(lp[b].data_ptr<double>(), vocab_size_);
            seqs[b].push_back(next);
            done[b] = next == Vocabulary::kEos;
            all_done = all_done && done[b];
        }
        if (all_done) break;
    }
    return seqs;
}

TokenIds CaptioningHeadImpl::beam(const torch::Tensor& memory_row, int width) {
    torch::NoGradGuard guard;
    if (width < 1) throw Error("beam width must be at least 1");
    struct Hyp {
        TokenIds ids;
        double logp;
    };
    std::vector<Hyp> alive{{{Vocabulary::kBos}, 0.0}};
    std::vector<Hyp> finished;
    int slots = width;
    for (int len = 1; len < cfg_.max_len && !alive.empty(); ++len) {
        const auto n = static_cast<std::int64_t>(alive.size());
        std::vector<std::int64_t> flat;
        for (const auto& h : alive) flat.insert(flat.end(), h.ids.begin(), h.ids.end());
        const auto prefix = torch::tensor(flat, torch::kInt64).view({n, len}).to(memory_row.device());
        const auto lp = log_probs(decode_step(memory_row.expand({n, -1, -1}), prefix));
        // (score, hypothesis, token); ordered by score then flat index.
        std::vector<std::tuple<double, std::int64_t, std::int64_t>> cand;
        cand.reserve(static_cast<std::size_t>(n * vocab_size_));
        for (std::int64_t i = 0; i < n; ++i) {
            const double* row = lp[i].data_ptr<double>();
            for (std::int64_t v = 0; v < vocab_size_; ++v) cand.emplace_back(alive[i].logp + row[v], i, v);
        }
        const auto keep = std::min<std::size_t>(cand.size(), static_cast<std::size_t>(slots));
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(),
                          [](const auto& a, const auto& b) {
                              if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
                              if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
                              return std::get<2>(a) < std::get<2>(b);
                          });
        std::vector<Hyp> next;
        for (std::size_t c = 0; c < keep; ++c) {
            const auto [score, i, v] = cand[c];
            Hyp h{alive[i].ids, score};
            h.ids.push_back(v);
            if (v == Vocabulary::kEos) {
                finished.push_back(std::move(h));
                --slots;
            } else {
                next.push_back(std::move(h));
            }
        }
        alive = std::move(next);
    }
    for (auto& h : alive) finished.push_back(std::move(h));
    // Normalise by the number of generated tokens.
    std::size_t best = 0;
    auto norm = [&](const Hyp& h) { return h.logp / double(h.ids.size() - 1); };
    for (std::size_t i = 1; i < finished.size(); ++i)
        if (norm(finished[i]) > norm(finished[best])) best = i;
    return finished[best].ids;
}

}  // namespace mci::nn
