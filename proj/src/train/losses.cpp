#include "mci/train/losses.hpp"

#include "mci/data/vocabulary.hpp"
#include "mci/error.hpp"

namespace mci::train {

torch::Tensor loss_det(const torch::Tensor& logits, const torch::Tensor& gt) {
    if (logits.dim() != 4 || gt.dim() != 3 || logits.size(0) != gt.size(0) || logits.size(2) != gt.size(1) ||
        logits.size(3) != gt.size(2))
        throw ShapeError("loss_det: logits (B,C,H,W) and gt (B,H,W) disagree");
    if (gt.numel() > 0 && (gt.min().item<std::int64_t>() < 0 || gt.max().item<std::int64_t>() >= logits.size(1)))
        throw Error("loss_det: class index out of range");
    return torch::nn::functional::cross_entropy(logits, gt);
}

torch::Tensor loss_cap(const torch::Tensor& logits, const torch::Tensor& targets) {
    if (logits.dim() != 3 || targets.dim() != 2 || logits.size(0) != targets.size(0) ||
        logits.size(1) != targets.size(1))
        throw ShapeError("loss_cap: logits (N,T,V) and targets (N,T) disagree");
    const auto v = logits.size(2);
    if (targets.numel() > 0 && (targets.min().item<std::int64_t>() < 0 || targets.max().item<std::int64_t>() >= v))
        throw Error("loss_cap: token id outside the vocabulary of size " + std::to_string(v));
    const auto keep = targets != data::Vocabulary::kPad;
    const auto count = keep.sum();
    if (count.item<std::int64_t>() == 0) throw Error("loss_cap: no non-PAD targets");
    const auto nll = -torch::log_softmax(logits, -1).gather(-1, targets.unsqueeze(-1)).squeeze(-1);
    return (nll * keep.to(nll.dtype())).sum() / count.to(nll.dtype());
}

namespace {

torch::Tensor normalised(const torch::Tensor& l) {
    const auto d = l.detach();
    if (d.item<double>() == 0.0) return l;
    return l / d;
}

}  // namespace

torch::Tensor loss_total(const torch::Tensor& l_det, const torch::Tensor& l_cap) {
    return normalised(l_det) + normalised(l_cap);
}

}  // namespace mci::train
