#pragma once

#include <torch/torch.h>

namespace mci::train {

/// Mean per-pixel cross-entropy. logits (B,3,H,W), gt (B,H,W) int64.
torch::Tensor loss_det(const torch::Tensor& logits, const torch::Tensor& gt);

/// Token cross-entropy averaged over non-PAD targets. logits (N,T,V),
/// targets (N,T). Throws on ids outside [0, V).
torch::Tensor loss_cap(const torch::Tensor& logits, const torch::Tensor& targets);

/// l_det / detach(l_det) + l_cap / detach(l_cap). A term whose loss is zero
/// enters unnormalised.
torch::Tensor loss_total(const torch::Tensor& l_det, const torch::Tensor& l_cap);

}  // namespace mci::train
