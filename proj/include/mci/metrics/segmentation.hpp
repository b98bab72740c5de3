#pragma once

#include <cstdint>
#include <vector>

#include "mci/data/image.hpp"

namespace mci::metrics {

/// counts(gt, pred) over a corpus; associative under merge().
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int num_classes = data::kNumClasses);

    void add(const data::LabelMap& pred, const data::LabelMap& gt);
    void merge(const ConfusionMatrix& other);

    int num_classes() const { return n_; }
    std::int64_t at(int gt, int pred) const { return counts_[static_cast<std::size_t>(gt) * n_ + pred]; }
    std::int64_t total() const;
    std::int64_t true_positive(int c) const { return at(c, c); }
    std::int64_t false_positive(int c) const;
    std::int64_t false_negative(int c) const;

    /// TP / (TP + FP + FN); 1 for a class absent from both sides corpus-wide.
    double iou(int c) const;
    double mean_iou() const;

private:
    int n_;
    std::vector<std::int64_t> counts_;
};

/// Global-confusion MIoU over paired mask streams.
double miou(const std::vector<data::LabelMap>& preds, const std::vector<data::LabelMap>& gts,
            int num_classes = data::kNumClasses);

}  // namespace mci::metrics
