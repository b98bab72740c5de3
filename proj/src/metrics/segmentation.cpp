#include "mci/metrics/segmentation.hpp"

#include <numeric>

#include "mci/error.hpp"

namespace mci::metrics {

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : n_(num_classes), counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {
    if (num_classes < 1) throw Error("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(const data::LabelMap& pred, const data::LabelMap& gt) {
    if (pred.height() != gt.height() || pred.width() != gt.width())
        throw ShapeError("prediction and ground-truth masks differ in size");
    const auto p = pred.raw();
    const auto g = gt.raw();
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] >= n_ || g[i] >= n_) throw Error("mask class outside the confusion matrix range");
        ++counts_[static_cast<std::size_t>(g[i]) * n_ + p[i]];
    }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.n_ != n_) throw Error("cannot merge confusion matrices of different sizes");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::int64_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0}); }

std::int64_t ConfusionMatrix::false_positive(int c) const {
    std::int64_t s = 0;
    for (int g = 0; g < n_; ++g)
        if (g != c) s += at(g, c);
    return s;
}

std::int64_t ConfusionMatrix::false_negative(int c) const {
    std::int64_t s = 0;
    for (int p = 0; p < n_; ++p)
        if (p != c) s += at(c, p);
    return s;
}

double ConfusionMatrix::iou(int c) const {
    const std::int64_t tp = true_positive(c);
    const std::int64_t denom = tp + false_positive(c) + false_negative(c);
    if (denom == 0) return 1.0;
    return static_cast<double>(tp) / static_cast<double>(denom);
}

double ConfusionMatrix::mean_iou() const {
    double s = 0;
    for (int c = 0; c < n_; ++c) s += iou(c);
    return s / n_;
}

double miou(const std::vector<data::LabelMap>& preds, const std::vector<data::LabelMap>& gts, int num_classes) {
    if (preds.size() != gts.size()) throw ShapeError("prediction and ground-truth counts differ");
    ConfusionMatrix cm(num_classes);
    for (std::size_t i = 0; i < preds.size(); ++i) cm.add(preds[i], gts[i]);
    return cm.mean_iou();
}

}  // namespace mci::metrics
