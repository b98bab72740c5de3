#pragma once

#include <optional>

namespace mci::train {

enum class Phase { joint, branches };

/// Watches a higher-is-better metric. trigger fires once, on the epoch that
/// completes `patience` consecutive epochs without a strict improvement.
class PatienceTracker {
public:
    explicit PatienceTracker(int patience = 50) : patience_(patience) {}

    /// Returns true exactly on the triggering epoch.
    bool update(int epoch, double metric);

    bool triggered() const { return trigger_epoch_.has_value(); }
    std::optional<int> trigger_epoch() const { return trigger_epoch_; }
    double best() const { return best_; }
    int stale() const { return stale_; }

private:
    int patience_;
    bool seen_ = false;
    double best_ = 0.0;
    int stale_ = 0;
    std::optional<int> trigger_epoch_;
};

}  // namespace mci::train
