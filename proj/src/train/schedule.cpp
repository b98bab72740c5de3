#include "mci/train/schedule.hpp"

namespace mci::train {

bool PatienceTracker::update(int epoch, double metric) {
    if (!seen_ || metric > best_) {
        seen_ = true;
        best_ = metric;
        stale_ = 0;
        return false;
    }
    ++stale_;
    if (!trigger_epoch_ && stale_ >= patience_) {
        trigger_epoch_ = epoch;
        return true;
    }
    return false;
}

}  // namespace mci::train
