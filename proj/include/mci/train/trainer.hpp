#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mci/data/image.hpp"
#include "mci/data/vocabulary.hpp"
#include "mci/nn/model.hpp"
#include "mci/train/schedule.hpp"

namespace mci::train {

struct TrainConfig {
    nn::ModelConfig model;  // vocab_size is taken from the vocabulary
    int max_epochs = 200;
    int patience = 50;
    double lr = 1e-4;
    int batch_size = 4;
    double clip_norm = 5.0;
    std::uint64_t seed = 7;
    bool balanced = true;  // false: plain l_det + l_cap
    int max_steps = 0;     // 0: no cap
    bool deterministic = true;
    int min_freq = 1;

    void validate() const;
    /// CPU smoke settings: tiny model and a larger step size.
    static TrainConfig tiny();
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Seeds torch and, when deterministic, pins torch to one thread.
void seed_everything(std::uint64_t seed, bool deterministic);

struct TrainingSample {
    std::string id;
    torch::Tensor t1, t2;  // (3,H,W)
    torch::Tensor mask;    // (H,W)
    data::LabelMap label;
    std::vector<nn::TokenIds> captions;  // BOS ... EOS, cut to max_len
    std::vector<std::string> references;
};

using TrainingSet = std::vector<TrainingSample>;

TrainingSet load_training_set(const std::filesystem::path& root, data::Split split, const data::Vocabulary& vocab,
                              int max_len);

/// Stacked images and masks; K captions per sample padded with PAD, split
/// into decoder inputs (without the last token) and targets (without BOS).
struct Batch {
    torch::Tensor t1, t2, mask, inputs, targets;
};

Batch collate(const std::vector<const TrainingSample*>& samples);

struct StepReport {
    int step = 0;
    double l_det = 0, l_cap = 0, l_total = 0;
};

struct EpochReport {
    int epoch = 0;
    double l_det = 0, l_cap = 0, l_total = 0;  // means over the epoch's steps
    double miou = 0, bleu4 = 0;
};

struct EvalReport {
    double miou = 0;
    std::vector<double> bleu;  // BLEU-1..4
    std::vector<data::LabelMap> masks;
    std::vector<std::string> captions;
};

/// Greedy decoding and argmax masks over a set, in eval mode.
EvalReport evaluate(nn::MciModel& model, const data::Vocabulary& vocab, const TrainingSet& set, int batch_size = 8);

class Trainer {
public:
    Trainer(nn::MciModel model, TrainConfig cfg);

    StepReport step(const std::vector<const TrainingSample*>& batch);
    /// One shuffled pass; stops early once max_steps is reached.
    EpochReport train_epoch(const TrainingSet& set);

    /// Freezes the backbone and gives each branch its own optimiser. Idempotent.
    void enter_branch_phase();
    Phase phase() const { return phase_; }
    int steps() const { return steps_; }
    bool step_budget_spent() const { return cfg_.max_steps > 0 && steps_ >= cfg_.max_steps; }

    nn::MciModel& model() { return model_; }
    const TrainConfig& config() const { return cfg_; }

    std::function<void(const StepReport&)> on_step;

private:
    nn::MciModel model_;
    TrainConfig cfg_;
    Phase phase_ = Phase::joint;
    int steps_ = 0;
    std::mt19937_64 rng_;
    std::unique_ptr<torch::optim::Adam> joint_, det_, cap_;
};

struct ScheduleResult {
    std::vector<EpochReport> history;
    std::optional<int> phase_switch_epoch;
    std::filesystem::path best_detection, best_captioning, final_checkpoint, history_csv;
};

/// Joint training until the BLEU-4 + MIoU patience expires, then branch
/// training on a frozen backbone. Writes history.csv and the checkpoints
/// into out_dir. Validation falls back to the training set when empty.
ScheduleResult run_schedule(const TrainingSet& train_set, const TrainingSet& val_set, const data::Vocabulary& vocab,
                            const TrainConfig& cfg, const std::filesystem::path& out_dir,
                            const std::function<void(const std::string&)>& log = {});

}  // namespace mci::train
