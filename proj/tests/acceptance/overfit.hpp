#pragma once

// Shared overfit run: 16 synthetic pairs, seed 7, 128x128, tiny config,
// 200 optimiser steps. Used by the acceptance suite and the agent replay.

#include <chrono>
#include <filesystem>
#include <vector>

#include "mci/data/corpus.hpp"
#include "mci/data/synth.hpp"
#include "mci/nn/checkpoint.hpp"
#include "mci/train/trainer.hpp"

namespace acceptance {

struct OverfitRun {
    mci::data::Vocabulary vocab;
    mci::train::TrainingSet set;
    std::vector<mci::data::SynthPair> pairs;
    std::vector<mci::train::StepReport> steps;
    mci::train::EvalReport eval;
    double seconds = 0;
    std::filesystem::path checkpoint;
};

inline mci::train::TrainConfig overfit_config() {
    auto cfg = mci::train::TrainConfig::tiny();
    cfg.seed = 7;
    cfg.max_steps = 200;
    return cfg;
}

inline OverfitRun run_overfit(const std::filesystem::path& dir, const mci::train::TrainConfig& cfg_in = overfit_config()) {
    using namespace mci;
    OverfitRun run;
    const auto start = std::chrono::steady_clock::now();
    data::SynthOptions opts;
    opts.seed = 7;
    opts.n_pairs = 16;
    opts.size = 128;
    run.pairs = data::synthesize_corpus(opts, dir / "corpus");
    std::vector<data::CaptionRecord> caps;
    for (const auto& r : data::load_corpus(dir / "corpus", data::Split::train)) caps.push_back(r.captions);
    run.vocab = data::build_vocabulary(caps);
    auto cfg = cfg_in;
    cfg.model.vocab_size = run.vocab.size();
    run.set = train::load_training_set(dir / "corpus", data::Split::train, run.vocab, cfg.model.decoder.max_len);

    train::seed_everything(cfg.seed, cfg.deterministic);
    train::Trainer trainer(nn::MciModel(cfg.model), cfg);
    trainer.on_step = [&](const train::StepReport& r) { run.steps.push_back(r); };
    while (!trainer.step_budget_spent()) trainer.train_epoch(run.set);
    run.eval = train::evaluate(trainer.model(), run.vocab, run.set);
    run.checkpoint = dir / "overfit.ckpt";
    nn::save_checkpoint(run.checkpoint, trainer.model(), run.vocab, {{"steps", trainer.steps()}});
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return run;
}

}  // namespace acceptance
