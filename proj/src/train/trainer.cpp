#include "mci/train/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "mci/data/corpus.hpp"
#include "mci/error.hpp"
#include "mci/metrics/caption.hpp"
#include "mci/metrics/segmentation.hpp"
#include "mci/nn/checkpoint.hpp"
#include "mci/train/losses.hpp"

namespace mci::train {

void TrainConfig::validate() const {
    if (max_epochs < 1) throw Error("max_epochs must be at least 1");
    if (patience < 1) throw Error("patience must be at least 1");
    if (!(lr > 0)) throw Error("lr must be positive");
    if (batch_size < 1) throw Error("batch_size must be at least 1");
    if (!(clip_norm > 0)) throw Error("clip_norm must be positive");
    if (max_steps < 0) throw Error("max_steps must be non-negative");
    if (min_freq < 1) throw Error("min_freq must be at least 1");
}

TrainConfig TrainConfig::tiny() {
    TrainConfig c;
    c.model = nn::ModelConfig::tiny(0);
    c.lr = 1e-3;
    c.batch_size = 4;
    return c;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"model", c.model},
         {"max_epochs", c.max_epochs},
         {"patience", c.patience},
         {"lr", c.lr},
         {"batch_size", c.batch_size},
         {"clip_norm", c.clip_norm},
         {"seed", c.seed},
         {"balanced", c.balanced},
         {"max_steps", c.max_steps},
         {"deterministic", c.deterministic},
         {"min_freq", c.min_freq}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    auto opt = [&](const char* key, auto& out) {
        if (j.contains(key)) j.at(key).get_to(out);
    };
    opt("model", c.model);
    opt("max_epochs", c.max_epochs);
    opt("patience", c.patience);
    opt("lr", c.lr);
    opt("batch_size", c.batch_size);
    opt("clip_norm", c.clip_norm);
    opt("seed", c.seed);
    opt("balanced", c.balanced);
    opt("max_steps", c.max_steps);
    opt("deterministic", c.deterministic);
    opt("min_freq", c.min_freq);
}

void seed_everything(std::uint64_t seed, bool deterministic) {
    torch::manual_seed(seed);
    if (deterministic) torch::set_num_threads(1);
}

TrainingSet load_training_set(const std::filesystem::path& root, data::Split split, const data::Vocabulary& vocab,
                              int max_len) {
    data::CorpusReader reader(root, split);
    TrainingSet set;
    for (std::size_t i = 0; i < reader.size(); ++i) {
        auto rec = reader.read(i);
        TrainingSample s;
        s.id = rec.pair.id;
        s.t1 = nn::image_to_tensor(rec.pair.t1).clone();
        s.t2 = nn::image_to_tensor(rec.pair.t2).clone();
        s.mask = nn::mask_to_tensor(rec.mask).clone();
        s.label = rec.mask;
        for (auto ids : data::encode_captions(rec.captions, vocab)) {
            if (static_cast<int>(ids.size()) > max_len) {
                ids.resize(static_cast<std::size_t>(max_len));
                ids.back() = data::Vocabulary::kEos;
            }
            s.captions.push_back(std::move(ids));
        }
        s.references = rec.captions.sentences;
        set.push_back(std::move(s));
    }
    return set;
}

Batch collate(const std::vector<const TrainingSample*>& samples) {
    Batch b;
    std::vector<torch::Tensor> t1, t2, mask;
    std::size_t longest = 0;
    for (const auto* s : samples) {
        t1.push_back(s->t1);
        t2.push_back(s->t2);
        mask.push_back(s->mask);
        for (const auto& c : s->captions) longest = std::max(longest, c.size());
    }
    b.t1 = torch::stack(t1);
    b.t2 = torch::stack(t2);
    b.mask = torch::stack(mask);
    std::vector<std::int64_t> flat;
    std::int64_t rows = 0;
    for (const auto* s : samples)
        for (const auto& c : s->captions) {
            flat.insert(flat.end(), c.begin(), c.end());
            flat.resize(flat.size() + (longest - c.size()), data::Vocabulary::kPad);
            ++rows;
        }
    if (rows % static_cast<std::int64_t>(samples.size()) != 0)
        throw Error("every sample in a batch needs the same number of captions");
    const auto tokens = torch::tensor(flat, torch::kInt64).view({rows, static_cast<std::int64_t>(longest)});
    const auto len = static_cast<std::int64_t>(longest) - 1;
    b.inputs = tokens.narrow(1, 0, len);
    b.targets = tokens.narrow(1, 1, len);
    return b;
}

namespace {

std::unique_ptr<torch::optim::Adam> make_adam(const std::vector<torch::Tensor>& params, double lr) {
    return std::make_unique<torch::optim::Adam>(params, torch::optim::AdamOptions(lr));
}

}  // namespace

Trainer::Trainer(nn::MciModel model, TrainConfig cfg) : model_(std::move(model)), cfg_(std::move(cfg)), rng_(cfg_.seed) {
    cfg_.validate();
    joint_ = make_adam(model_->parameters(), cfg_.lr);
}

void Trainer::enter_branch_phase() {
    if (phase_ == Phase::branches) return;
    model_->backbone->freeze();
    det_ = make_adam(model_->detection_parameters(), cfg_.lr);
    cap_ = make_adam(model_->captioning_parameters(), cfg_.lr);
    joint_.reset();
    phase_ = Phase::branches;
}

StepReport Trainer::step(const std::vector<const TrainingSample*>& samples) {
    if (samples.empty()) throw Error("empty batch");
    model_->train();
    const auto batch = collate(samples);
    const auto out = model_->forward(batch.t1, batch.t2, batch.inputs);
    const auto l_det = loss_det(out.det_logits, batch.mask);
    const auto l_cap = loss_cap(out.cap_logits, batch.targets);
    StepReport r;
    r.step = ++steps_;
    r.l_det = l_det.item<double>();
    r.l_cap = l_cap.item<double>();
    if (phase_ == Phase::joint) {
        const auto total = cfg_.balanced ? loss_total(l_det, l_cap) : l_det + l_cap;
        r.l_total = total.item<double>();
        joint_->zero_grad();
        total.backward();
        torch::nn::utils::clip_grad_norm_(model_->parameters(), cfg_.clip_norm);
        joint_->step();
    } else {
        // The backbone is frozen, so each branch only sees its own loss.
        const auto total = l_det + l_cap;
        r.l_total = total.item<double>();
        det_->zero_grad();
        cap_->zero_grad();
        total.backward();
        torch::nn::utils::clip_grad_norm_(model_->detection_parameters(), cfg_.clip_norm);
        torch::nn::utils::clip_grad_norm_(model_->captioning_parameters(), cfg_.clip_norm);
        det_->step();
        cap_->step();
    }
    if (on_step) on_step(r);
    return r;
}

EpochReport Trainer::train_epoch(const TrainingSet& set) {
    if (set.empty()) throw Error("training set is empty");
    std::vector<std::size_t> order(set.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);
    EpochReport e;
    int n = 0;
    for (std::size_t start = 0; start < order.size() && !step_budget_spent();
         start += static_cast<std::size_t>(cfg_.batch_size)) {
        std::vector<const TrainingSample*> batch;
        for (std::size_t i = start; i < std::min(order.size(), start + cfg_.batch_size); ++i)
            batch.push_back(&set[order[i]]);
        const auto r = step(batch);
        e.l_det += r.l_det;
        e.l_cap += r.l_cap;
        e.l_total += r.l_total;
        ++n;
    }
    if (n > 0) {
        e.l_det /= n;
        e.l_cap /= n;
        e.l_total /= n;
    }
    return e;
}

EvalReport evaluate(nn::MciModel& model, const data::Vocabulary& vocab, const TrainingSet& set, int batch_size) {
    EvalReport r;
    if (set.empty()) return r;
    torch::NoGradGuard guard;
    const bool was_training = model->is_training();
    model->eval();
    std::vector<data::LabelMap> gts;
    std::vector<std::vector<std::string>> refs;
    for (std::size_t start = 0; start < set.size(); start += static_cast<std::size_t>(batch_size)) {
        std::vector<torch::Tensor> t1, t2;
        const auto end = std::min(set.size(), start + static_cast<std::size_t>(batch_size));
        for (std::size_t i = start; i < end; ++i) {
            t1.push_back(set[i].t1);
            t2.push_back(set[i].t2);
        }
        const auto [p1, p2] = nn::encode_pair(*model->backbone, torch::stack(t1), torch::stack(t2));
        const auto logits = model->detection(p1, p2);
        const auto seqs = model->captioning->generate(model->captioning->memory(p1, p2), nn::DecodeMode::greedy, 1);
        for (std::size_t i = start; i < end; ++i) {
            r.masks.push_back(nn::logits_to_mask(logits[static_cast<std::int64_t>(i - start)]));
            r.captions.push_back(vocab.decode(seqs[i - start]));
            gts.push_back(set[i].label);
            refs.push_back(set[i].references);
        }
    }
    r.miou = metrics::miou(r.masks, gts);
    r.bleu = metrics::bleu(r.captions, refs, 4);
    if (was_training) model->train();
    return r;
}

ScheduleResult run_schedule(const TrainingSet& train_set, const TrainingSet& val_set, const data::Vocabulary& vocab,
                            const TrainConfig& cfg_in, const std::filesystem::path& out_dir,
                            const std::function<void(const std::string&)>& log) {
    if (train_set.empty()) throw Error("training corpus is empty");
    auto cfg = cfg_in;
    cfg.model.vocab_size = vocab.size();
    cfg.validate();
    seed_everything(cfg.seed, cfg.deterministic);
    Trainer trainer(nn::MciModel(cfg.model), cfg);
    const auto& val = val_set.empty() ? train_set : val_set;

    std::filesystem::create_directories(out_dir);
    ScheduleResult res;
    res.history_csv = out_dir / "history.csv";
    res.best_detection = out_dir / "best_detection.ckpt";
    res.best_captioning = out_dir / "best_captioning.ckpt";
    res.final_checkpoint = out_dir / "final.ckpt";
    std::ofstream csv(res.history_csv);
    if (!csv) throw IoError("cannot write " + res.history_csv.string());
    csv << "epoch,l_det,l_cap,l_total,miou,bleu4\n";
    csv.precision(10);

    PatienceTracker patience(cfg.patience);
    double best_miou = -1, best_bleu = -1;
    for (int epoch = 1; epoch <= cfg.max_epochs && !trainer.step_budget_spent(); ++epoch) {
        auto e = trainer.train_epoch(train_set);
        e.epoch = epoch;
        const auto ev = evaluate(trainer.model(), vocab, val);
        e.miou = ev.miou;
        e.bleu4 = ev.bleu.size() == 4 ? ev.bleu[3] : 0.0;
        res.history.push_back(e);
        csv << e.epoch << ',' << e.l_det << ',' << e.l_cap << ',' << e.l_total << ',' << e.miou << ',' << e.bleu4
            << '\n'
            << std::flush;
        const nlohmann::json note = {{"epoch", epoch}, {"miou", e.miou}, {"bleu4", e.bleu4}};
        if (e.miou > best_miou) {
            best_miou = e.miou;
            nn::save_checkpoint(res.best_detection, trainer.model(), vocab, note);
        }
        if (e.bleu4 > best_bleu) {
            best_bleu = e.bleu4;
            nn::save_checkpoint(res.best_captioning, trainer.model(), vocab, note);
        }
        if (log)
            log("epoch " + std::to_string(epoch) + " l_det=" + std::to_string(e.l_det) +
                " l_cap=" + std::to_string(e.l_cap) + " miou=" + std::to_string(e.miou) +
                " bleu4=" + std::to_string(e.bleu4));
        if (patience.update(epoch, e.bleu4 + e.miou)) {
            trainer.enter_branch_phase();
            res.phase_switch_epoch = epoch;
            if (log) log("patience expired at epoch " + std::to_string(epoch) + "; training branches separately");
        }
    }
    nn::save_checkpoint(res.final_checkpoint, trainer.model(), vocab,
                        {{"steps", trainer.steps()}, {"epochs", res.history.size()}});
    return res;
}

}  // namespace mci::train
