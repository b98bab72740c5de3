#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

#include "mci/agent/prompt.hpp"
#include "mci/agent/tools.hpp"
#include "mci/data/corpus.hpp"
#include "mci/data/mask_codec.hpp"
#include "mci/data/png_io.hpp"
#include "mci/data/stats.hpp"
#include "mci/data/synth.hpp"
#include "mci/data/vocabulary.hpp"
#include "mci/gateway/service.hpp"
#include "mci/metrics/caption.hpp"
#include "mci/metrics/segmentation.hpp"
#include "mci/nn/checkpoint.hpp"
#include "mci/train/trainer.hpp"

using namespace mci;
namespace fs = std::filesystem;

namespace {

gateway::Service* g_service = nullptr;

void on_signal(int) {
    if (g_service) g_service->stop();
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return nlohmann::json::parse(in);
}

int cmd_synth(const fs::path& out, const data::SynthOptions& opts) {
    const auto pairs = data::synthesize_corpus(opts, out);
    std::ofstream(out / "edits.json") << data::edit_log_json(pairs).dump(2) << '\n';
    std::cout << "wrote " << pairs.size() << " pairs to " << out.string() << '\n';
    return 0;
}

int cmd_stats(const fs::path& root, bool objects) {
    data::DatasetStats stats;
    for (auto split : {data::Split::train, data::Split::val, data::Split::test}) {
        data::CorpusReader reader(root, split);
        data::StatsAccumulator acc;
        for (std::size_t i = 0; i < reader.size(); ++i) acc.add(reader.read_mask(i));
        stats.per_split[split] = acc.result();
    }
    std::cout << stats.to_json(objects).dump(2) << '\n';
    return 0;
}

int cmd_train(const fs::path& root, const fs::path& out, const fs::path& config, bool tiny, int max_epochs) {
    auto cfg = tiny ? train::TrainConfig::tiny() : train::TrainConfig{};
    if (!config.empty()) cfg = read_json(config).get<train::TrainConfig>();
    if (max_epochs > 0) cfg.max_epochs = max_epochs;
    std::vector<data::CaptionRecord> caps;
    for (const auto& r : data::load_corpus(root, data::Split::train)) caps.push_back(r.captions);
    const auto vocab = data::build_vocabulary(caps, cfg.min_freq);
    cfg.model.vocab_size = vocab.size();
    cfg.validate();
    const auto train_set = train::load_training_set(root, data::Split::train, vocab, cfg.model.decoder.max_len);
    const auto val_set = train::load_training_set(root, data::Split::val, vocab, cfg.model.decoder.max_len);
    fs::create_directories(out);
    std::ofstream(out / "train_config.json") << nlohmann::json(cfg).dump(2) << '\n';
    train::seed_everything(cfg.seed, cfg.deterministic);
    const auto result =
        train::run_schedule(train_set, val_set, vocab, cfg, out, [](const std::string& line) { std::cout << line << '\n'; });
    std::cout << "final checkpoint: " << result.final_checkpoint.string() << '\n';
    return 0;
}

int cmd_eval(const fs::path& root, const fs::path& checkpoint, const std::string& split) {
    auto loaded = nn::load_checkpoint(checkpoint);
    const auto set = train::load_training_set(root, data::parse_split(split), loaded.manifest.vocab,
                                              loaded.manifest.config.decoder.max_len);
    if (set.empty()) throw Error("split '" + split + "' is empty");
    const auto report = train::evaluate(loaded.model, loaded.manifest.vocab, set);
    std::vector<data::LabelMap> gts;
    std::vector<std::vector<std::string>> refs;
    for (const auto& s : set) {
        gts.push_back(s.label);
        refs.push_back(s.references);
    }
    auto metrics = metrics::caption_report(report.captions, refs);
    metrics.miou = metrics::miou(report.masks, gts);
    auto out = metrics.to_json();
    out["checkpoint_id"] = loaded.id;
    out["pairs"] = set.size();
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_predict(const fs::path& checkpoint, const fs::path& t1, const fs::path& t2, const fs::path& mask_out) {
    auto loaded = nn::load_checkpoint(checkpoint);
    loaded.model->eval();
    const auto pred = nn::predict(loaded.model, loaded.manifest.vocab, data::read_png(t1), data::read_png(t2));
    if (!mask_out.empty()) data::write_png(mask_out, data::encode_mask(pred.mask));
    nlohmann::json counts;
    for (auto cls : {data::ChangeClass::building, data::ChangeClass::road})
        counts[data::to_string(cls)] = data::count_objects(pred.mask, cls);
    std::cout << nlohmann::json{{"caption", pred.caption}, {"objects", counts}}.dump(2) << '\n';
    return 0;
}

int cmd_serve(const fs::path& config) {
    const auto cfg = gateway::ServiceConfig::load(config);
    gateway::Service service(cfg);
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "listening on " << cfg.host << ":" << cfg.port << '\n' << std::flush;
    const bool ok = service.listen();
    g_service = nullptr;
    if (!ok && !service.server().is_running()) {
        std::cerr << "mci: could not listen on " << cfg.host << ":" << cfg.port << '\n';
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Change interpretation: synthetic data, training, evaluation and the agent service"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
    fs::path synth_out;
    data::SynthOptions synth_opts;
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--seed", synth_opts.seed, "Generator seed");
    synth->add_option("--pairs", synth_opts.n_pairs, "Number of pairs")->check(CLI::PositiveNumber);
    synth->add_option("--size", synth_opts.size, "Image side in pixels (multiple of 32)");
    synth->add_option("--val", synth_opts.n_val, "Pairs assigned to val");
    synth->add_option("--test", synth_opts.n_test, "Pairs assigned to test");

    auto* stats = app.add_subcommand("stats", "Object statistics per split");
    fs::path stats_root;
    bool stats_objects = false;
    stats->add_option("--root", stats_root, "Corpus root")->required()->check(CLI::ExistingDirectory);
    stats->add_flag("--objects", stats_objects, "Include the per-object list");

    auto* trn = app.add_subcommand("train", "Train with the two-phase schedule");
    fs::path train_root, train_out, train_config;
    bool train_tiny = false;
    int train_epochs = 0;
    trn->add_option("--root", train_root, "Corpus root")->required()->check(CLI::ExistingDirectory);
    trn->add_option("--out", train_out, "Output directory")->required();
    trn->add_option("--config", train_config, "Training config JSON")->check(CLI::ExistingFile);
    trn->add_flag("--tiny", train_tiny, "Use the tiny CPU config");
    trn->add_option("--max-epochs", train_epochs, "Override max_epochs");

    auto* ev = app.add_subcommand("eval", "Detection and caption metrics for a split");
    fs::path eval_root, eval_ckpt;
    std::string eval_split = "test";
    ev->add_option("--root", eval_root, "Corpus root")->required()->check(CLI::ExistingDirectory);
    ev->add_option("--checkpoint", eval_ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
    ev->add_option("--split", eval_split, "train, val or test");

    auto* pred = app.add_subcommand("predict", "Mask and caption for one pair");
    fs::path pred_ckpt, pred_t1, pred_t2, pred_mask;
    pred->add_option("--checkpoint", pred_ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
    pred->add_option("--t1", pred_t1, "Earlier image")->required()->check(CLI::ExistingFile);
    pred->add_option("--t2", pred_t2, "Later image")->required()->check(CLI::ExistingFile);
    pred->add_option("--mask-out", pred_mask, "Write the colour-coded mask here");

    auto* serve = app.add_subcommand("serve", "Run the HTTP gateway");
    fs::path serve_config;
    serve->add_option("--config", serve_config, "Service config JSON")->required()->check(CLI::ExistingFile);

    app.add_subcommand("prompt", "Print the agent system prompt");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*synth) return cmd_synth(synth_out, synth_opts);
        if (*stats) return cmd_stats(stats_root, stats_objects);
        if (*trn) return cmd_train(train_root, train_out, train_config, train_tiny, train_epochs);
        if (*ev) return cmd_eval(eval_root, eval_ckpt, eval_split);
        if (*pred) return cmd_predict(pred_ckpt, pred_t1, pred_t2, pred_mask);
        if (*serve) return cmd_serve(serve_config);
        std::cout << agent::build_system_prompt(agent::default_registry());
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "mci: " << e.what() << '\n';
        return 1;
    }
}
