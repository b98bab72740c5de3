// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any FAIL.

#include <torch/torch.h>

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "acceptance/overfit.hpp"
#include "fixtures/temp_dir.hpp"
#include "fixtures/toy_corpus.hpp"
#include "mci/agent/agent.hpp"
#include "mci/data/mask_codec.hpp"
#include "mci/data/png_io.hpp"
#include "mci/data/stats.hpp"
#include "mci/gateway/service.hpp"
#include "mci/metrics/caption.hpp"
#include "mci/metrics/segmentation.hpp"
#include "mci/nn/bi3.hpp"
#include "mci/nn/captioning_head.hpp"
#include "mci/nn/detection_head.hpp"
#include "mci/train/losses.hpp"
#include "mci/util/hash.hpp"
#include "oracles/finite_difference.hpp"
#include "oracles/flood_fill.hpp"
#include "oracles/miou_oracle.hpp"
#include "oracles/text_metric_oracle.hpp"

using namespace mci;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
    Status status = Status::fail;
    std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(4) << v;
    return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Shared state: the overfit run feeds the loss, overfit, replay and gateway criteria.
struct Shared {
    fixtures::TempDir dir{"mci-acceptance"};
    std::optional<acceptance::OverfitRun> overfit;
    std::string overfit_error;

    acceptance::OverfitRun& run() {
        if (!overfit && overfit_error.empty()) {
            try {
                overfit = acceptance::run_overfit(dir.path() / "overfit");
            } catch (const std::exception& e) {
                overfit_error = e.what();
            }
        }
        if (!overfit) throw Error("overfit run failed: " + overfit_error);
        return *overfit;
    }
};

Outcome loss_balance(Shared& shared) {
    auto& run = shared.run();
    double worst = 0;
    for (const auto& s : run.steps) worst = std::max(worst, std::abs(s.l_total - 2.0));
    const bool identity = run.steps.size() == 200 && worst <= 1e-6;

    // Per-term scaling on a real batch: grad(total) against grad(l_det)/l_det + grad(l_cap)/l_cap.
    auto loaded = nn::load_checkpoint(run.checkpoint);
    auto model = loaded.model;
    model->train();
    std::vector<const train::TrainingSample*> samples;
    for (std::size_t i = 0; i < 4; ++i) samples.push_back(&run.set[i]);
    const auto batch = train::collate(samples);
    const auto out = model->forward(batch.t1, batch.t2, batch.inputs);
    const auto l_det = train::loss_det(out.det_logits, batch.mask);
    const auto l_cap = train::loss_cap(out.cap_logits, batch.targets);
    const auto total = train::loss_total(l_det, l_cap);
    std::vector<torch::Tensor> params;
    for (auto& p : model->parameters())
        if (p.requires_grad()) params.push_back(p);
    const auto g_total = torch::autograd::grad({total}, params, {}, true, false, true);
    const auto g_det = torch::autograd::grad({l_det}, params, {}, true, false, true);
    const auto g_cap = torch::autograd::grad({l_cap}, params, {}, false, false, true);
    const double ld = l_det.item<double>(), lc = l_cap.item<double>();
    double diff2 = 0, norm2 = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto expected = torch::zeros_like(params[i], torch::kFloat64);
        if (g_det[i].defined()) expected += g_det[i].to(torch::kFloat64) / ld;
        if (g_cap[i].defined()) expected += g_cap[i].to(torch::kFloat64) / lc;
        const auto got = g_total[i].defined() ? g_total[i].to(torch::kFloat64) : torch::zeros_like(expected);
        diff2 += (got - expected).pow(2).sum().item<double>();
        norm2 += expected.pow(2).sum().item<double>();
    }
    const double rel = std::sqrt(diff2) / std::max(std::sqrt(norm2), 1e-30);
    return verdict(identity && rel < 1e-4, std::to_string(run.steps.size()) + " steps, max |l_total - 2| = " +
                                               fmt(worst) + ", gradient scaling rel err = " + fmt(rel));
}

Outcome gdfa_constancy(Shared&) {
    torch::manual_seed(101);
    torch::NoGradGuard g;
    double worst_var = 0;
    bool exact = true;
    for (int trial = 0; trial < 20; ++trial) {
        const std::int64_t c = 4 + trial % 5;
        nn::Gdfa gdfa(c, c);
        const auto x = torch::randn({2, 16 + trial, c});
        const auto out = gdfa(x, x);
        worst_var = std::max(worst_var, out.var(1, false).max().item<double>());
        const auto a = torch::randn({3, 1, c}), b = torch::randn({3, 1, c});
        exact = exact && torch::equal(gdfa(a, b), gdfa->values(a, b));
    }
    return verdict(worst_var < 1e-10 && exact, "max spatial variance " + fmt(worst_var) +
                                                   (exact ? ", N=1 returns V exactly" : ", N=1 differs from V"));
}

Outcome lpe_residual(Shared&) {
    torch::manual_seed(202);
    nn::Lpe lpe(6);
    std::int64_t violations = 0;
    for (int i = 0; i < 1000; ++i) {
        lpe->train(i % 2 == 0);
        const auto x = torch::randn({2, 6, 3 + i % 6, 3 + (i / 6) % 6}) * (1 + i % 4);
        violations += (lpe(x) - x < 0).sum().item<std::int64_t>();
    }
    return verdict(violations == 0, "1000 inputs, " + std::to_string(violations) + " violations");
}

Outcome gradient_checks(Shared&) {
    const auto t0 = std::chrono::steady_clock::now();
    auto r64 = [](std::vector<std::int64_t> s) { return torch::randn(s, torch::kFloat64).requires_grad_(true); };
    std::vector<std::pair<std::string, double>> errs;

    torch::manual_seed(301);
    {
        nn::Lpe m(3);
        m->to(torch::kFloat64);
        const auto x = r64({2, 3, 4, 4});
        errs.push_back({"lpe", oracle::grad_check([&] { return m(x); }, oracle::with_parameters({{"x", x}}, *m)).max_rel_err});
    }
    {
        nn::Gdfa m(6, 4);
        m->to(torch::kFloat64);
        const auto a = r64({2, 16, 6}), b = r64({2, 16, 6});
        errs.push_back({"gdfa", oracle::grad_check([&] { return m(a, b); },
                                                   oracle::with_parameters({{"anchor", a}, {"other", b}}, *m))
                                    .max_rel_err});
    }
    {
        nn::Bi3Layer m(8, nn::Bi3Config{});
        m->to(torch::kFloat64);
        const auto a = r64({2, 8, 4, 4}), b = r64({2, 8, 4, 4});
        errs.push_back({"bi3_layer", oracle::grad_check(
                                         [&] {
                                             const auto [z1, z2] = m(a, b);
                                             return torch::cat({z1, z2}, 1);
                                         },
                                         oracle::with_parameters({{"x1", a}, {"x2", b}}, *m))
                                         .max_rel_err});
    }
    {
        nn::Cbf m(6);
        m->to(torch::kFloat64);
        const auto a = r64({2, 6, 4, 4}), b = r64({2, 6, 4, 4});
        errs.push_back({"cbf", oracle::grad_check([&] { return m(a, b); },
                                                  oracle::with_parameters({{"x1", a}, {"x2", b}}, *m))
                                   .max_rel_err});
    }
    {
        nn::DomainBridge m(3, 4);
        m->to(torch::kFloat64);
        const auto a = r64({2, 3, 4, 4}), b = r64({2, 3, 4, 4});
        errs.push_back({"bridge", oracle::grad_check([&] { return m(a, b); },
                                                     oracle::with_parameters({{"x1", a}, {"x2", b}}, *m))
                                      .max_rel_err});
    }
    const double secs = seconds_since(t0);
    bool ok = secs < 120;
    std::string detail;
    for (const auto& [name, e] : errs) {
        ok = ok && e < 1e-4;
        detail += name + " " + fmt(e) + ", ";
    }
    return verdict(ok, detail + fmt(secs) + " s");
}

Outcome metric_oracles(Shared&) {
    using fixtures::kToyCandidates;
    using fixtures::kToyReferences;
    double worst = 0;
    auto track = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
    const auto eb = metrics::bleu(kToyCandidates, kToyReferences, 4);
    const auto ob = oracle::bleu(kToyCandidates, kToyReferences, 4);
    for (int n = 0; n < 4; ++n) track(eb[n], ob[n]);
    double rouge = 0, meteor = 0;
    for (std::size_t i = 0; i < kToyCandidates.size(); ++i) {
        rouge += oracle::rouge_l(kToyCandidates[i], kToyReferences[i]);
        meteor += oracle::meteor_lite(kToyCandidates[i], kToyReferences[i]);
    }
    const double n_img = static_cast<double>(kToyCandidates.size());
    track(metrics::rouge_l(kToyCandidates, kToyReferences), rouge / n_img);
    track(metrics::meteor_lite(kToyCandidates, kToyReferences), meteor / n_img);
    track(metrics::cider_d(kToyCandidates, kToyReferences), oracle::cider_d(kToyCandidates, kToyReferences));

    std::mt19937 rng(5);
    std::vector<data::LabelMap> preds, gts;
    for (int i = 0; i < 5; ++i) {
        preds.push_back(oracle::random_mask(rng, 16, 16));
        gts.push_back(oracle::random_mask(rng, 16, 16));
    }
    track(metrics::miou(preds, gts), oracle::oracle_miou(preds, gts));

    bool identities = metrics::miou(gts, gts) == 1.0;
    const std::vector<std::string> same = {"a building appears at the top left"};
    for (double v : metrics::bleu(same, {same}, 4)) identities = identities && v == 1.0;
    identities = identities && metrics::rouge_l(same[0], same) == 1.0;
    const auto cider = metrics::cider_d_per_image({"a red house appears", "the green road vanished"},
                                                  {{"a red house appears"}, {"the green road vanished"}});
    const bool cider_ok = std::abs(cider[0] - 10.0) < 1e-12 && std::abs(cider[1] - 10.0) < 1e-12;
    return verdict(worst < 1e-6 && identities && cider_ok,
                   "max |engine - oracle| = " + fmt(worst) + (identities ? ", identities hold" : ", identity broken") +
                       ", disjoint CIDEr-D = " + fmt(cider[0]) + "/" + fmt(cider[1]));
}

Outcome overfit(Shared& shared) {
    auto& run = shared.run();
    const bool ok = run.eval.miou >= 0.90 && run.eval.bleu.at(0) >= 0.80 && run.seconds <= 600;
    return verdict(ok, "MIoU " + fmt(run.eval.miou) + ", BLEU-1 " + fmt(run.eval.bleu[0]) + ", " +
                           fmt(run.seconds) + " s on " + std::to_string(std::thread::hardware_concurrency()) +
                           " core(s)");
}

Outcome counting(Shared& shared) {
    std::mt19937 rng(9090);
    int mismatches = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const auto m = oracle::random_blob_mask(rng, 8 + trial % 40, 8 + (trial * 7) % 37);
        const auto blobs = oracle::flood_fill_blobs(m);
        for (int c = 1; c < data::kNumClasses; ++c) {
            const auto expected = std::count_if(blobs.begin(), blobs.end(), [&](const auto& b) { return b.cls == c; });
            if (data::count_objects(m, static_cast<data::ChangeClass>(c)) != expected) ++mismatches;
        }
    }
    int log_mismatches = 0, pairs = 0;
    std::vector<data::SynthPair> corpus = shared.run().pairs;
    for (int i = 0; i < 64; ++i) corpus.push_back(data::synthesize_pair(7, 1000 + i, 128, data::Split::train));
    for (const auto& p : corpus) {
        ++pairs;
        for (auto cls : {data::ChangeClass::building, data::ChangeClass::road})
            if (data::count_objects(p.mask, cls) != p.edit_count(cls)) ++log_mismatches;
    }
    return verdict(mismatches == 0 && log_mismatches == 0,
                   "500 random masks: " + std::to_string(mismatches) + " mismatches; " + std::to_string(pairs) +
                       " synthetic pairs: " + std::to_string(log_mismatches) + " edit-log mismatches");
}

Outcome levir(Shared&) {
    const char* root = std::getenv("LEVIR_MCI_ROOT");
    if (!root || !fs::is_directory(root)) return {Status::skip, "LEVIR_MCI_ROOT not set; corpus absent"};
    std::size_t total = 0;
    data::SplitStats train_stats;
    for (auto split : {data::Split::train, data::Split::val, data::Split::test}) {
        data::CorpusReader reader(root, split);
        total += reader.size();
        if (split != data::Split::train) continue;
        data::StatsAccumulator acc;
        for (std::size_t i = 0; i < reader.size(); ++i) acc.add(reader.read_mask(i));
        train_stats = acc.result();
    }
    const auto roads = train_stats.objects[static_cast<int>(data::ChangeClass::road)];
    const auto buildings = train_stats.objects[static_cast<int>(data::ChangeClass::building)];
    const bool ok = std::abs(roads - 3457.0) <= 0.05 * 3457 && std::abs(buildings - 26155.0) <= 0.05 * 26155 &&
                    total == 10077;
    return verdict(ok, "train roads " + std::to_string(roads) + ", buildings " + std::to_string(buildings) +
                           ", total pairs " + std::to_string(total));
}

struct ReplayResult {
    std::string reply_json;
    std::vector<std::pair<std::string, std::vector<std::uint8_t>>> artifacts;
    json plan;
    std::int64_t count = -1;
    data::RgbImage recolored;
    data::LabelMap mask;
};

ReplayResult replay_once(const fs::path& dir, const fs::path& checkpoint, const data::SynthPair& pair) {
    agent::ArtifactStore store(dir / "artifacts");
    agent::SessionManager sessions(dir / "sessions", 600);
    auto session = sessions.create();
    session->add_pair(agent::store_pair(store, pair.pair.t1, pair.pair.t2, pair.pair.resolution_m_per_px));
    agent::MockLlmClient llm(fs::path(MCI_FIXTURE_DIR "/agent/replay_mock.json"));
    agent::Agent agent(llm, agent::default_registry(), store, gateway::load_model(checkpoint));
    const auto reply = agent.handle(
        session, "Please detect changes, display building areas in green, display road areas in blue, and count "
                 "changed buildings.");
    ReplayResult r;
    r.reply_json = reply.to_json().dump();
    r.plan = reply.plan.value_or(json());
    for (const auto& a : reply.artifacts) r.artifacts.push_back({a.ref, store.get(a.ref).value().bytes});
    r.count = reply.values.at("n").data.get<std::int64_t>();
    r.recolored = data::decode_png(store.get(reply.values.at("colored").data.get<std::string>())->bytes);
    r.mask = data::decode_mask(data::decode_png(store.get(reply.values.at("mask").data.get<std::string>())->bytes));
    return r;
}

Outcome agent_replay(Shared& shared) {
    auto& run = shared.run();
    const data::SynthPair* chosen = nullptr;
    for (const auto& p : run.pairs) {
        const auto inserted = std::count_if(p.edits.begin(), p.edits.end(), [](const data::Edit& e) {
            return e.cls == data::ChangeClass::building && e.op == data::EditOp::insert;
        });
        if (inserted == 2 && p.edit_count(data::ChangeClass::building) == 2) {
            chosen = &p;
            break;
        }
    }
    if (!chosen) return {Status::fail, "no overfit pair with exactly two inserted buildings"};
    const auto oracle_count = chosen->edit_count(data::ChangeClass::building);

    const auto a = replay_once(shared.dir.path() / "replay_a", run.checkpoint, *chosen);
    const auto b = replay_once(shared.dir.path() / "replay_b", run.checkpoint, *chosen);

    const bool plan_ok = a.plan.is_array() && a.plan.size() == 4 && a.plan[0]["tool"] == "detect_changes" &&
                         a.plan[1]["tool"] == "recolor_mask" && a.plan[2]["tool"] == "count_objects";
    bool recolor_ok = a.recolored.height() == a.mask.height() && a.recolored.width() == a.mask.width();
    std::int64_t green = 0, blue = 0;
    for (int y = 0; recolor_ok && y < a.mask.height(); ++y)
        for (int x = 0; x < a.mask.width(); ++x) {
            const auto cls = a.mask.at(y, x);
            const data::Rgb want = cls == data::ChangeClass::building ? data::Rgb{0, 255, 0}
                                   : cls == data::ChangeClass::road   ? data::Rgb{0, 0, 255}
                                                                      : data::Rgb{0, 0, 0};
            recolor_ok = recolor_ok && a.recolored.at(y, x) == want;
            green += cls == data::ChangeClass::building;
            blue += cls == data::ChangeClass::road;
        }
    const bool identical = a.reply_json == b.reply_json && a.artifacts == b.artifacts;
    const bool ok = plan_ok && recolor_ok && green > 0 && a.count == oracle_count && identical;
    return verdict(ok, "pair " + chosen->filename + ": count " + std::to_string(a.count) + " (oracle " +
                           std::to_string(oracle_count) + "), recoloured " + std::to_string(green) + " green / " +
                           std::to_string(blue) + " blue px, " + std::to_string(a.artifacts.size()) + " artifacts, " +
                           (identical ? "replays bit-identical" : "replays differ"));
}

Outcome gateway_contract(Shared& shared) {
    auto& run = shared.run();
    gateway::ServiceConfig cfg;
    cfg.artifact_dir = shared.dir.path() / "gw" / "artifacts";
    cfg.journal_dir = shared.dir.path() / "gw" / "sessions";
    gateway::Service service(cfg, gateway::load_model(run.checkpoint),
                             std::make_unique<agent::MockLlmClient>(fs::path(MCI_FIXTURE_DIR "/agent/gateway_mock.json")));
    const int port = service.bind_to_any_port();
    std::thread server([&] { service.listen_after_bind(); });
    service.server().wait_until_ready();
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(120, 0);

    std::vector<std::string> failures;
    std::set<int> seen_status;
    auto expect = [&](const std::string& what, const httplib::Result& r, int status) {
        if (!r) {
            failures.push_back(what + ": no response");
            return false;
        }
        seen_status.insert(r->status);
        if (r->status != status) failures.push_back(what + ": " + std::to_string(r->status));
        return r->status == status;
    };
    auto as_str = [](const std::vector<std::uint8_t>& v) { return std::string(v.begin(), v.end()); };
    auto post_pair = [&](const std::string& sid, const std::string& t1, const std::string& t2) {
        httplib::MultipartFormDataItems items{{"t1", t1, "t1.png", "image/png"}, {"t2", t2, "t2.png", "image/png"}};
        return c.Post("/api/sessions/" + sid + "/pair", items);
    };
    auto post_msg = [&](const std::string& sid, const std::string& text) {
        return c.Post("/api/sessions/" + sid + "/messages", json{{"text", text}}.dump(), "application/json");
    };

    const auto& pair = run.pairs.front().pair;
    const auto t1 = as_str(data::encode_png(pair.t1)), t2 = as_str(data::encode_png(pair.t2));
    std::size_t fetched = 0;

    auto health = c.Get("/api/health");
    if (expect("health", health, 200) && json::parse(health->body)["checkpoint_id"] != nn::load_checkpoint(run.checkpoint).id)
        failures.push_back("health: wrong checkpoint id");
    auto created = c.Post("/api/sessions");
    std::string sid;
    if (expect("create session", created, 200)) sid = json::parse(created->body)["session_id"];
    const std::string ghost(32, '0');
    expect("upload to unknown session", post_pair(ghost, t1, t2), 404);
    expect("upload non-PNG", post_pair(sid, "not a png", t2), 400);
    expect("upload size mismatch", post_pair(sid, t1, as_str(data::encode_png(data::RgbImage(64, 128)))), 400);
    auto up = post_pair(sid, t1, t2);
    std::string pair_ref;
    if (expect("upload", up, 200)) pair_ref = json::parse(up->body)["pair_ref"];
    auto up2 = post_pair(sid, t1, t2);
    if (up2 && up2->status == 200 && json::parse(up2->body)["pair_ref"] != pair_ref)
        failures.push_back("identical uploads gave different pair refs");
    expect("message to unknown session", post_msg(ghost, "describe the changes"), 404);

    for (const std::string text : {"describe the changes", "show the changes over the new image"}) {
        auto r = post_msg(sid, text);
        if (!expect(text, r, 200)) continue;
        const auto body = json::parse(r->body);
        for (const auto& a : body["artifacts"]) {
            auto bytes = c.Get("/api/artifacts/" + a["ref"].get<std::string>());
            if (expect("fetch " + a["kind"].get<std::string>(), bytes, 200)) {
                ++fetched;
                if (util::sha256_hex(std::string_view(bytes->body)) != a["ref"])
                    failures.push_back("artifact bytes do not hash to their ref");
            }
        }
    }
    expect("step failure", post_msg(sid, "count the trees"), 422);
    expect("planning failure", post_msg(sid, "teleport me"), 422);
    expect("LLM unavailable", post_msg(sid, "are you there"), 503);
    expect("unknown artifact", c.Get("/api/artifacts/" + std::string(64, 'a')), 404);

    service.stop();
    server.join();
    const bool all_codes = seen_status == std::set<int>{200, 400, 404, 422, 503};
    if (!all_codes) failures.push_back("not every status code exercised");
    std::string detail = "statuses";
    for (int s : seen_status) detail += " " + std::to_string(s);
    detail += ", " + std::to_string(fetched) + " returned artifacts fetched";
    for (const auto& f : failures) detail += "; " + f;
    return verdict(failures.empty() && fetched >= 4, detail);
}

}  // namespace

int main() {
    torch::set_num_threads(static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
    Shared shared;
    const std::vector<std::pair<std::string, std::function<Outcome(Shared&)>>> criteria = {
        {"loss-balance identity", loss_balance},
        {"GDFA zero-difference constancy", gdfa_constancy},
        {"LPE residual non-negativity", lpe_residual},
        {"gradient checks", gradient_checks},
        {"metric oracle equivalence", metric_oracles},
        {"overfit smoke test", overfit},
        {"counting oracle", counting},
        {"LEVIR-MCI real-data cross-check", levir},
        {"agent end-to-end replay", agent_replay},
        {"gateway contract suite", gateway_contract},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn(shared);
        } catch (const std::exception& e) {
            o = {Status::fail, std::string("exception: ") + e.what()};
        }
        const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::skip ? "SKIP" : "FAIL";
        failed += o.status == Status::fail;
        std::cout << tag << "  " << name << "  (" << o.detail << "; " << fmt(seconds_since(t0)) << " s)" << std::endl;
    }
    std::cout << (failed ? std::to_string(failed) + " criterion(s) failed" : "all criteria passed") << std::endl;
    return failed ? 1 : 0;
}
