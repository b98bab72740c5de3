#include "mci/metrics/caption.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <cmath>
#include <map>
#include <set>

#include "mci/data/tokenizer.hpp"
#include "mci/error.hpp"

namespace mci::metrics {
namespace {

using NgramCounts = std::map<Tokens, int>;

NgramCounts ngram_counts(const Tokens& t, int n) {
    NgramCounts counts;
    for (std::size_t i = 0; i + n <= t.size(); ++i) ++counts[Tokens(t.begin() + i, t.begin() + i + n)];
    return counts;
}

void check_corpus(const std::vector<std::string>& cands, const std::vector<std::vector<std::string>>& refs) {
    if (cands.size() != refs.size()) throw Error("candidate and reference lists differ in length");
    for (const auto& r : refs)
        if (r.empty()) throw Error("every candidate needs at least one reference");
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

constexpr int kCiderN = 4;
constexpr double kCiderSigma = 6.0;

struct CiderVector {
    std::array<std::map<Tokens, double>, kCiderN> weights;
    std::array<double, kCiderN> norm{};
    std::size_t length = 0;
};

std::array<NgramCounts, kCiderN> cider_counts(const Tokens& t) {
    std::array<NgramCounts, kCiderN> out;
    for (int n = 1; n <= kCiderN; ++n) out[n - 1] = ngram_counts(t, n);
    return out;
}

CiderVector tfidf(const std::array<NgramCounts, kCiderN>& counts, std::size_t length,
                  const std::map<Tokens, int>& doc_freq, double log_num_docs) {
    CiderVector v;
    v.length = length;
    for (int n = 0; n < kCiderN; ++n) {
        for (const auto& [gram, tf] : counts[n]) {
            auto it = doc_freq.find(gram);
            const double df = std::log(std::max(1.0, it == doc_freq.end() ? 0.0 : static_cast<double>(it->second)));
            const double w = tf * (log_num_docs - df);
            v.weights[n][gram] = w;
            v.norm[n] += w * w;
        }
        v.norm[n] = std::sqrt(v.norm[n]);
    }
    return v;
}

std::array<double, kCiderN> cider_sim(const CiderVector& hyp, const CiderVector& ref) {
    const double delta = static_cast<double>(hyp.length) - static_cast<double>(ref.length);
    const double penalty = std::exp(-(delta * delta) / (2.0 * kCiderSigma * kCiderSigma));
    std::array<double, kCiderN> val{};
    for (int n = 0; n < kCiderN; ++n) {
        for (const auto& [gram, w] : hyp.weights[n]) {
            auto it = ref.weights[n].find(gram);
            if (it == ref.weights[n].end()) continue;
            val[n] += std::min(w, it->second) * it->second;
        }
        if (hyp.norm[n] != 0 && ref.norm[n] != 0) val[n] /= hyp.norm[n] * ref.norm[n];
        val[n] *= penalty;
    }
    return val;
}

struct Alignment {
    std::size_t matches = 0;
    std::size_t chunks = 0;
};

Alignment align(const Tokens& cand, const Tokens& ref) {
    std::vector<int> cand_to_ref(cand.size(), -1);
    std::vector<bool> ref_used(ref.size(), false);

    auto run_stage = [&](auto&& key) {
        for (std::size_t i = 0; i < cand.size(); ++i) {
            if (cand_to_ref[i] >= 0) continue;
            const std::string k = key(cand[i]);
            int chosen = -1;
            if (i > 0 && cand_to_ref[i - 1] >= 0) {
                const std::size_t j = static_cast<std::size_t>(cand_to_ref[i - 1]) + 1;
                if (j < ref.size() && !ref_used[j] && key(ref[j]) == k) chosen = static_cast<int>(j);
            }
            for (std::size_t j = 0; chosen < 0 && j < ref.size(); ++j)
                if (!ref_used[j] && key(ref[j]) == k) chosen = static_cast<int>(j);
            if (chosen >= 0) {
                cand_to_ref[i] = chosen;
                ref_used[static_cast<std::size_t>(chosen)] = true;
            }
        }
    };
    run_stage([](const std::string& w) { return w; });
    run_stage([](const std::string& w) { return light_stem(w); });

    Alignment a;
    int prev_ref = -2;
    bool prev_matched = false;
    for (std::size_t i = 0; i < cand.size(); ++i) {
        const int j = cand_to_ref[i];
        if (j < 0) {
            prev_matched = false;
            continue;
        }
        ++a.matches;
        if (!prev_matched || j != prev_ref + 1) ++a.chunks;
        prev_ref = j;
        prev_matched = true;
    }
    return a;
}

double meteor_single(const Tokens& cand, const Tokens& ref) {
    constexpr double alpha = 0.9, beta = 3.0, gamma = 0.5;
    const Alignment a = align(cand, ref);
    if (a.matches == 0) return 0.0;
    const double p = static_cast<double>(a.matches) / cand.size();
    const double r = static_cast<double>(a.matches) / ref.size();
    const double fmean = p * r / (alpha * p + (1 - alpha) * r);
    const double penalty = gamma * std::pow(static_cast<double>(a.chunks) / a.matches, beta);
    return fmean * (1 - penalty);
}

}  // namespace

std::vector<double> bleu(const std::vector<std::string>& cands, const std::vector<std::vector<std::string>>& refs,
                         int max_n) {
    check_corpus(cands, refs);
    if (max_n < 1) throw Error("BLEU order must be positive");
    std::vector<double> matched(max_n, 0), total(max_n, 0);
    double cand_len = 0, ref_len = 0;

    for (std::size_t s = 0; s < cands.size(); ++s) {
        const Tokens c = data::tokenize(cands[s]);
        std::vector<Tokens> rs;
        for (const auto& r : refs[s]) rs.push_back(data::tokenize(r));

        cand_len += c.size();
        std::size_t best = rs[0].size();
        for (const auto& r : rs) {
            const auto d = [&](std::size_t len) { return len > c.size() ? len - c.size() : c.size() - len; };
            if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
        }
        ref_len += best;

        for (int n = 1; n <= max_n; ++n) {
            const NgramCounts cc = ngram_counts(c, n);
            NgramCounts max_ref;
            for (const auto& r : rs)
                for (const auto& [g, k] : ngram_counts(r, n)) max_ref[g] = std::max(max_ref[g], k);
            for (const auto& [g, k] : cc) {
                auto it = max_ref.find(g);
                matched[n - 1] += std::min(k, it == max_ref.end() ? 0 : it->second);
                total[n - 1] += k;
            }
        }
    }

    const double bp = cand_len == 0 ? 0.0 : (cand_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len));
    std::vector<double> scores(max_n, 0.0);
    double log_sum = 0;
    for (int n = 0; n < max_n; ++n) {
        if (matched[n] == 0 || total[n] == 0) {
            // every higher order inherits the zero
            break;
        }
        log_sum += std::log(matched[n] / total[n]);
        scores[n] = bp * std::exp(log_sum / (n + 1));
    }
    return scores;
}

double rouge_l(const std::string& cand, const std::vector<std::string>& refs) {
    constexpr double beta = 1.2;
    if (refs.empty()) throw Error("ROUGE-L needs at least one reference");
    const Tokens c = data::tokenize(cand);
    double best_p = 0, best_r = 0;
    for (const auto& ref : refs) {
        const Tokens r = data::tokenize(ref);
        const double lcs = static_cast<double>(lcs_length(c, r));
        if (!c.empty()) best_p = std::max(best_p, lcs / c.size());
        if (!r.empty()) best_r = std::max(best_r, lcs / r.size());
    }
    if (best_p == 0 || best_r == 0) return 0.0;
    return (1 + beta * beta) * best_p * best_r / (best_r + beta * beta * best_p);
}

double rouge_l(const std::vector<std::string>& cands, const std::vector<std::vector<std::string>>& refs) {
    check_corpus(cands, refs);
    if (cands.empty()) return 0.0;
    double s = 0;
    for (std::size_t i = 0; i < cands.size(); ++i) s += rouge_l(cands[i], refs[i]);
    return s / cands.size();
}

std::vector<double> cider_d_per_image(const std::vector<std::string>& cands,
                                      const std::vector<std::vector<std::string>>& refs) {
    check_corpus(cands, refs);
    if (cands.size() < 2) throw Error("CIDEr-D needs a corpus of at least two images for document frequencies");

    std::vector<std::vector<std::pair<std::array<NgramCounts, kCiderN>, std::size_t>>> ref_counts(refs.size());
    std::map<Tokens, int> doc_freq;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        std::set<Tokens> seen;
        for (const auto& r : refs[i]) {
            const Tokens t = data::tokenize(r);
            auto counts = cider_counts(t);
            for (const auto& per_n : counts)
                for (const auto& [g, _] : per_n) seen.insert(g);
            ref_counts[i].emplace_back(std::move(counts), t.size());
        }
        for (const auto& g : seen) ++doc_freq[g];
    }
    const double log_num_docs = std::log(static_cast<double>(refs.size()));

    std::vector<double> scores;
    scores.reserve(cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const Tokens c = data::tokenize(cands[i]);
        const CiderVector hyp = tfidf(cider_counts(c), c.size(), doc_freq, log_num_docs);
        std::array<double, kCiderN> acc{};
        for (const auto& [counts, len] : ref_counts[i]) {
            const auto sim = cider_sim(hyp, tfidf(counts, len, doc_freq, log_num_docs));
            for (int n = 0; n < kCiderN; ++n) acc[n] += sim[n];
        }
        double mean = 0;
        for (double v : acc) mean += v;
        mean /= kCiderN;
        scores.push_back(mean / ref_counts[i].size() * 10.0);
    }
    return scores;
}

double cider_d(const std::vector<std::string>& cands, const std::vector<std::vector<std::string>>& refs) {
    const auto per_image = cider_d_per_image(cands, refs);
    double s = 0;
    for (double v : per_image) s += v;
    return s / per_image.size();
}

std::string light_stem(const std::string& word) {
    auto strip = [&](const std::string& suffix, std::size_t min_stem) -> std::optional<std::string> {
        if (word.size() >= suffix.size() + min_stem && word.compare(word.size() - suffix.size(), suffix.size(), suffix) == 0)
            return word.substr(0, word.size() - suffix.size());
        return std::nullopt;
    };
    for (const char* suffix : {"ing", "ed", "ly", "es"}) {
        if (auto s = strip(suffix, 3)) return *s;
    }
    if (word.size() > 3 && word.back() == 's' && word[word.size() - 2] != 's') return word.substr(0, word.size() - 1);
    return word;
}

double meteor_lite(const std::string& cand, const std::vector<std::string>& refs) {
    if (refs.empty()) throw Error("METEOR-lite needs at least one reference");
    const Tokens c = data::tokenize(cand);
    double best = 0;
    for (const auto& r : refs) best = std::max(best, meteor_single(c, data::tokenize(r)));
    return best;
}

double meteor_lite(const std::vector<std::string>& cands, const std::vector<std::vector<std::string>>& refs) {
    check_corpus(cands, refs);
    if (cands.empty()) return 0.0;
    double s = 0;
    for (std::size_t i = 0; i < cands.size(); ++i) s += meteor_lite(cands[i], refs[i]);
    return s / cands.size();
}

nlohmann::json MetricReport::to_json() const {
    return {{"miou", miou}, {"bleu", bleu}, {"meteor_lite", meteor_lite}, {"rouge_l", rouge_l}, {"cider_d", cider_d}};
}

MetricReport caption_report(const std::vector<std::string>& cands, const std::vector<std::vector<std::string>>& refs) {
    MetricReport r;
    r.bleu = bleu(cands, refs, 4);
    r.rouge_l = rouge_l(cands, refs);
    r.meteor_lite = meteor_lite(cands, refs);
    if (cands.size() >= 2) r.cider_d = cider_d(cands, refs);
    return r;
}

}  // namespace mci::metrics
