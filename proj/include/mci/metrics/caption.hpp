#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mci::metrics {

using Tokens = std::vector<std::string>;

// All text metrics tokenize with data::tokenize before scoring. Corpus
// inputs pair cands[i] with refs[i].

/// Corpus BLEU-1..max_n: clipped n-gram precision summed over the corpus,
/// geometric mean, brevity penalty against the closest reference length
/// (shorter on ties). No smoothing: any zero precision gives 0.
std::vector<double> bleu(const std::vector<std::string>& cands, const std::vector<std::vector<std::string>>& refs,
                         int max_n = 4);

/// LCS-based F-measure with beta = 1.2, best precision and recall over the
/// references taken independently.
double rouge_l(const std::string& cand, const std::vector<std::string>& refs);
double rouge_l(const std::vector<std::string>& cands, const std::vector<std::vector<std::string>>& refs);

/// CIDEr-D: TF-IDF n-gram (n=1..4) cosine with count clipping and a
/// Gaussian length penalty (sigma = 6), averaged over n and references,
/// times 10. Document frequencies come from the references, so at least
/// two images are required.
std::vector<double> cider_d_per_image(const std::vector<std::string>& cands,
                                      const std::vector<std::vector<std::string>>& refs);
double cider_d(const std::vector<std::string>& cands, const std::vector<std::vector<std::string>>& refs);

/// METEOR without synonym tables. Unigrams align in two stages (exact,
/// then suffix-stripped stems); within a stage each candidate token, left
/// to right, takes the reference slot continuing its predecessor's chunk if
/// one matches, else the earliest free match. Score is
/// Fmean * (1 - 0.5 * (chunks/m)^3) with Fmean = PR / (0.9 P + 0.1 R),
/// maximised over references.
double meteor_lite(const std::string& cand, const std::vector<std::string>& refs);
double meteor_lite(const std::vector<std::string>& cands, const std::vector<std::vector<std::string>>& refs);

/// Suffix stripper used by the stem stage of meteor_lite.
std::string light_stem(const std::string& word);

struct MetricReport {
    double miou = 0;
    std::vector<double> bleu;  // BLEU-1..4
    double meteor_lite = 0;
    double rouge_l = 0;
    double cider_d = 0;

    nlohmann::json to_json() const;
};

/// Caption half of a MetricReport (miou left at 0). CIDEr-D is skipped
/// (left 0) for single-image corpora.
MetricReport caption_report(const std::vector<std::string>& cands, const std::vector<std::vector<std::string>>& refs);

}  // namespace mci::metrics
