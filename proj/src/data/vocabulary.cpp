#include "mci/data/vocabulary.hpp"

#include <algorithm>

#include "mci/data/corpus.hpp"
#include "mci/data/tokenizer.hpp"
#include "mci/error.hpp"

namespace mci::data {
namespace {

const std::vector<std::string> kSpecialSpellings = {"<pad>", "<bos>", "<eos>", "<unk>"};

}  // namespace

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& regular_tokens) {
    id_to_token_ = kSpecialSpellings;
    for (const auto& t : regular_tokens) id_to_token_.push_back(t);
    for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
        auto [it, inserted] = token_to_id_.emplace(id_to_token_[i], static_cast<std::int64_t>(i));
        if (!inserted) throw Error("duplicate vocabulary token '" + id_to_token_[i] + "'");
    }
}

std::int64_t Vocabulary::id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    if (it == token_to_id_.end() || it->second < kNumSpecial) return kUnk;
    return it->second;
}

const std::string& Vocabulary::token(std::int64_t id) const {
    if (id < 0 || id >= size()) throw Error("token id " + std::to_string(id) + " outside vocabulary");
    return id_to_token_[static_cast<std::size_t>(id)];
}

std::vector<std::int64_t> Vocabulary::encode(const std::vector<std::string>& tokens) const {
    std::vector<std::int64_t> ids;
    ids.reserve(tokens.size() + 2);
    ids.push_back(kBos);
    for (const auto& t : tokens) ids.push_back(id(t));
    ids.push_back(kEos);
    return ids;
}

std::vector<std::int64_t> Vocabulary::encode(const std::string& sentence) const { return encode(tokenize(sentence)); }

std::vector<std::string> Vocabulary::decode_tokens(const std::vector<std::int64_t>& ids) const {
    std::vector<std::string> out;
    for (auto id : ids) {
        if (id == kEos) break;
        if (id == kPad || id == kBos) continue;
        out.push_back(token(id));
    }
    return out;
}

std::string Vocabulary::decode(const std::vector<std::int64_t>& ids) const { return join_tokens(decode_tokens(ids)); }

std::vector<std::string> Vocabulary::regular_tokens() const {
    return {id_to_token_.begin() + kNumSpecial, id_to_token_.end()};
}

nlohmann::json Vocabulary::to_json() const { return nlohmann::json{{"tokens", regular_tokens()}}; }

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
    return Vocabulary(j.at("tokens").get<std::vector<std::string>>());
}

Vocabulary build_vocabulary(const std::vector<std::string>& sentences, int min_freq) {
    if (sentences.empty()) throw Error("cannot build a vocabulary from zero captions");
    std::map<std::string, int> counts;
    for (const auto& s : sentences)
        for (auto& t : tokenize(s)) ++counts[t];
    std::vector<std::string> kept;
    for (const auto& [token, n] : counts) {
        if (n < min_freq) continue;
        if (std::find(kSpecialSpellings.begin(), kSpecialSpellings.end(), token) != kSpecialSpellings.end()) continue;
        kept.push_back(token);
    }
    return Vocabulary(kept);
}

Vocabulary build_vocabulary(const std::vector<CaptionRecord>& captions, int min_freq) {
    std::vector<std::string> sentences;
    for (const auto& rec : captions)
        for (const auto& s : rec.sentences) sentences.push_back(s);
    return build_vocabulary(sentences, min_freq);
}

}  // namespace mci::data
