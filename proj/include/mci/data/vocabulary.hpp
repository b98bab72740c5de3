#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace mci::data {

struct CaptionRecord;

/// Token <-> id map. Special ids are fixed: PAD=0, BOS=1, EOS=2, UNK=3;
/// regular tokens follow in lexicographic order.
class Vocabulary {
public:
    static constexpr std::int64_t kPad = 0;
    static constexpr std::int64_t kBos = 1;
    static constexpr std::int64_t kEos = 2;
    static constexpr std::int64_t kUnk = 3;
    static constexpr std::int64_t kNumSpecial = 4;

    Vocabulary();
    /// Tokens must be unique and must not collide with the special spellings.
    explicit Vocabulary(const std::vector<std::string>& regular_tokens);

    std::int64_t size() const { return static_cast<std::int64_t>(id_to_token_.size()); }
    std::int64_t id(const std::string& token) const;  // UNK when absent
    const std::string& token(std::int64_t id) const;
    bool contains(const std::string& token) const { return token_to_id_.count(token) > 0; }

    /// BOS + ids + EOS.
    std::vector<std::int64_t> encode(const std::vector<std::string>& tokens) const;
    std::vector<std::int64_t> encode(const std::string& sentence) const;
    /// Drops specials and stops at the first EOS.
    std::vector<std::string> decode_tokens(const std::vector<std::int64_t>& ids) const;
    std::string decode(const std::vector<std::int64_t>& ids) const;

    std::vector<std::string> regular_tokens() const;

    nlohmann::json to_json() const;
    static Vocabulary from_json(const nlohmann::json& j);

    bool operator==(const Vocabulary& o) const { return id_to_token_ == o.id_to_token_; }

private:
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, std::int64_t> token_to_id_;
};

/// Counts tokens over every sentence; tokens seen fewer than min_freq times
/// are left out (and so encode to UNK). Throws mci::Error with no captions.
Vocabulary build_vocabulary(const std::vector<CaptionRecord>& captions, int min_freq = 1);
Vocabulary build_vocabulary(const std::vector<std::string>& sentences, int min_freq = 1);

}  // namespace mci::data
