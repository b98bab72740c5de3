#include "mci/data/tokenizer.hpp"

#include <cctype>

namespace mci::data {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j == i) break;

        std::string word;
        word.reserve(j - i);
        for (std::size_t k = i; k < j; ++k) word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[k]))));

        std::size_t stem_end = word.size();
        while (stem_end > 0 && std::ispunct(static_cast<unsigned char>(word[stem_end - 1]))) --stem_end;
        if (stem_end == 0) {
            // all punctuation, e.g. a free-standing "."
            for (char c : word) tokens.emplace_back(1, c);
        } else {
            tokens.push_back(word.substr(0, stem_end));
            for (std::size_t k = stem_end; k < word.size(); ++k) tokens.emplace_back(1, word[k]);
        }
        i = j;
    }
    return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

}  // namespace mci::data
