#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mci::data {

/// Lowercases, splits on whitespace and detaches trailing punctuation into
/// separate tokens: "A road appears." -> {"a", "road", "appears", "."}.
std::vector<std::string> tokenize(std::string_view text);

/// Inverse-ish of tokenize: tokens joined by single spaces.
std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace mci::data
