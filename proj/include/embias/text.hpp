#pragma once

#include <string>
#include <string_view>

#include "embias/corpus.hpp"

namespace embias {

inline constexpr std::string_view kUserToken = "<user>";
inline constexpr std::string_view kUrlToken = "<url>";

// Unicode NFC followed by full lowercase mapping. Invalid UTF-8 is rejected.
std::string normalize_text(std::string_view text);

// normalize_text + whitespace split, with @-mentions and URLs replaced by
// placeholder tokens.
Sentence tokenize(std::string_view line);

}  // namespace embias
