#pragma once
#include <string>
#include <string_view>
#include <vector>

namespace cbr {

// Metric tokenization: lowercase, punctuation split off as single-character
// tokens, then whitespace split.
std::vector<std::string> tokenize(std::string_view text);

// Porter (1980) suffix-stripping stemmer over a lowercase ASCII word.
// Non-alphabetic tokens pass through unchanged.
std::string porter_stem(const std::string& word);

}  // namespace cbr
