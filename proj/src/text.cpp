#include "cbr/text.hpp"

#include <cctype>

namespace cbr {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    };
    for (char ch : text) {
        const unsigned char c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            flush();
        } else if (std::ispunct(c)) {
            flush();
            tokens.push_back(std::string(1, static_cast<char>(c)));
        } else {
            cur.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    flush();
    return tokens;
}

namespace {

bool is_alpha_word(const std::string& w) {
    if (w.empty()) return false;
    for (char c : w) {
        if (!std::isalpha(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

// Porter's consonant test: y is a vowel when preceded by a consonant.
bool is_consonant(const std::string& w, size_t i) {
    switch (w[i]) {
        case 'a': case 'e': case 'i': case 'o': case 'u':
            return false;
        case 'y':
            return i == 0 ? true : !is_consonant(w, i - 1);
        default:
            return true;
    }
}

// m(): number of VC sequences in the stem.
int measure(const std::string& w) {
    int m = 0;
    size_t i = 0;
    const size_t n = w.size();
    while (i < n && is_consonant(w, i)) ++i;
    while (i < n) {
        while (i < n && !is_consonant(w, i)) ++i;
        if (i == n) break;
        ++m;
        while (i < n && is_consonant(w, i)) ++i;
    }
    return m;
}

bool contains_vowel(const std::string& w) {
    for (size_t i = 0; i < w.size(); ++i) {
        if (!is_consonant(w, i)) return true;
    }
    return false;
}

bool ends_double_consonant(const std::string& w) {
    const size_t n = w.size();
    return n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1);
}

// *o: stem ends cvc where the final c is not w, x or y.
bool ends_cvc(const std::string& w) {
    const size_t n = w.size();
    if (n < 3) return false;
    if (!is_consonant(w, n - 3) || is_consonant(w, n - 2) || !is_consonant(w, n - 1)) {
        return false;
    }
    const char last = w[n - 1];
    return last != 'w' && last != 'x' && last != 'y';
}

bool ends_with(const std::string& w, std::string_view suffix) {
    return w.size() >= suffix.size() &&
           w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool replace_suffix(std::string& w, std::string_view suffix, std::string_view repl,
                    int min_measure) {
    if (!ends_with(w, suffix)) return false;
    std::string stem = w.substr(0, w.size() - suffix.size());
    if (measure(stem) <= min_measure) return true;  // matched but condition failed
    stem.append(repl);
    w = std::move(stem);
    return true;
}

void step1a(std::string& w) {
    if (ends_with(w, "sses")) {
        w.erase(w.size() - 2);
    } else if (ends_with(w, "ies")) {
        w.erase(w.size() - 2);
    } else if (ends_with(w, "ss")) {
        // keep
    } else if (ends_with(w, "s")) {
        w.pop_back();
    }
}

void step1b(std::string& w) {
    if (ends_with(w, "eed")) {
        if (measure(w.substr(0, w.size() - 3)) > 0) w.pop_back();
        return;
    }
    bool stripped = false;
    if (ends_with(w, "ed")) {
        std::string stem = w.substr(0, w.size() - 2);
        if (contains_vowel(stem)) {
            w = std::move(stem);
            stripped = true;
        }
    } else if (ends_with(w, "ing")) {
        std::string stem = w.substr(0, w.size() - 3);
        if (contains_vowel(stem)) {
            w = std::move(stem);
            stripped = true;
        }
    }
    if (!stripped) return;
    if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
        w.push_back('e');
    } else if (ends_double_consonant(w) && !ends_with(w, "l") && !ends_with(w, "s") &&
               !ends_with(w, "z")) {
        w.pop_back();
    } else if (measure(w) == 1 && ends_cvc(w)) {
        w.push_back('e');
    }
}

void step1c(std::string& w) {
    if (ends_with(w, "y") && contains_vowel(w.substr(0, w.size() - 1))) {
        w[w.size() - 1] = 'i';
    }
}

void step2(std::string& w) {
    static const std::pair<std::string_view, std::string_view> rules[] = {
        {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"},
        {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},   {"entli", "ent"},
        {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
        {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
        {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},  {"biliti", "ble"},
    };
    for (const auto& [suffix, repl] : rules) {
        if (ends_with(w, suffix)) {
            replace_suffix(w, suffix, repl, 0);
            return;
        }
    }
}

void step3(std::string& w) {
    static const std::pair<std::string_view, std::string_view> rules[] = {
        {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
        {"ical", "ic"},  {"ful", ""},   {"ness", ""},
    };
    for (const auto& [suffix, repl] : rules) {
        if (ends_with(w, suffix)) {
            replace_suffix(w, suffix, repl, 0);
            return;
        }
    }
}

void step4(std::string& w) {
    static const std::string_view suffixes[] = {
        "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment",
        "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
    };
    for (std::string_view suffix : suffixes) {
        if (!ends_with(w, suffix)) continue;
        std::string stem = w.substr(0, w.size() - suffix.size());
        if (measure(stem) > 1) {
            if (suffix == "ion" && !(ends_with(stem, "s") || ends_with(stem, "t"))) {
                return;
            }
            w = std::move(stem);
        }
        return;
    }
}

void step5(std::string& w) {
    if (ends_with(w, "e")) {
        const std::string stem = w.substr(0, w.size() - 1);
        const int m = measure(stem);
        if (m > 1 || (m == 1 && !ends_cvc(stem))) w = stem;
    }
    if (ends_with(w, "ll") && measure(w) > 1) w.pop_back();
}

}  // namespace

std::string porter_stem(const std::string& word) {
    if (word.size() <= 2 || !is_alpha_word(word)) return word;
    std::string w = word;
    step1a(w);
    step1b(w);
    step1c(w);
    step2(w);
    step3(w);
    step4(w);
    step5(w);
    return w;
}

}  // namespace cbr
