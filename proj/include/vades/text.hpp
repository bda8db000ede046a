#pragma once

#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "vades/common.hpp"

namespace vades {

struct TokenizedText {
    std::vector<std::string> sentences;
    std::vector<std::string> tokens; // whole-text token stream, punctuation kept
};

namespace detail {

inline bool is_ascii_alpha(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline bool is_ascii_digit(unsigned char c) {
    return c >= '0' && c <= '9';
}

// Non-ASCII bytes are treated as word characters: multibyte UTF-8 sequences
// stay inside tokens instead of being shredded per byte.
inline bool is_word_char(unsigned char c) {
    return is_ascii_alpha(c) || is_ascii_digit(c) || c >= 0x80;
}

inline bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline char lower(unsigned char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

// Words before a '.' that do not end a sentence.
inline const std::unordered_set<std::string>& abbreviations() {
    static const std::unordered_set<std::string> set = {
        "mr",  "mrs", "ms",  "dr",   "prof", "st",  "jr",   "sr",  "vs",
        "etc", "eg",  "ie",  "fig",  "no",   "col", "gen",  "lt",  "rev",
        "hon", "capt", "sgt", "mt",  "approx", "dept", "est", "vol", "ch",
        "sec", "op",  "cf",
    };
    return set;
}

} // namespace detail

// Splits a sentence-sized chunk into tokens. Punctuation characters become
// their own tokens; apostrophes and hyphens between word characters stay
// inside the word ("don't", "well-known").
inline void tokenize_words(std::string_view text, std::vector<std::string>& out) {
    const std::size_t n = text.size();
    std::size_t i = 0;
    while (i < n) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (detail::is_space(c)) {
            ++i;
            continue;
        }
        if (detail::is_word_char(c)) {
            std::size_t j = i + 1;
            while (j < n) {
                const auto cj = static_cast<unsigned char>(text[j]);
                if (detail::is_word_char(cj)) {
                    ++j;
                } else if ((cj == '\'' || cj == '-') && j + 1 < n &&
                           detail::is_word_char(static_cast<unsigned char>(text[j + 1]))) {
                    j += 2;
                } else {
                    break;
                }
            }
            out.emplace_back(text.substr(i, j - i));
            i = j;
        } else {
            out.emplace_back(1, text[i]);
            ++i;
        }
    }
}

// Sentence boundaries sit at runs of terminal punctuation (. ! ?), with an
// abbreviation guard for '.' — the preceding word must not be a known
// abbreviation or a single initial. Trailing quotes/brackets are pulled into
// the sentence. Text without terminal punctuation forms one sentence.
inline TokenizedText tokenize(std::string_view text) {
    TokenizedText out;
    const std::size_t n = text.size();
    std::size_t start = 0;

    auto flush = [&](std::size_t end) {
        std::size_t a = start, b = end;
        while (a < b && detail::is_space(static_cast<unsigned char>(text[a]))) ++a;
        while (b > a && detail::is_space(static_cast<unsigned char>(text[b - 1]))) --b;
        if (b > a) {
            out.sentences.emplace_back(text.substr(a, b - a));
        }
        start = end;
    };

    std::size_t i = 0;
    while (i < n) {
        const char c = text[i];
        if (c != '.' && c != '!' && c != '?') {
            ++i;
            continue;
        }
        // word immediately before the punctuation run
        std::size_t w_end = i;
        std::size_t w_begin = w_end;
        while (w_begin > start &&
               detail::is_ascii_alpha(static_cast<unsigned char>(text[w_begin - 1]))) {
            --w_begin;
        }
        std::size_t j = i;
        while (j < n && (text[j] == '.' || text[j] == '!' || text[j] == '?')) ++j;
        bool boundary = true;
        if (text[i] == '.' && j == i + 1 && w_end > w_begin) {
            std::string word;
            for (std::size_t p = w_begin; p < w_end; ++p) {
                word.push_back(detail::lower(static_cast<unsigned char>(text[p])));
            }
            if (word.size() == 1 || detail::abbreviations().count(word) > 0) {
                boundary = false; // "Dr." or an initial like "J."
            }
        }
        if (boundary) {
            while (j < n && (text[j] == '"' || text[j] == '\'' || text[j] == ')' ||
                             text[j] == ']')) {
                ++j;
            }
            flush(j);
        }
        i = j;
    }
    flush(n);

    for (const auto& s : out.sentences) {
        tokenize_words(s, out.tokens);
    }
    return out;
}

// Vowel-group heuristic with silent-e and -ed adjustments. Deterministic
// stand-in for a pronunciation dictionary; rules:
//   1. count maximal groups of [aeiouy]
//   2. final lone 'e' is silent unless it closes consonant+"le" ("table")
//   3. final "ed" after a consonant other than t/d is silent ("jumped")
//   4. at least one syllable
inline int count_syllables(std::string_view word) {
    std::string w;
    w.reserve(word.size());
    for (unsigned char c : word) {
        if (detail::is_ascii_alpha(c)) {
            w.push_back(detail::lower(c));
        }
    }
    if (w.empty()) {
        throw error("count_syllables: no alphabetic character in '" + std::string(word) + "'");
    }
    auto is_vowel = [](char c) {
        return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
    };
    int groups = 0;
    bool in_group = false;
    for (char c : w) {
        if (is_vowel(c)) {
            if (!in_group) {
                ++groups;
                in_group = true;
            }
        } else {
            in_group = false;
        }
    }
    const std::size_t len = w.size();
    if (groups > 1 && len >= 2 && w[len - 1] == 'e' && !is_vowel(w[len - 2])) {
        const bool le_ending = len >= 3 && w[len - 2] == 'l' && !is_vowel(w[len - 3]);
        if (!le_ending) {
            --groups;
        }
    }
    if (groups > 1 && len >= 3 && w[len - 1] == 'd' && w[len - 2] == 'e' &&
        !is_vowel(w[len - 3]) && w[len - 3] != 't' && w[len - 3] != 'd') {
        --groups;
    }
    return groups < 1 ? 1 : groups;
}

} // namespace vades
