#pragma once

#include <array>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vades/text.hpp"

namespace vades {

// 17 universal-style tags plus OTHER (mixed alphanumerics) and UNK.
enum class PosTag : int {
    ADJ, ADP, ADV, AUX, CCONJ, DET, INTJ, NOUN, NUM, PART, PRON, PROPN,
    PUNCT, SCONJ, SYM, VERB, X, OTHER, UNK,
};

inline constexpr int kNumPosTags = 19;

inline const std::array<std::string_view, kNumPosTags>& pos_tag_names() {
    static const std::array<std::string_view, kNumPosTags> names = {
        "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
        "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
        "OTHER", "UNK",
    };
    return names;
}

namespace detail {

inline const std::unordered_map<std::string, PosTag>& pos_lexicon() {
    static const std::unordered_map<std::string, PosTag> lex = [] {
        std::unordered_map<std::string, PosTag> m;
        auto add = [&m](std::initializer_list<const char*> words, PosTag t) {
            for (const char* w : words) m.emplace(w, t);
        };
        add({"the", "a", "an", "this", "that", "these", "those", "some", "any",
             "each", "every", "either", "neither", "both", "all", "no",
             "another", "such"}, PosTag::DET);
        add({"of", "in", "to", "for", "with", "on", "at", "by", "from", "up",
             "down", "about", "into", "over", "after", "under", "between",
             "through", "during", "before", "above", "below", "against",
             "along", "among", "around", "behind", "beyond", "beside",
             "besides", "despite", "except", "inside", "outside", "near",
             "off", "onto", "past", "toward", "towards", "underneath",
             "unto", "upon", "within", "without", "across", "amid", "per",
             "via"}, PosTag::ADP);
        add({"i", "me", "my", "mine", "myself", "we", "us", "our", "ours",
             "ourselves", "you", "your", "yours", "yourself", "yourselves",
             "he", "him", "his", "himself", "she", "her", "hers", "herself",
             "it", "its", "itself", "they", "them", "their", "theirs",
             "themselves", "who", "whom", "whose", "which", "what",
             "something", "anything", "nothing", "everything", "someone",
             "anyone", "everyone", "nobody"}, PosTag::PRON);
        add({"am", "is", "are", "was", "were", "be", "been", "being", "have",
             "has", "had", "having", "do", "does", "did", "doing", "will",
             "would", "shall", "should", "may", "might", "must", "can",
             "could", "ought"}, PosTag::AUX);
        add({"and", "or", "but", "nor", "yet"}, PosTag::CCONJ);
        add({"if", "because", "although", "though", "while", "whereas",
             "unless", "whether", "since", "until", "as", "than", "when",
             "whenever", "wherever", "lest"}, PosTag::SCONJ);
        add({"not", "n't"}, PosTag::PART);
        add({"oh", "hey", "wow", "hello", "hi", "yes", "yeah", "ouch", "alas",
             "hmm", "ah", "aha"}, PosTag::INTJ);
        add({"very", "so", "too", "also", "never", "always", "often", "then",
             "once", "here", "there", "where", "why", "how", "now", "again",
             "further", "just", "even", "still", "almost", "quite", "rather",
             "perhaps", "maybe", "soon", "already", "ever", "hence", "thus",
             "therefore", "however", "moreover", "meanwhile", "instead",
             "otherwise", "anyway", "indeed", "only", "well", "more", "most",
             "less", "least", "away", "together", "back", "far"}, PosTag::ADV);
        add({"said", "say", "says", "go", "goes", "went", "gone", "get",
             "gets", "got", "make", "makes", "made", "know", "knows", "knew",
             "known", "think", "thinks", "thought", "take", "takes", "took",
             "taken", "see", "sees", "saw", "seen", "come", "comes", "came",
             "want", "wants", "look", "looks", "use", "uses", "find",
             "finds", "found", "give", "gives", "gave", "given", "tell",
             "tells", "told", "ask", "asks", "seem", "seems", "feel",
             "feels", "felt", "try", "tries", "tried", "leave", "leaves",
             "left", "call", "calls", "put", "let", "keep", "kept", "begin",
             "began", "begun", "write", "wrote", "written", "read", "run",
             "ran", "speak", "spoke", "spoken", "stand", "stood", "hear",
             "heard", "bring", "brought", "hold", "held"}, PosTag::VERB);
        add({"time", "year", "years", "people", "way", "day", "days", "man",
             "men", "woman", "women", "world", "life", "hand", "hands",
             "part", "child", "children", "eye", "eyes", "place", "work",
             "week", "case", "point", "house", "room", "word", "words",
             "night", "water", "thing", "things", "head", "face", "father",
             "mother", "door", "country", "end", "mind", "heart", "name",
             "side", "question", "story", "book", "money", "fact", "moment",
             "voice", "light", "war", "city", "state", "family", "friend",
             "love", "death", "son", "girl", "boy", "nature", "king",
             "person", "home", "earth", "air", "land", "sea", "power"},
            PosTag::NOUN);
        add({"good", "new", "first", "last", "long", "great", "little",
             "own", "old", "right", "big", "high", "small", "large",
             "young", "early", "important", "few", "public", "bad", "same",
             "able", "other", "many", "much", "certain", "true", "whole",
             "full", "poor", "dear", "dark", "strong", "short", "free",
             "sure", "better", "best", "white", "black", "real", "low",
             "late", "hard", "several", "next", "possible"}, PosTag::ADJ);
        add({"one", "two", "three", "four", "five", "six", "seven", "eight",
             "nine", "ten", "hundred", "thousand", "million", "dozen",
             "half", "zero", "twenty", "thirty", "forty", "fifty"},
            PosTag::NUM);
        return m;
    }();
    return lex;
}

inline bool all_punct(std::string_view t) {
    for (unsigned char c : t) {
        if (is_word_char(c) || is_space(c)) return false;
    }
    return !t.empty();
}

inline bool is_symbol_token(std::string_view t) {
    static constexpr std::string_view syms = "$%+=<>^~|#@&*";
    return t.size() == 1 && syms.find(t[0]) != std::string_view::npos;
}

// digits with optional . , - separators
inline bool is_numeric_token(std::string_view t) {
    bool digit_seen = false;
    for (unsigned char c : t) {
        if (is_ascii_digit(c)) {
            digit_seen = true;
        } else if (c != '.' && c != ',' && c != '-') {
            return false;
        }
    }
    return digit_seen;
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace detail

// Deterministic lexicon + suffix-rule tagger. Rule order: punctuation and
// symbols, numbers, lexicon, derivational suffixes, capitalized -> PROPN,
// letter/digit mixtures -> OTHER, everything else UNK.
inline PosTag pos_tag_one(std::string_view token) {
    using namespace detail;
    if (token.empty()) return PosTag::UNK;
    if (is_symbol_token(token)) return PosTag::SYM;
    if (all_punct(token)) return PosTag::PUNCT;
    if (is_numeric_token(token)) return PosTag::NUM;

    std::string low;
    low.reserve(token.size());
    bool has_alpha = false, has_digit = false;
    for (unsigned char c : token) {
        if (is_ascii_alpha(c)) has_alpha = true;
        if (is_ascii_digit(c)) has_digit = true;
        low.push_back(lower(c));
    }
    const auto& lex = pos_lexicon();
    if (auto it = lex.find(low); it != lex.end()) {
        return it->second;
    }
    if (has_alpha && low.size() >= 4) {
        if (ends_with(low, "ing") || ends_with(low, "ize") ||
            ends_with(low, "ise") || ends_with(low, "ify")) {
            return PosTag::VERB;
        }
        if (ends_with(low, "ed") && low.size() >= 5) return PosTag::VERB;
        if (ends_with(low, "ly")) return PosTag::ADV;
        if (ends_with(low, "tion") || ends_with(low, "sion") ||
            ends_with(low, "ment") || ends_with(low, "ness") ||
            ends_with(low, "ity") || ends_with(low, "ship") ||
            ends_with(low, "hood") || ends_with(low, "ism") ||
            ends_with(low, "ance") || ends_with(low, "ence")) {
            return PosTag::NOUN;
        }
        if (ends_with(low, "ous") || ends_with(low, "ful") ||
            ends_with(low, "ive") || ends_with(low, "able") ||
            ends_with(low, "ible") || ends_with(low, "less") ||
            ends_with(low, "ish") || ends_with(low, "est")) {
            return PosTag::ADJ;
        }
        if (ends_with(low, "ward") || ends_with(low, "wards")) {
            return PosTag::ADV;
        }
    }
    const auto first = static_cast<unsigned char>(token[0]);
    if (has_alpha && has_digit) return PosTag::OTHER;
    if (first >= 'A' && first <= 'Z') return PosTag::PROPN;
    return PosTag::UNK;
}

inline std::vector<PosTag> pos_tag(const std::vector<std::string>& tokens) {
    std::vector<PosTag> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        out.push_back(pos_tag_one(t));
    }
    return out;
}

} // namespace vades
