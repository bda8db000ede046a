#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "vades/corpus.hpp"
#include "vades/linalg.hpp"
#include "vades/ner.hpp"
#include "vades/pos.hpp"
#include "vades/text.hpp"

namespace vades {

// The 200 most frequent English function words, fixed and versioned so that
// feature vectors stay comparable across corpora. Grouped: pronouns,
// determiners, prepositions, conjunctions, auxiliaries, adverbs/particles.
inline const std::vector<std::string>& function_words() {
    static const std::vector<std::string> words = {
        "i", "me", "my", "mine", "myself", "we", "us", "our", "ours", "ourselves",
        "you", "your", "yours", "yourself", "yourselves", "he", "him", "his", "himself", "she",
        "her", "hers", "herself", "it", "its", "itself", "they", "them", "their", "theirs",
        "themselves", "who", "whom", "whose", "which", "what", "this", "that", "these", "those",
        "one", "something", "nothing",
        "the", "a", "an", "some", "any", "each", "every", "either", "neither", "both",
        "all", "no", "another", "such", "same", "few", "several",
        "of", "in", "to", "for", "with", "on", "at", "by", "from", "up",
        "down", "about", "into", "over", "after", "under", "between", "through", "during", "before",
        "above", "below", "against", "along", "among", "around", "behind", "beyond", "beside", "besides",
        "despite", "except", "inside", "outside", "near", "off", "onto", "past", "since", "toward",
        "towards", "upon", "within", "without", "across", "amid", "via", "per", "until",
        "and", "or", "but", "nor", "yet", "so", "if", "because", "although", "though",
        "while", "whereas", "unless", "whether", "as", "than", "when",
        "am", "is", "are", "was", "were", "be", "been", "being", "have", "has",
        "had", "having", "do", "does", "did", "doing", "will", "would", "shall", "should",
        "may", "might", "must", "can", "could", "ought",
        "not", "never", "always", "often", "sometimes", "usually", "again", "further", "then", "once",
        "here", "there", "where", "why", "how", "now", "very", "too", "also", "just",
        "even", "still", "almost", "quite", "rather", "enough", "only", "more", "most", "less",
        "least", "much", "many", "little", "own", "other", "together", "away", "back", "well",
        "perhaps", "however", "therefore", "thus", "indeed", "instead", "otherwise", "meanwhile",
    };
    return words;
}

enum class FeatureFamily : int {
    Letters, Numbers, Structural, Punctuation, FunctionWords, Tag, Ner, Indexes,
};

inline constexpr int kNumFamilies = 8;

inline const std::array<std::string_view, kNumFamilies>& family_names() {
    static const std::array<std::string_view, kNumFamilies> names = {
        "Letters", "Numbers", "Structural", "Punctuation", "FunctionWords",
        "TAG", "NER", "Indexes",
    };
    return names;
}

inline FeatureFamily parse_family(std::string_view s) {
    const auto& names = family_names();
    for (int i = 0; i < kNumFamilies; ++i) {
        if (names[i] == s) return static_cast<FeatureFamily>(i);
    }
    throw config_error("unknown feature family '" + std::string(s) + "'");
}

// Rate features are per-token/per-sentence frequencies: bounded to [0,1] and
// invariant under text duplication. Statistics (averages, dispersion,
// vocabulary richness) and readability indexes are only required finite.
enum class FeatureKind : int { Rate, Statistic, Index };

struct FeatureSpec {
    std::string name;
    FeatureFamily family;
    FeatureKind kind;
    std::string extractor; // "letter:a", "fw:the", "index:smog", ...
};

struct FeatureInventory {
    std::string version;
    std::vector<FeatureSpec> entries;

    std::size_t dim() const { return entries.size(); }

    std::uint64_t content_hash() const {
        std::uint64_t h = fnv1a64(version);
        for (const auto& e : entries) {
            h = fnv1a64(e.name, h);
            h = fnv1a64(e.extractor, h);
            h = fnv1a64(static_cast<std::uint64_t>(e.family), h);
        }
        return h;
    }
};

struct StyleVector {
    std::vector<double> values;
    bool standardized = false;
};

namespace detail {

inline const std::string& punct_marks() {
    static const std::string marks = ".,!?;:'\"`()-_[]{}/*&";
    return marks;
}

inline const char* punct_name(char c) {
    switch (c) {
        case '.': return "period";
        case ',': return "comma";
        case '!': return "exclamation";
        case '?': return "question";
        case ';': return "semicolon";
        case ':': return "colon";
        case '\'': return "apostrophe";
        case '"': return "quote";
        case '`': return "backtick";
        case '(': return "lparen";
        case ')': return "rparen";
        case '-': return "hyphen";
        case '_': return "underscore";
        case '[': return "lbracket";
        case ']': return "rbracket";
        case '{': return "lbrace";
        case '}': return "rbrace";
        case '/': return "slash";
        case '*': return "asterisk";
        case '&': return "ampersand";
        default: return "unknown";
    }
}

inline const std::unordered_set<std::string>& function_word_set() {
    static const std::unordered_set<std::string> set(function_words().begin(),
                                                     function_words().end());
    return set;
}

} // namespace detail

// Default r = 300 inventory: Letters 26, Numbers 10, Structural 12,
// Punctuation 20, FunctionWords 200, TAG 19, NER 6, Indexes 7.
inline FeatureInventory default_inventory() {
    FeatureInventory inv;
    inv.version = "vades-300/1";
    auto& e = inv.entries;
    e.reserve(300);
    for (char c = 'a'; c <= 'z'; ++c) {
        e.push_back({std::string("letter_") + c, FeatureFamily::Letters,
                     FeatureKind::Rate, std::string("letter:") + c});
    }
    for (char c = '0'; c <= '9'; ++c) {
        e.push_back({std::string("digit_") + c, FeatureFamily::Numbers,
                     FeatureKind::Rate, std::string("digit:") + c});
    }
    const std::array<std::pair<const char*, FeatureKind>, 12> structural = {{
        {"avg_sentence_len_words", FeatureKind::Statistic},
        {"std_sentence_len_words", FeatureKind::Statistic},
        {"avg_word_len_chars", FeatureKind::Statistic},
        {"std_word_len_chars", FeatureKind::Statistic},
        {"type_token_ratio", FeatureKind::Statistic},
        {"hapax_legomena_ratio", FeatureKind::Statistic},
        {"stopword_ratio", FeatureKind::Rate},
        {"punct_token_ratio", FeatureKind::Rate},
        {"upper_token_ratio", FeatureKind::Rate},
        {"digit_token_ratio", FeatureKind::Rate},
        {"avg_sentence_len_chars", FeatureKind::Statistic},
        {"long_word_ratio", FeatureKind::Rate},
    }};
    for (const auto& [name, kind] : structural) {
        e.push_back({name, FeatureFamily::Structural, kind,
                     std::string("struct:") + name});
    }
    for (char c : detail::punct_marks()) {
        e.push_back({std::string("punct_") + detail::punct_name(c),
                     FeatureFamily::Punctuation, FeatureKind::Rate,
                     std::string("punct:") + c});
    }
    for (const auto& w : function_words()) {
        e.push_back({"fw_" + w, FeatureFamily::FunctionWords, FeatureKind::Rate,
                     "fw:" + w});
    }
    for (const auto& t : pos_tag_names()) {
        e.push_back({"tag_" + std::string(t), FeatureFamily::Tag,
                     FeatureKind::Rate, "tag:" + std::string(t)});
    }
    for (const auto& l : ner_label_names()) {
        e.push_back({"ner_" + std::string(l), FeatureFamily::Ner,
                     FeatureKind::Rate, "ner:" + std::string(l)});
    }
    const std::array<const char*, 7> indexes = {
        "flesch_reading_ease", "flesch_kincaid_grade", "gunning_fog", "smog",
        "ari", "coleman_liau", "syllables_per_word",
    };
    for (const char* name : indexes) {
        e.push_back({name, FeatureFamily::Indexes, FeatureKind::Index,
                     std::string("index:") + name});
    }
    return inv;
}

inline nlohmann::json inventory_to_json(const FeatureInventory& inv) {
    nlohmann::json j;
    j["version"] = inv.version;
    auto arr = nlohmann::json::array();
    for (const auto& e : inv.entries) {
        arr.push_back({{"name", e.name},
                       {"family", family_names()[static_cast<int>(e.family)]},
                       {"kind", static_cast<int>(e.kind)},
                       {"extractor", e.extractor}});
    }
    j["entries"] = arr;
    return j;
}

inline FeatureInventory inventory_from_json(const nlohmann::json& j) {
    FeatureInventory inv;
    inv.version = j.at("version").get<std::string>();
    for (const auto& item : j.at("entries")) {
        FeatureSpec s;
        s.name = item.at("name").get<std::string>();
        s.family = parse_family(item.at("family").get<std::string>());
        s.kind = static_cast<FeatureKind>(item.at("kind").get<int>());
        s.extractor = item.at("extractor").get<std::string>();
        inv.entries.push_back(std::move(s));
    }
    std::unordered_set<std::string> names;
    for (const auto& e : inv.entries) {
        if (!names.insert(e.name).second) {
            throw config_error("duplicate feature name '" + e.name + "' in inventory");
        }
    }
    return inv;
}

inline FeatureInventory load_inventory(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw config_error("cannot open inventory file: " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("invalid inventory file: " + std::string(e.what()));
    }
    return inventory_from_json(j);
}

// All counts a feature can be computed from; computed in one pass per doc.
struct DocProfile {
    std::size_t n_sentences = 0;
    std::array<std::size_t, 26> letter_counts{};
    std::array<std::size_t, 10> digit_counts{};
    std::unordered_map<char, std::size_t> punct_counts;
    std::size_t alpha_chars = 0;
    std::size_t nonws_chars = 0;

    std::size_t total_tokens = 0;
    std::size_t word_tokens = 0;  // tokens starting with a word character
    std::size_t punct_tokens = 0;
    std::size_t upper_tokens = 0;
    std::size_t numeric_tokens = 0;
    std::size_t long_words = 0; // >= 7 chars
    std::size_t chars_in_words = 0; // alnum chars inside word tokens
    double word_len_sum = 0.0;
    double word_len_sumsq = 0.0;
    std::vector<double> sentence_word_counts;
    std::vector<double> sentence_char_counts;

    std::size_t n_types = 0;
    std::size_t hapax = 0;
    std::unordered_map<std::string, std::size_t> fw_counts;
    std::size_t stopword_hits = 0;

    std::array<std::size_t, kNumPosTags> tag_counts{};
    std::array<std::size_t, kNumNerLabels> ner_counts{};

    std::size_t alpha_words = 0;
    std::size_t total_syllables = 0;
    std::size_t complex_words = 0; // >= 3 syllables
};

inline DocProfile compute_profile(const Document& doc) {
    if (doc.sentences.empty()) {
        throw error("extract_features: document '" + doc.doc_id + "' is empty");
    }
    DocProfile p;
    p.n_sentences = doc.sentences.size();
    std::unordered_map<std::string, std::size_t> vocab;
    const auto& fwset = detail::function_word_set();

    for (const auto& sent : doc.sentences) {
        for (unsigned char c : sent) {
            if (detail::is_space(c)) continue;
            ++p.nonws_chars;
            if (detail::is_ascii_alpha(c)) {
                ++p.alpha_chars;
                ++p.letter_counts[detail::lower(c) - 'a'];
            } else if (detail::is_ascii_digit(c)) {
                ++p.digit_counts[c - '0'];
            }
            if (detail::punct_marks().find(static_cast<char>(c)) != std::string::npos) {
                ++p.punct_counts[static_cast<char>(c)];
            }
        }
        std::vector<std::string> toks;
        tokenize_words(sent, toks);
        std::size_t sent_words = 0;
        for (const auto& t : toks) {
            ++p.total_tokens;
            const auto first = static_cast<unsigned char>(t[0]);
            if (!detail::is_word_char(first)) {
                ++p.punct_tokens;
                continue;
            }
            ++sent_words;
            ++p.word_tokens;
            if (first >= 'A' && first <= 'Z') ++p.upper_tokens;
            if (detail::is_numeric_token(t)) ++p.numeric_tokens;
            const double len = static_cast<double>(t.size());
            p.word_len_sum += len;
            p.word_len_sumsq += len * len;
            if (t.size() >= 7) ++p.long_words;

            std::string low;
            low.reserve(t.size());
            bool has_alpha = false;
            for (unsigned char c : t) {
                low.push_back(detail::lower(c));
                if (detail::is_ascii_alpha(c)) has_alpha = true;
                if (detail::is_ascii_alpha(c) || detail::is_ascii_digit(c)) {
                    ++p.chars_in_words;
                }
            }
            ++vocab[low];
            if (fwset.count(low)) {
                ++p.fw_counts[low];
                ++p.stopword_hits;
            }
            if (has_alpha) {
                ++p.alpha_words;
                const int syl = count_syllables(t);
                p.total_syllables += static_cast<std::size_t>(syl);
                if (syl >= 3) ++p.complex_words;
            }
        }
        p.sentence_word_counts.push_back(static_cast<double>(sent_words));
        double sent_chars = 0;
        for (unsigned char c : sent) {
            if (!detail::is_space(c)) ++sent_chars;
        }
        p.sentence_char_counts.push_back(sent_chars);

        const auto tags = pos_tag(toks);
        for (PosTag t : tags) ++p.tag_counts[static_cast<int>(t)];
        const auto ners = ner_tag(toks);
        for (NerLabel l : ners) ++p.ner_counts[static_cast<int>(l)];
    }
    p.n_types = vocab.size();
    for (const auto& [w, n] : vocab) {
        if (n == 1) ++p.hapax;
    }
    if (p.word_tokens == 0) {
        throw error("extract_features: document '" + doc.doc_id + "' has no word tokens");
    }
    return p;
}

namespace detail {

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double pop_std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

inline double structural_value(const DocProfile& p, const std::string& name) {
    const auto words = static_cast<double>(p.word_tokens);
    const auto sents = static_cast<double>(p.n_sentences);
    if (name == "avg_sentence_len_words") return safe_div(words, sents);
    if (name == "std_sentence_len_words") return pop_std_of(p.sentence_word_counts);
    if (name == "avg_word_len_chars") return safe_div(p.word_len_sum, words);
    if (name == "std_word_len_chars") {
        const double m = safe_div(p.word_len_sum, words);
        const double var = safe_div(p.word_len_sumsq, words) - m * m;
        return var > 0.0 ? std::sqrt(var) : 0.0;
    }
    if (name == "type_token_ratio") return safe_div(static_cast<double>(p.n_types), words);
    if (name == "hapax_legomena_ratio") return safe_div(static_cast<double>(p.hapax), words);
    if (name == "stopword_ratio") return safe_div(static_cast<double>(p.stopword_hits), words);
    if (name == "punct_token_ratio") {
        return safe_div(static_cast<double>(p.punct_tokens),
                        static_cast<double>(p.total_tokens));
    }
    if (name == "upper_token_ratio") return safe_div(static_cast<double>(p.upper_tokens), words);
    if (name == "digit_token_ratio") {
        return safe_div(static_cast<double>(p.numeric_tokens),
                        static_cast<double>(p.total_tokens));
    }
    if (name == "avg_sentence_len_chars") {
        return safe_div(static_cast<double>(p.nonws_chars), sents);
    }
    if (name == "long_word_ratio") return safe_div(static_cast<double>(p.long_words), words);
    throw config_error("unknown structural feature '" + name + "'");
}

// Standard readability formulas over words/sentence, syllables/word and
// character counts.
inline double index_value(const DocProfile& p, const std::string& name) {
    const auto words = static_cast<double>(p.word_tokens);
    const auto sents = static_cast<double>(p.n_sentences);
    const double wps = safe_div(words, sents);
    const double spw = safe_div(static_cast<double>(p.total_syllables),
                                static_cast<double>(p.alpha_words));
    const double cpw = safe_div(static_cast<double>(p.chars_in_words), words);
    if (name == "flesch_reading_ease") return 206.835 - 1.015 * wps - 84.6 * spw;
    if (name == "flesch_kincaid_grade") return 0.39 * wps + 11.8 * spw - 15.59;
    if (name == "gunning_fog") {
        return 0.4 * (wps + 100.0 * safe_div(static_cast<double>(p.complex_words), words));
    }
    if (name == "smog") {
        return 1.0430 * std::sqrt(static_cast<double>(p.complex_words) * 30.0 / sents) +
               3.1291;
    }
    if (name == "ari") return 4.71 * cpw + 0.5 * wps - 21.43;
    if (name == "coleman_liau") {
        const double L = 100.0 * safe_div(static_cast<double>(p.alpha_chars), words);
        const double S = 100.0 * safe_div(sents, words);
        return 0.0588 * L - 0.296 * S - 15.8;
    }
    if (name == "syllables_per_word") return spw;
    throw config_error("unknown readability index '" + name + "'");
}

} // namespace detail

inline double extract_one(const DocProfile& p, const FeatureSpec& spec) {
    const auto colon = spec.extractor.find(':');
    if (colon == std::string::npos) {
        throw config_error("malformed extractor '" + spec.extractor + "'");
    }
    const std::string_view kind(spec.extractor.data(), colon);
    const std::string arg = spec.extractor.substr(colon + 1);
    if (kind == "letter") {
        return safe_div(static_cast<double>(p.letter_counts[arg[0] - 'a']),
                        static_cast<double>(p.alpha_chars));
    }
    if (kind == "digit") {
        return safe_div(static_cast<double>(p.digit_counts[arg[0] - '0']),
                        static_cast<double>(p.nonws_chars));
    }
    if (kind == "punct") {
        auto it = p.punct_counts.find(arg[0]);
        const double n = it == p.punct_counts.end() ? 0.0 : static_cast<double>(it->second);
        return safe_div(n, static_cast<double>(p.nonws_chars));
    }
    if (kind == "fw") {
        auto it = p.fw_counts.find(arg);
        const double n = it == p.fw_counts.end() ? 0.0 : static_cast<double>(it->second);
        return safe_div(n, static_cast<double>(p.word_tokens));
    }
    if (kind == "tag") {
        for (int i = 0; i < kNumPosTags; ++i) {
            if (pos_tag_names()[i] == arg) {
                return safe_div(static_cast<double>(p.tag_counts[i]),
                                static_cast<double>(p.total_tokens));
            }
        }
        throw config_error("unknown tag '" + arg + "'");
    }
    if (kind == "ner") {
        for (int i = 0; i < kNumNerLabels; ++i) {
            if (ner_label_names()[i] == arg) {
                return safe_div(static_cast<double>(p.ner_counts[i]),
                                static_cast<double>(p.total_tokens));
            }
        }
        throw config_error("unknown ner label '" + arg + "'");
    }
    if (kind == "struct") return detail::structural_value(p, arg);
    if (kind == "index") return detail::index_value(p, arg);
    throw config_error("unknown extractor kind in '" + spec.extractor + "'");
}

inline StyleVector extract_features(const Document& doc, const FeatureInventory& inv) {
    const DocProfile p = compute_profile(doc);
    StyleVector v;
    v.values.reserve(inv.dim());
    for (const auto& spec : inv.entries) {
        const double x = extract_one(p, spec);
        if (!std::isfinite(x)) {
            throw error("non-finite feature '" + spec.name + "' for document '" +
                        doc.doc_id + "'");
        }
        v.values.push_back(x);
    }
    return v;
}

// Extraction is pure per document; rows are written to disjoint slots so the
// result is independent of the thread count.
inline Mat extract_matrix(const Corpus& corpus, const FeatureInventory& inv,
                          unsigned n_threads = 1) {
    const std::size_t n = corpus.documents.size();
    Mat out(n, inv.dim());
    if (n_threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) {
            const StyleVector v = extract_features(corpus.documents[i], inv);
            std::copy(v.values.begin(), v.values.end(), out.row(i).begin());
        }
        return out;
    }
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex err_mu;
    const unsigned workers = std::min<unsigned>(n_threads, static_cast<unsigned>(n));
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) {
                    const StyleVector v = extract_features(corpus.documents[i], inv);
                    std::copy(v.values.begin(), v.values.end(), out.row(i).begin());
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

// Per-column z-scoring. Zero-variance columns map to exactly 0 and are
// recorded in the mask; masked axes are excluded from correlation reports.
struct Standardizer {
    std::vector<double> means;
    std::vector<double> stds;
    std::vector<std::uint8_t> mask; // 1 = zero-variance column

    std::size_t dim() const { return means.size(); }

    std::size_t masked_count() const {
        std::size_t n = 0;
        for (auto m : mask) n += m;
        return n;
    }

    void transform_inplace(std::span<double> v) const {
        if (v.size() != means.size()) {
            throw error("standardize: dimension mismatch");
        }
        for (std::size_t j = 0; j < v.size(); ++j) {
            v[j] = mask[j] ? 0.0 : (v[j] - means[j]) / stds[j];
        }
    }

    StyleVector transform(const StyleVector& v) const {
        StyleVector out = v;
        transform_inplace(out.values);
        out.standardized = true;
        return out;
    }

    Mat transform(const Mat& m) const {
        Mat out = m;
        for (std::size_t i = 0; i < out.rows; ++i) {
            transform_inplace(out.row(i));
        }
        return out;
    }
};

inline Standardizer fit_standardizer(const Mat& x) {
    if (x.rows < 2) {
        throw error("fit_standardizer: need at least 2 vectors");
    }
    Standardizer s;
    s.means.assign(x.cols, 0.0);
    s.stds.assign(x.cols, 0.0);
    s.mask.assign(x.cols, 0);
    const double n = static_cast<double>(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < x.cols; ++j) {
            s.means[j] += x(i, j);
        }
    }
    for (std::size_t j = 0; j < x.cols; ++j) s.means[j] /= n;
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double d = x(i, j) - s.means[j];
            s.stds[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < x.cols; ++j) {
        s.stds[j] = std::sqrt(s.stds[j] / n); // population std
        if (s.stds[j] <= 1e-12) {
            s.mask[j] = 1;
            s.stds[j] = 1.0; // unused, keeps transform division safe
        }
    }
    return s;
}

// --- feature matrix persistence ---

inline std::uint64_t corpus_content_key(const Corpus& c) {
    std::uint64_t h = kFnvOffset;
    for (const auto& d : c.documents) {
        h = fnv1a64(d.doc_id, h);
        for (const auto& s : d.sentences) {
            h = fnv1a64(s, h);
        }
    }
    return h;
}

inline void write_features_csv(const std::filesystem::path& path,
                               const FeatureInventory& inv,
                               const Corpus& corpus, const Mat& feats) {
    std::ofstream out(path);
    if (!out) {
        throw error("cannot write feature CSV: " + path.string());
    }
    out << "doc_id";
    for (const auto& e : inv.entries) out << ',' << e.name;
    out << '\n';
    char buf[32];
    for (std::size_t i = 0; i < feats.rows; ++i) {
        out << corpus.documents[i].doc_id;
        for (std::size_t j = 0; j < feats.cols; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", feats(i, j));
            out << ',' << buf;
        }
        out << '\n';
    }
}

inline constexpr char kFeatureCacheMagic[8] = {'V', 'A', 'D', 'E', 'S', 'F', 'T', 'C'};

inline void write_feature_cache(const std::filesystem::path& path,
                                std::uint64_t corpus_key,
                                const FeatureInventory& inv, const Mat& feats) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw error("cannot write feature cache: " + path.string());
    }
    out.write(kFeatureCacheMagic, 8);
    write_le<std::uint32_t>(out, 1u);
    write_le<std::uint64_t>(out, corpus_key);
    write_le<std::uint64_t>(out, inv.content_hash());
    write_le<std::uint64_t>(out, feats.rows);
    write_le<std::uint64_t>(out, feats.cols);
    write_f64s(out, feats.data(), feats.size());
}

// Returns false when the cache is absent or keyed to different content.
inline bool read_feature_cache(const std::filesystem::path& path,
                               std::uint64_t corpus_key,
                               const FeatureInventory& inv, Mat& feats) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kFeatureCacheMagic, 8) != 0) return false;
    if (read_le<std::uint32_t>(in) != 1u) return false;
    if (read_le<std::uint64_t>(in) != corpus_key) return false;
    if (read_le<std::uint64_t>(in) != inv.content_hash()) return false;
    const auto rows = read_le<std::uint64_t>(in);
    const auto cols = read_le<std::uint64_t>(in);
    feats = Mat(rows, cols);
    read_f64s(in, feats.data(), feats.size());
    return true;
}

} // namespace vades
