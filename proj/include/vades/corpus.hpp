#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "vades/rng.hpp"
#include "vades/text.hpp"

namespace vades {

struct Document {
    std::string doc_id;
    std::string author_id;
    std::string raw_text;
    std::vector<std::string> sentences; // filled by preprocessing, truncated
    std::size_t token_count = 0;        // tokens over all kept sentences
};

struct Author {
    std::string author_id;
    std::vector<std::string> doc_ids;
};

struct Corpus {
    std::vector<Document> documents;
    std::vector<Author> authors; // sorted by author_id
    std::unordered_map<std::string, std::size_t> doc_index;
    std::unordered_map<std::string, std::size_t> author_index;

    const Document& doc(const std::string& id) const {
        auto it = doc_index.find(id);
        if (it == doc_index.end()) {
            throw error("unknown document id '" + id + "'");
        }
        return documents[it->second];
    }

    void rebuild_indices() {
        doc_index.clear();
        author_index.clear();
        for (std::size_t i = 0; i < documents.size(); ++i) {
            doc_index[documents[i].doc_id] = i;
        }
        for (std::size_t i = 0; i < authors.size(); ++i) {
            author_index[authors[i].author_id] = i;
        }
    }
};

enum class CorpusFormat { Jsonl, TextDir };

inline CorpusFormat parse_corpus_format(const std::string& s) {
    if (s == "jsonl") return CorpusFormat::Jsonl;
    if (s == "textdir" || s == "text-dir") return CorpusFormat::TextDir;
    throw config_error("unknown corpus format '" + s + "' (expected jsonl or textdir)");
}

namespace detail {

inline void assemble_authors(Corpus& c) {
    std::map<std::string, std::vector<std::string>> by_author;
    for (const auto& d : c.documents) {
        by_author[d.author_id].push_back(d.doc_id);
    }
    c.authors.clear();
    for (auto& [id, docs] : by_author) {
        c.authors.push_back(Author{id, std::move(docs)});
    }
    c.rebuild_indices();
}

} // namespace detail

// JSONL: one {"id", "author", "text"} object per line. Text-dir:
// <root>/<author_id>/<file>.txt with doc_id = "<author_id>/<stem>".
inline Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    namespace fs = std::filesystem;
    if (!fs::exists(path)) {
        throw config_error("corpus path does not exist: " + path.string());
    }
    Corpus c;
    if (format == CorpusFormat::Jsonl) {
        std::ifstream in(path);
        if (!in) {
            throw config_error("cannot open corpus file: " + path.string());
        }
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            nlohmann::json rec;
            try {
                rec = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw config_error(path.string() + ":" + std::to_string(line_no) +
                                   ": invalid JSON record: " + e.what());
            }
            for (const char* field : {"id", "author", "text"}) {
                if (!rec.contains(field) || !rec[field].is_string()) {
                    throw config_error(path.string() + ":" + std::to_string(line_no) +
                                       ": missing or non-string field '" +
                                       field + "'");
                }
            }
            Document d;
            d.doc_id = rec["id"].get<std::string>();
            d.author_id = rec["author"].get<std::string>();
            d.raw_text = rec["text"].get<std::string>();
            if (c.doc_index.count(d.doc_id)) {
                throw config_error(path.string() + ":" + std::to_string(line_no) +
                                   ": duplicate doc_id '" + d.doc_id + "'");
            }
            c.doc_index[d.doc_id] = c.documents.size();
            c.documents.push_back(std::move(d));
        }
    } else {
        if (!fs::is_directory(path)) {
            throw config_error("text-dir corpus must be a directory: " + path.string());
        }
        std::vector<fs::path> author_dirs;
        for (const auto& e : fs::directory_iterator(path)) {
            if (e.is_directory()) author_dirs.push_back(e.path());
        }
        std::sort(author_dirs.begin(), author_dirs.end());
        for (const auto& dir : author_dirs) {
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(dir)) {
                if (e.is_regular_file()) files.push_back(e.path());
            }
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                Document d;
                d.author_id = dir.filename().string();
                d.doc_id = d.author_id + "/" + f.stem().string();
                std::ifstream in(f, std::ios::binary);
                if (!in) {
                    throw config_error("cannot open document file: " + f.string());
                }
                std::ostringstream ss;
                ss << in.rdbuf();
                d.raw_text = ss.str();
                if (c.doc_index.count(d.doc_id)) {
                    throw config_error("duplicate doc_id '" + d.doc_id + "'");
                }
                c.doc_index[d.doc_id] = c.documents.size();
                c.documents.push_back(std::move(d));
            }
        }
    }
    if (c.documents.empty()) {
        throw config_error("empty corpus: " + path.string());
    }
    detail::assemble_authors(c);
    return c;
}

inline void save_corpus(const Corpus& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw error("cannot write corpus file: " + path.string());
    }
    for (const auto& d : c.documents) {
        nlohmann::json rec;
        rec["id"] = d.doc_id;
        rec["author"] = d.author_id;
        rec["text"] = d.raw_text;
        out << rec.dump() << '\n';
    }
}

// Keeps the first n sentences; the document must have been segmented.
inline Document truncate_sentences(Document doc, std::size_t n = 200) {
    if (doc.sentences.empty()) {
        throw error("empty document: '" + doc.doc_id + "' has no sentences");
    }
    if (doc.sentences.size() > n) {
        doc.sentences.resize(n);
    }
    doc.token_count = 0;
    for (const auto& s : doc.sentences) {
        std::vector<std::string> toks;
        tokenize_words(s, toks);
        doc.token_count += toks.size();
    }
    return doc;
}

// Sentence-segments every document and truncates. Documents that come out
// empty are rejected: training admits only nonempty documents.
inline void preprocess_corpus(Corpus& c, std::size_t max_sentences = 200) {
    for (auto& d : c.documents) {
        TokenizedText t = tokenize(d.raw_text);
        d.sentences = std::move(t.sentences);
        if (d.sentences.empty()) {
            throw config_error("empty document: '" + d.doc_id +
                               "' has no sentences after preprocessing");
        }
        d = truncate_sentences(std::move(d), max_sentences);
    }
}

struct SplitSpec {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    double ratio = 0.8;
    std::uint64_t seed = 0;
};

// Per-author allocation: test = clamp(round((1-ratio)*n), 1, n-1), documents
// shuffled within the author. Same seed gives the same split.
inline SplitSpec stratified_split(const Corpus& c, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw config_error("split ratio must be in (0,1)");
    }
    for (const auto& a : c.authors) {
        if (a.doc_ids.size() < 2) {
            throw config_error("author '" + a.author_id +
                               "' has fewer than 2 documents; cannot split");
        }
    }
    SplitSpec spec;
    spec.ratio = ratio;
    spec.seed = seed;
    Rng rng(seed);
    for (const auto& a : c.authors) { // authors already sorted by id
        std::vector<std::string> ids = a.doc_ids;
        std::sort(ids.begin(), ids.end());
        rng.shuffle(ids);
        const auto n = ids.size();
        auto n_test = static_cast<std::size_t>(
            std::lround((1.0 - ratio) * static_cast<double>(n)));
        n_test = std::max<std::size_t>(1, std::min(n_test, n - 1));
        for (std::size_t i = 0; i < n; ++i) {
            (i < n_test ? spec.test_ids : spec.train_ids).push_back(ids[i]);
        }
    }
    return spec;
}

inline void save_split(const SplitSpec& s, const std::filesystem::path& path) {
    nlohmann::json j;
    j["ratio"] = s.ratio;
    j["seed"] = s.seed;
    j["train_ids"] = s.train_ids;
    j["test_ids"] = s.test_ids;
    std::ofstream out(path);
    if (!out) {
        throw error("cannot write split file: " + path.string());
    }
    out << j.dump(2) << '\n';
}

inline SplitSpec load_split(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw config_error("cannot open split file: " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("invalid split file " + path.string() + ": " + e.what());
    }
    SplitSpec s;
    s.ratio = j.at("ratio").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.train_ids = j.at("train_ids").get<std::vector<std::string>>();
    s.test_ids = j.at("test_ids").get<std::vector<std::string>>();
    return s;
}

} // namespace vades
