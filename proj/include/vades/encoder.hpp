#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "vades/corpus.hpp"
#include "vades/nn.hpp"

namespace vades {

inline constexpr const char* kHashVersion = "fnv1a64/1";

struct EncoderConfig {
    enum class Kind { Builtin, External };
    Kind kind = Kind::Builtin;
    std::size_t r0 = 128;
    std::size_t hash_buckets = 1u << 17;
    std::vector<int> ngram_orders = {1, 2};
    std::string external_path; // external mode only

    nlohmann::json to_json() const {
        return {{"kind", kind == Kind::Builtin ? "builtin" : "external"},
                {"r0", r0},
                {"hash_buckets", hash_buckets},
                {"ngram_orders", ngram_orders},
                {"external_path", external_path},
                {"hash_version", kHashVersion}};
    }

    static EncoderConfig from_json(const nlohmann::json& j) {
        EncoderConfig c;
        c.kind = j.at("kind").get<std::string>() == "external" ? Kind::External
                                                               : Kind::Builtin;
        c.r0 = j.at("r0").get<std::size_t>();
        c.hash_buckets = j.at("hash_buckets").get<std::size_t>();
        c.ngram_orders = j.at("ngram_orders").get<std::vector<int>>();
        c.external_path = j.at("external_path").get<std::string>();
        if (j.at("hash_version").get<std::string>() != kHashVersion) {
            throw config_error("encoder hash version mismatch");
        }
        return c;
    }
};

// Hashed token n-gram bucket ids for one document (lowercased tokens,
// n-grams joined with 0x1f). Computed once per document and reused.
inline std::vector<std::uint32_t> doc_ngram_ids(const std::vector<std::string>& tokens,
                                                const EncoderConfig& cfg) {
    std::vector<std::string> low;
    low.reserve(tokens.size());
    for (const auto& t : tokens) {
        std::string s;
        s.reserve(t.size());
        for (unsigned char c : t) s.push_back(detail::lower(c));
        low.push_back(std::move(s));
    }
    std::vector<std::uint32_t> ids;
    for (int order : cfg.ngram_orders) {
        if (order < 1) {
            throw config_error("n-gram order must be >= 1");
        }
        const auto n = static_cast<std::size_t>(order);
        if (low.size() < n) continue;
        for (std::size_t i = 0; i + n <= low.size(); ++i) {
            std::uint64_t h = kFnvOffset;
            for (std::size_t k = 0; k < n; ++k) {
                h = fnv1a64(low[i + k], h);
                h = fnv1a64(std::string_view("\x1f", 1), h);
            }
            ids.push_back(static_cast<std::uint32_t>(h % cfg.hash_buckets));
        }
    }
    return ids;
}

// Trainable averaging encoder: d0 = mean of the table rows addressed by the
// document's n-grams.
struct EmbeddingTable {
    Mat rows;  // buckets x r0
    Mat grows; // gradient buffer

    EmbeddingTable() = default;
    EmbeddingTable(std::size_t buckets, std::size_t r0)
        : rows(buckets, r0), grows(buckets, r0) {}

    void init(Rng& rng, double scale = 0.1) {
        for (auto& x : rows.a) x = scale * rng.gaussian();
    }

    void forward(const std::vector<std::uint32_t>& ids, std::span<double> d0) const {
        if (ids.empty()) {
            throw error("encode: document has no tokens");
        }
        std::fill(d0.begin(), d0.end(), 0.0);
        for (auto id : ids) {
            const double* r = rows.data() + static_cast<std::size_t>(id) * rows.cols;
            for (std::size_t j = 0; j < d0.size(); ++j) d0[j] += r[j];
        }
        const double inv_n = 1.0 / static_cast<double>(ids.size());
        for (auto& x : d0) x *= inv_n;
    }

    void backward(const std::vector<std::uint32_t>& ids, std::span<const double> grad_d0) {
        const double inv_n = 1.0 / static_cast<double>(ids.size());
        for (auto id : ids) {
            double* g = grows.data() + static_cast<std::size_t>(id) * grows.cols;
            for (std::size_t j = 0; j < grad_d0.size(); ++j) {
                g[j] += grad_d0[j] * inv_n;
            }
        }
    }
};

// Precomputed frozen vectors, one per document id. Two formats: a header
// line "dim=<r0>" followed by "<doc_id>\t<v0> <v1> ..." rows, or JSONL
// records {"id": ..., "vector": [...]}.
struct ExternalVectors {
    std::unordered_map<std::string, std::vector<double>> vectors;
    std::size_t dim = 0;

    const std::vector<double>& get(const std::string& doc_id) const {
        auto it = vectors.find(doc_id);
        if (it == vectors.end()) {
            throw error("external vectors: missing doc_id '" + doc_id + "'");
        }
        return it->second;
    }
};

inline ExternalVectors load_external_vectors(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw config_error("cannot open external vectors file: " + path.string());
    }
    ExternalVectors ext;
    std::string line;
    std::size_t line_no = 0;
    bool jsonl = false;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line[0] == '{') {
                jsonl = true;
            } else if (line.rfind("dim=", 0) == 0) {
                ext.dim = std::stoull(line.substr(4));
                if (ext.dim == 0) {
                    throw config_error("external vectors: dim must be positive");
                }
                continue;
            } else {
                throw config_error(
                    "external vectors: first line must be 'dim=<r0>' or a JSONL record");
            }
        }
        std::string id;
        std::vector<double> vec;
        if (jsonl) {
            nlohmann::json rec;
            try {
                rec = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw config_error(path.string() + ":" + std::to_string(line_no) +
                                   ": invalid JSON: " + e.what());
            }
            id = rec.at("id").get<std::string>();
            vec = rec.at("vector").get<std::vector<double>>();
        } else {
            const auto tab = line.find('\t');
            if (tab == std::string::npos) {
                throw config_error(path.string() + ":" + std::to_string(line_no) +
                                   ": expected '<doc_id>\\t<floats...>'");
            }
            id = line.substr(0, tab);
            std::istringstream ss(line.substr(tab + 1));
            double x;
            while (ss >> x) vec.push_back(x);
        }
        if (ext.dim == 0) {
            ext.dim = vec.size();
        } else if (vec.size() != ext.dim) {
            throw config_error(path.string() + ":" + std::to_string(line_no) +
                               ": vector for '" + id + "' has dimension " +
                               std::to_string(vec.size()) + ", expected " +
                               std::to_string(ext.dim));
        }
        ext.vectors[id] = std::move(vec);
    }
    if (ext.vectors.empty()) {
        throw config_error("external vectors file is empty: " + path.string());
    }
    return ext;
}

// Every document in the corpus must have a vector; reports all missing ids.
inline void validate_external_coverage(const ExternalVectors& ext, const Corpus& corpus) {
    std::string missing;
    std::size_t n_missing = 0;
    for (const auto& d : corpus.documents) {
        if (!ext.vectors.count(d.doc_id)) {
            ++n_missing;
            if (n_missing <= 10) {
                if (!missing.empty()) missing += ", ";
                missing += d.doc_id;
            }
        }
    }
    if (n_missing > 0) {
        throw config_error("external vectors missing " + std::to_string(n_missing) +
                           " document(s): " + missing +
                           (n_missing > 10 ? ", ..." : ""));
    }
}

} // namespace vades
