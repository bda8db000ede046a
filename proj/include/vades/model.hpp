#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "vades/encoder.hpp"
#include "vades/nn.hpp"
#include "vades/stylometry.hpp"

namespace vades {

struct GaussianEmbedding {
    std::vector<double> mu;
    std::vector<double> var;
};

// mean of the variance entries, the uncertainty summary used in reports
inline double variance_norm(const GaussianEmbedding& e) {
    double s = 0.0;
    for (double v : e.var) s += v;
    return e.var.empty() ? 0.0 : s / static_cast<double>(e.var.size());
}

// z = mu + sqrt(var) ⊙ eps
inline std::vector<double> sample_z(std::span<const double> mu,
                                    std::span<const double> var,
                                    std::span<const double> eps) {
    std::vector<double> z(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        z[i] = mu[i] + std::sqrt(var[i]) * eps[i];
    }
    return z;
}

// q(y=1 | z1, z2) = sigmoid(-c * ||z1 - z2|| + e), strictly decreasing in
// the distance for c > 0
inline double pair_prob(std::span<const double> z1, std::span<const double> z2,
                        double c, double e) {
    if (z1.size() != z2.size()) {
        throw error("pair_prob: dimension mismatch");
    }
    if (!(c > 0.0)) {
        throw error("pair_prob: scale c must be positive");
    }
    return sigmoid(-c * std::sqrt(squared_distance(z1, z2)) + e);
}

struct TrainConfig {
    double alpha = 0.5;
    double beta = 1e-12;
    int negatives = 10;  // k
    int mc_samples = 10; // L
    double lr = 1e-3;
    int epochs = 15;
    int batch_size = 256;
    double dropout = 0.2;
    double weight_decay = 1e-5;
    std::uint64_t seed = 42;
    bool no_vib = false;
    enum class FeatureLoss { CrossEntropy, L2 };
    FeatureLoss feature_loss = FeatureLoss::CrossEntropy;
    bool freeze_contrastive = false;
    std::size_t max_sentences = 200;

    void validate() const {
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw config_error("alpha must be in [0,1]");
        if (!(beta >= 0.0)) throw config_error("beta must be >= 0");
        if (negatives < 1) throw config_error("negatives must be >= 1");
        if (mc_samples < 1) throw config_error("mc-samples must be >= 1");
        if (!(lr > 0.0)) throw config_error("lr must be positive");
        if (epochs < 0) throw config_error("epochs must be >= 0");
        if (batch_size < 1) throw config_error("batch-size must be >= 1");
        if (!(dropout >= 0.0 && dropout < 1.0)) throw config_error("dropout must be in [0,1)");
        if (!(weight_decay >= 0.0)) throw config_error("weight-decay must be >= 0");
        if (max_sentences == 0) throw config_error("max-sentences must be positive");
    }

    nlohmann::json to_json() const {
        return {{"alpha", alpha},
                {"beta", beta},
                {"negatives", negatives},
                {"mc_samples", mc_samples},
                {"lr", lr},
                {"epochs", epochs},
                {"batch_size", batch_size},
                {"dropout", dropout},
                {"weight_decay", weight_decay},
                {"seed", seed},
                {"no_vib", no_vib},
                {"feature_loss", feature_loss == FeatureLoss::L2 ? "l2" : "cross-entropy"},
                {"freeze_contrastive", freeze_contrastive},
                {"max_sentences", max_sentences}};
    }

    static TrainConfig from_json(const nlohmann::json& j) {
        TrainConfig c;
        c.alpha = j.at("alpha").get<double>();
        c.beta = j.at("beta").get<double>();
        c.negatives = j.at("negatives").get<int>();
        c.mc_samples = j.at("mc_samples").get<int>();
        c.lr = j.at("lr").get<double>();
        c.epochs = j.at("epochs").get<int>();
        c.batch_size = j.at("batch_size").get<int>();
        c.dropout = j.at("dropout").get<double>();
        c.weight_decay = j.at("weight_decay").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.no_vib = j.at("no_vib").get<bool>();
        c.feature_loss = j.at("feature_loss").get<std::string>() == "l2"
                             ? FeatureLoss::L2
                             : FeatureLoss::CrossEntropy;
        c.freeze_contrastive = j.at("freeze_contrastive").get<bool>();
        c.max_sentences = j.at("max_sentences").get<std::size_t>();
        return c;
    }
};

// Scales are stored pre-softplus so c_a, c_f stay positive under
// unconstrained updates. Layout: [c_author_raw, e_author, c_feature_raw,
// e_feature].
struct ContrastiveParams {
    std::array<double, 4> v{};
    std::array<double, 4> g{};

    void init(double c = 1.0, double e = 1.0) {
        v = {inv_softplus(c), e, inv_softplus(c), e};
        g = {0.0, 0.0, 0.0, 0.0};
    }

    double c_author() const { return softplus(v[0]); }
    double e_author() const { return v[1]; }
    double c_feature() const { return softplus(v[2]); }
    double e_feature() const { return v[3]; }
};

// Two-layer head (r0 -> r0 tanh + batchnorm + dropout -> r linear), used for
// both f (document mean) and g (document log-variance).
struct DocHeads {
    DenseLayer l1;
    BatchNorm bn;
    DenseLayer l2;

    DocHeads() = default;
    DocHeads(std::size_t r0, std::size_t r) : l1(r0, r0), bn(r0), l2(r, r0) {}

    void init(Rng& rng) {
        l1.init_xavier(rng);
        l2.init_xavier(rng);
    }
};

struct HeadCache {
    Mat x, h1, a1, z1;
    BatchNorm::Cache bn;
    Mat mask; // empty when dropout is off
    bool bn_training = false;
};

inline Mat head_forward(DocHeads& heads, const Mat& x, bool bn_training,
                        double dropout_p, Rng* dropout_rng, HeadCache& c) {
    c.x = x;
    c.bn_training = bn_training;
    heads.l1.forward(x, c.h1);
    c.a1 = c.h1;
    for (auto& v : c.a1.a) v = std::tanh(v);
    if (bn_training) {
        heads.bn.forward_train(c.a1, c.z1, c.bn);
    } else {
        heads.bn.forward_infer(c.a1, c.z1);
    }
    if (dropout_p > 0.0 && dropout_rng != nullptr) {
        c.mask = Mat(c.z1.rows, c.z1.cols);
        dropout_mask(c.mask, dropout_p, *dropout_rng);
        apply_mask(c.z1, c.mask);
    } else {
        c.mask = Mat();
    }
    Mat out;
    heads.l2.forward(c.z1, out);
    return out;
}

inline Mat head_backward(DocHeads& heads, HeadCache& c, const Mat& d_out) {
    Mat dz1;
    heads.l2.backward(c.z1, d_out, dz1);
    if (c.mask.size() > 0) {
        apply_mask(dz1, c.mask);
    }
    Mat da1;
    if (c.bn_training) {
        heads.bn.backward_train(c.bn, dz1, da1);
    } else {
        heads.bn.backward_infer(c.a1, dz1, da1);
    }
    for (std::size_t i = 0; i < da1.size(); ++i) {
        da1.a[i] *= 1.0 - c.a1.a[i] * c.a1.a[i]; // tanh'
    }
    Mat dx;
    heads.l1.backward(c.x, da1, dx);
    return dx;
}

struct VadesModel {
    FeatureInventory inventory;
    Standardizer standardizer;
    std::vector<std::string> author_ids; // sorted; row order of the tables
    std::unordered_map<std::string, std::size_t> author_index;

    Mat author_mu, author_logvar;
    Mat g_author_mu, g_author_logvar;
    DocHeads f, g;
    ContrastiveParams cp;
    EncoderConfig enc_cfg;
    EmbeddingTable table;   // builtin encoder
    ExternalVectors ext;    // external encoder

    std::size_t r() const { return inventory.dim(); }
    std::size_t r0() const { return enc_cfg.r0; }
    std::size_t n_authors() const { return author_ids.size(); }

    void allocate(std::vector<std::string> authors, FeatureInventory inv,
                  Standardizer std_, EncoderConfig enc) {
        inventory = std::move(inv);
        standardizer = std::move(std_);
        author_ids = std::move(authors);
        std::sort(author_ids.begin(), author_ids.end());
        author_index.clear();
        for (std::size_t i = 0; i < author_ids.size(); ++i) {
            author_index[author_ids[i]] = i;
        }
        enc_cfg = std::move(enc);
        const std::size_t a = author_ids.size(), rr = r(), rr0 = r0();
        author_mu = Mat(a, rr);
        author_logvar = Mat(a, rr);
        g_author_mu = Mat(a, rr);
        g_author_logvar = Mat(a, rr);
        f = DocHeads(rr0, rr);
        g = DocHeads(rr0, rr);
        if (enc_cfg.kind == EncoderConfig::Kind::Builtin) {
            table = EmbeddingTable(enc_cfg.hash_buckets, rr0);
        }
    }

    void setup(std::vector<std::string> authors, FeatureInventory inv,
               Standardizer std_, EncoderConfig enc, Rng& rng) {
        allocate(std::move(authors), std::move(inv), std::move(std_), std::move(enc));
        init_params(rng);
    }

    // author mu ~ N(0, 0.01), log var = 0, heads Xavier, c = e = 1
    void init_params(Rng& rng) {
        for (auto& x : author_mu.a) x = 0.1 * rng.gaussian();
        author_logvar.zero();
        f.init(rng);
        g.init(rng);
        cp.init(1.0, 1.0);
        if (enc_cfg.kind == EncoderConfig::Kind::Builtin) {
            table.init(rng, 0.1);
        }
    }

    std::vector<ParamRef> collect_params(bool include_frozen_contrastive = true) {
        std::vector<ParamRef> p;
        auto add = [&p](const std::string& name, double* v, double* g_, std::size_t n) {
            p.push_back({name, v, g_, n});
        };
        add("author_mu", author_mu.data(), g_author_mu.data(), author_mu.size());
        add("author_logvar", author_logvar.data(), g_author_logvar.data(),
            author_logvar.size());
        for (auto [heads, tag] : {std::pair{&f, "f"}, std::pair{&g, "g"}}) {
            const std::string t(tag);
            add(t + ".l1.w", heads->l1.w.data(), heads->l1.gw.data(), heads->l1.w.size());
            add(t + ".l1.b", heads->l1.b.data(), heads->l1.gb.data(), heads->l1.b.size());
            add(t + ".bn.gamma", heads->bn.gamma.data(), heads->bn.ggamma.data(),
                heads->bn.gamma.size());
            add(t + ".bn.beta", heads->bn.beta.data(), heads->bn.gbeta.data(),
                heads->bn.beta.size());
            add(t + ".l2.w", heads->l2.w.data(), heads->l2.gw.data(), heads->l2.w.size());
            add(t + ".l2.b", heads->l2.b.data(), heads->l2.gb.data(), heads->l2.b.size());
        }
        if (include_frozen_contrastive) {
            add("contrastive", cp.v.data(), cp.g.data(), 4);
        }
        if (enc_cfg.kind == EncoderConfig::Kind::Builtin) {
            add("encoder_table", table.rows.data(), table.grows.data(), table.rows.size());
        }
        return p;
    }

    void zero_grads() {
        g_author_mu.zero();
        g_author_logvar.zero();
        for (DocHeads* h : {&f, &g}) {
            h->l1.gw.zero();
            std::fill(h->l1.gb.begin(), h->l1.gb.end(), 0.0);
            std::fill(h->bn.ggamma.begin(), h->bn.ggamma.end(), 0.0);
            std::fill(h->bn.gbeta.begin(), h->bn.gbeta.end(), 0.0);
            h->l2.gw.zero();
            std::fill(h->l2.gb.begin(), h->l2.gb.end(), 0.0);
        }
        cp.g = {0.0, 0.0, 0.0, 0.0};
        if (enc_cfg.kind == EncoderConfig::Kind::Builtin) {
            table.grows.zero();
        }
    }

    // inference-mode document Gaussian: dropout off, batchnorm running stats
    GaussianEmbedding doc_gaussian(std::span<const double> d0) {
        Mat x(1, r0());
        std::copy(d0.begin(), d0.end(), x.row(0).begin());
        HeadCache fc, gc;
        Mat mu = head_forward(f, x, false, 0.0, nullptr, fc);
        Mat logvar = head_forward(g, x, false, 0.0, nullptr, gc);
        GaussianEmbedding e;
        e.mu.assign(mu.row(0).begin(), mu.row(0).end());
        e.var.resize(r());
        for (std::size_t i = 0; i < r(); ++i) {
            e.var[i] = std::exp(logvar(0, i));
            if (!std::isfinite(e.mu[i]) || !std::isfinite(e.var[i])) {
                throw error("doc_gaussian: non-finite output");
            }
        }
        return e;
    }

    std::vector<double> encode_tokens(const std::vector<std::string>& tokens) const {
        if (enc_cfg.kind != EncoderConfig::Kind::Builtin) {
            throw error("encode_tokens: model uses an external encoder; "
                        "provide precomputed vectors instead");
        }
        const auto ids = doc_ngram_ids(tokens, enc_cfg);
        std::vector<double> d0(r0());
        table.forward(ids, d0);
        return d0;
    }

    // full pipeline for unseen text: tokenize -> truncate -> encode -> heads
    GaussianEmbedding infer_document(const std::string& text,
                                     std::size_t max_sentences = 200) {
        TokenizedText t = tokenize(text);
        if (t.sentences.empty()) {
            throw config_error("empty document");
        }
        Document d;
        d.doc_id = "<inline>";
        d.sentences = std::move(t.sentences);
        d = truncate_sentences(std::move(d), max_sentences);
        std::vector<std::string> tokens;
        for (const auto& s : d.sentences) {
            tokenize_words(s, tokens);
        }
        if (tokens.empty()) {
            throw config_error("empty document");
        }
        return doc_gaussian(encode_tokens(tokens));
    }

    GaussianEmbedding author_embedding(const std::string& author_id) const {
        auto it = author_index.find(author_id);
        if (it == author_index.end()) {
            throw error("unknown author '" + author_id + "'");
        }
        GaussianEmbedding e;
        const auto row = it->second;
        e.mu.assign(author_mu.row(row).begin(), author_mu.row(row).end());
        e.var.resize(r());
        for (std::size_t i = 0; i < r(); ++i) {
            e.var[i] = std::exp(author_logvar(row, i));
        }
        return e;
    }
};

// Per-document training inputs, indexed by position in the train split.
struct TrainData {
    std::vector<std::string> doc_ids;
    std::vector<std::uint32_t> doc_author;              // author table row
    std::vector<std::vector<std::uint32_t>> doc_ngrams; // builtin encoder
    Mat doc_d0;                                          // external encoder, frozen
    Mat features_std;                                    // standardized z_d^f

    std::size_t n_docs() const { return doc_author.size(); }
};

// One positive (author, doc) pair plus its sampled negatives.
struct PairBatch {
    struct Entry {
        std::uint32_t doc = 0;
        std::uint32_t author = 0;
        std::vector<std::uint32_t> neg_authors;
        std::vector<std::uint32_t> neg_docs;
    };
    std::vector<Entry> entries;
};

// Draws k author negatives (a' != a) and k feature negatives (d' != d) per
// positive pair, uniformly without replacement when possible.
inline PairBatch build_batch(const TrainData& data, std::span<const std::uint32_t> docs,
                             std::size_t n_authors, int k, Rng& rng) {
    if (n_authors < 2) {
        throw error("build_batch: cannot sample author negatives with a single author");
    }
    if (data.n_docs() < 2) {
        throw error("build_batch: cannot sample feature negatives with a single document");
    }
    PairBatch batch;
    batch.entries.reserve(docs.size());
    for (auto d : docs) {
        PairBatch::Entry e;
        e.doc = d;
        e.author = data.doc_author[d];
        e.neg_authors = rng.sample_excluding(static_cast<std::uint32_t>(n_authors),
                                             static_cast<std::uint32_t>(k), e.author);
        e.neg_docs = rng.sample_excluding(static_cast<std::uint32_t>(data.n_docs()),
                                          static_cast<std::uint32_t>(k), d);
        batch.entries.push_back(std::move(e));
    }
    return batch;
}

// Gaussian noise for the reparametrized draws. Record/Replay let the
// gradient checker evaluate the loss repeatedly with frozen noise.
class NoiseSource {
public:
    enum class Mode { Draw, Record, Replay, Zero };

    NoiseSource(Mode mode, Rng* rng) : mode_(mode), rng_(rng) {}

    void fill(double* out, std::size_t n) {
        switch (mode_) {
            case Mode::Draw:
                rng_->fill_gaussian(out, n);
                break;
            case Mode::Record:
                rng_->fill_gaussian(out, n);
                buf_.insert(buf_.end(), out, out + n);
                break;
            case Mode::Replay:
                if (pos_ + n > buf_.size()) {
                    throw error("noise replay exhausted");
                }
                std::copy(buf_.begin() + static_cast<std::ptrdiff_t>(pos_),
                          buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + n), out);
                pos_ += n;
                break;
            case Mode::Zero:
                std::fill(out, out + n, 0.0);
                break;
        }
    }

    void start_replay() {
        mode_ = Mode::Replay;
        pos_ = 0;
    }

    void rewind() { pos_ = 0; }

private:
    Mode mode_;
    Rng* rng_ = nullptr;
    std::vector<double> buf_;
    std::size_t pos_ = 0;
};

struct LossBreakdown {
    double author = 0.0;  // -mean log q over author pairs
    double feature = 0.0; // -mean log q over feature pairs (or mean L2)
    double kl = 0.0;      // unweighted KL term
    double total = 0.0;   // (1-alpha)*author + alpha*feature + beta*kl
    bool has_kl = false;
};

struct LossInputs {
    const TrainData* data = nullptr;
    const PairBatch* batch = nullptr;
    const TrainConfig* cfg = nullptr;
    NoiseSource* noise = nullptr;
    Rng* dropout_rng = nullptr; // nullptr -> dropout off
    bool bn_training = false;
    bool with_grads = false;
};

// Eq. 5 estimated with L reparametrized draws per pair (Eq. 6), fresh eps
// per entity per draw per pair. Positive pairs contribute log q, negatives
// log(1-q). KL terms average over the entities actually drawn: an inactive
// side (alpha at 0 or 1) drops out of the loss and of the KL average, so
// alpha = 1 leaves the author table untouched. no_vib forces L = 1, eps = 0
// and omits the KL term entirely.
inline LossBreakdown compute_loss(VadesModel& model, const LossInputs& in,
                                  HeadCache* fc_out = nullptr, HeadCache* gc_out = nullptr) {
    const TrainConfig& cfg = *in.cfg;
    const TrainData& data = *in.data;
    const PairBatch& batch = *in.batch;
    const std::size_t r = model.r();
    const std::size_t r0 = model.r0();
    const bool builtin = model.enc_cfg.kind == EncoderConfig::Kind::Builtin;
    const bool author_side = cfg.alpha < 1.0;
    const bool feature_side = cfg.alpha > 0.0;
    const bool l2_features = cfg.feature_loss == TrainConfig::FeatureLoss::L2;
    const int draws = cfg.no_vib ? 1 : cfg.mc_samples;

    if (batch.entries.empty()) {
        throw error("compute_loss: empty batch");
    }

    // local row index per unique batch document
    std::vector<std::uint32_t> batch_docs;
    std::unordered_map<std::uint32_t, std::size_t> doc_local;
    for (const auto& e : batch.entries) {
        if (doc_local.emplace(e.doc, batch_docs.size()).second) {
            batch_docs.push_back(e.doc);
        }
    }
    const std::size_t nd = batch_docs.size();

    Mat x(nd, r0);
    for (std::size_t i = 0; i < nd; ++i) {
        if (builtin) {
            model.table.forward(data.doc_ngrams[batch_docs[i]], x.row(i));
        } else {
            const auto src = data.doc_d0.row(batch_docs[i]);
            std::copy(src.begin(), src.end(), x.row(i).begin());
        }
    }

    HeadCache fc_local, gc_local;
    HeadCache& fc = fc_out ? *fc_out : fc_local;
    HeadCache& gc = gc_out ? *gc_out : gc_local;
    Mat mu_d = head_forward(model.f, x, in.bn_training, cfg.dropout, in.dropout_rng, fc);
    Mat logvar_d = head_forward(model.g, x, in.bn_training, cfg.dropout, in.dropout_rng, gc);

    Mat sigma_d(nd, r), var_d(nd, r);
    for (std::size_t i = 0; i < nd * r; ++i) {
        if (!std::isfinite(mu_d.a[i]) || !std::isfinite(logvar_d.a[i])) {
            throw error("compute_loss: non-finite document head output");
        }
        var_d.a[i] = std::exp(logvar_d.a[i]);
        sigma_d.a[i] = std::exp(0.5 * logvar_d.a[i]);
    }

    // unique authors with precomputed sigma
    std::vector<std::uint32_t> batch_authors;
    std::unordered_map<std::uint32_t, std::size_t> author_local;
    if (author_side) {
        for (const auto& e : batch.entries) {
            if (author_local.emplace(e.author, batch_authors.size()).second) {
                batch_authors.push_back(e.author);
            }
            for (auto a : e.neg_authors) {
                if (author_local.emplace(a, batch_authors.size()).second) {
                    batch_authors.push_back(a);
                }
            }
        }
    }
    const std::size_t na = batch_authors.size();
    Mat sigma_a(na, r), var_a(na, r);
    for (std::size_t i = 0; i < na; ++i) {
        const auto row = batch_authors[i];
        for (std::size_t j = 0; j < r; ++j) {
            var_a(i, j) = std::exp(model.author_logvar(row, j));
            sigma_a(i, j) = std::exp(0.5 * model.author_logvar(row, j));
        }
    }

    Mat gmu_d(nd, r), glogvar_d(nd, r);
    const double c_author = model.cp.c_author();
    const double e_author = model.cp.e_author();
    const double c_feature = model.cp.c_feature();
    const double e_feature = model.cp.e_feature();
    double g_c_author = 0.0, g_e_author = 0.0, g_c_feature = 0.0, g_e_feature = 0.0;

    const double coef_author = 1.0 - cfg.alpha;
    const double coef_feature = cfg.alpha;
    const auto n_entries = static_cast<double>(batch.entries.size());
    const double pairs_per_entry = 1.0 + static_cast<double>(cfg.negatives);
    const double n_author_terms = n_entries * pairs_per_entry * draws;
    const double n_feature_terms =
        (l2_features ? n_entries : n_entries * pairs_per_entry) * draws;

    double author_logprob_sum = 0.0;
    double feature_sum = 0.0;

    std::vector<double> eps(r), z_a(r), z_d(r);

    for (const auto& entry : batch.entries) {
        const std::size_t di = doc_local[entry.doc];
        const double* dmu = mu_d.data() + di * r;
        const double* dsig = sigma_d.data() + di * r;
        double* dgmu = gmu_d.data() + di * r;
        double* dglv = glogvar_d.data() + di * r;

        if (author_side) {
            const double w = -coef_author / n_author_terms; // d total / d logq
            for (int p = -1; p < cfg.negatives; ++p) {
                const std::uint32_t a_row = p < 0 ? entry.author : entry.neg_authors[p];
                const bool positive = p < 0;
                const std::size_t ai = author_local[a_row];
                const double* amu = model.author_mu.data() + a_row * r;
                const double* asig = sigma_a.data() + ai * r;
                double* agmu = model.g_author_mu.data() + a_row * r;
                double* aglv = model.g_author_logvar.data() + a_row * r;
                for (int l = 0; l < draws; ++l) {
                    in.noise->fill(eps.data(), r);
                    double dist2 = 0.0;
                    for (std::size_t i = 0; i < r; ++i) {
                        z_a[i] = amu[i] + asig[i] * eps[i];
                    }
                    in.noise->fill(eps.data(), r);
                    for (std::size_t i = 0; i < r; ++i) {
                        z_d[i] = dmu[i] + dsig[i] * eps[i];
                        const double d = z_a[i] - z_d[i];
                        dist2 += d * d;
                    }
                    const double dist = std::sqrt(dist2);
                    const double s = -c_author * dist + e_author;
                    author_logprob_sum += positive ? log_sigmoid(s) : log_sigmoid(-s);
                    if (!in.with_grads) continue;
                    const double dlp_ds = positive ? sigmoid(-s) : -sigmoid(s);
                    const double gs = w * dlp_ds;
                    g_e_author += gs;
                    g_c_author -= gs * dist;
                    if (dist > 1e-12) {
                        const double gd = -gs * c_author / dist;
                        for (std::size_t i = 0; i < r; ++i) {
                            const double gz = gd * (z_a[i] - z_d[i]);
                            agmu[i] += gz;
                            aglv[i] += gz * 0.5 * (z_a[i] - amu[i]);
                            dgmu[i] -= gz;
                            dglv[i] -= gz * 0.5 * (z_d[i] - dmu[i]);
                        }
                    }
                }
            }
        }

        if (feature_side && !l2_features) {
            const double w = -coef_feature / n_feature_terms;
            for (int p = -1; p < cfg.negatives; ++p) {
                const std::uint32_t feat_doc = p < 0 ? entry.doc : entry.neg_docs[p];
                const bool positive = p < 0;
                const double* zf = data.features_std.data() + feat_doc * r;
                for (int l = 0; l < draws; ++l) {
                    in.noise->fill(eps.data(), r);
                    double dist2 = 0.0;
                    for (std::size_t i = 0; i < r; ++i) {
                        z_d[i] = dmu[i] + dsig[i] * eps[i];
                        const double d = z_d[i] - zf[i];
                        dist2 += d * d;
                    }
                    const double dist = std::sqrt(dist2);
                    const double s = -c_feature * dist + e_feature;
                    feature_sum += positive ? log_sigmoid(s) : log_sigmoid(-s);
                    if (!in.with_grads) continue;
                    const double dlp_ds = positive ? sigmoid(-s) : -sigmoid(s);
                    const double gs = w * dlp_ds;
                    g_e_feature += gs;
                    g_c_feature -= gs * dist;
                    if (dist > 1e-12) {
                        const double gd = -gs * c_feature / dist;
                        for (std::size_t i = 0; i < r; ++i) {
                            const double gz = gd * (z_d[i] - zf[i]);
                            dgmu[i] += gz;
                            dglv[i] += gz * 0.5 * (z_d[i] - dmu[i]);
                        }
                    }
                }
            }
        } else if (feature_side && l2_features) {
            // plain regression pull toward the feature vector, positives only
            const double w = coef_feature / n_feature_terms;
            const double* zf = data.features_std.data() + entry.doc * r;
            for (int l = 0; l < draws; ++l) {
                in.noise->fill(eps.data(), r);
                for (std::size_t i = 0; i < r; ++i) {
                    z_d[i] = dmu[i] + dsig[i] * eps[i];
                    const double d = z_d[i] - zf[i];
                    feature_sum += d * d;
                    if (in.with_grads) {
                        const double gz = w * 2.0 * d;
                        dgmu[i] += gz;
                        dglv[i] += gz * 0.5 * (z_d[i] - dmu[i]);
                    }
                }
            }
        }
    }

    LossBreakdown out;
    out.author = author_side ? -author_logprob_sum / n_author_terms : 0.0;
    if (feature_side) {
        out.feature = l2_features ? feature_sum / n_feature_terms
                                  : -feature_sum / n_feature_terms;
    }

    if (!cfg.no_vib) {
        out.has_kl = true;
        double kl = 0.0;
        if (author_side && na > 0) {
            const double wa = cfg.beta / static_cast<double>(na);
            double kl_a = 0.0;
            for (std::size_t i = 0; i < na; ++i) {
                const auto row = batch_authors[i];
                kl_a += kl_diag_gaussian_vs_standard(
                    model.author_mu.row(row), var_a.row(i),
                    in.with_grads ? model.g_author_mu.row(row) : std::span<double>{},
                    in.with_grads ? model.g_author_logvar.row(row) : std::span<double>{},
                    wa);
            }
            kl += kl_a / static_cast<double>(na);
        }
        {
            const double wd = cfg.beta / static_cast<double>(nd);
            double kl_d = 0.0;
            for (std::size_t i = 0; i < nd; ++i) {
                kl_d += kl_diag_gaussian_vs_standard(
                    mu_d.row(i), var_d.row(i),
                    in.with_grads ? gmu_d.row(i) : std::span<double>{},
                    in.with_grads ? glogvar_d.row(i) : std::span<double>{}, wd);
            }
            kl += kl_d / static_cast<double>(nd);
        }
        out.kl = kl;
    }

    out.total = coef_author * out.author + coef_feature * out.feature +
                (out.has_kl ? cfg.beta * out.kl : 0.0);
    if (!std::isfinite(out.total)) {
        std::string term = !std::isfinite(out.author)    ? "author"
                           : !std::isfinite(out.feature) ? "feature"
                                                         : "kl";
        throw error("compute_loss: non-finite " + term + " term");
    }

    if (in.with_grads) {
        // variance chain: d/d logvar sigma = 0.5 sigma handled above via
        // (z - mu); here the head gradients flow back in one batched pass
        model.cp.g[0] += g_c_author * sigmoid(model.cp.v[0]); // softplus'
        model.cp.g[1] += g_e_author;
        model.cp.g[2] += g_c_feature * sigmoid(model.cp.v[2]);
        model.cp.g[3] += g_e_feature;
        Mat dx_f = head_backward(model.f, fc, gmu_d);
        Mat dx_g = head_backward(model.g, gc, glogvar_d);
        for (std::size_t i = 0; i < dx_f.size(); ++i) dx_f.a[i] += dx_g.a[i];
        if (builtin) {
            for (std::size_t i = 0; i < nd; ++i) {
                model.table.backward(data.doc_ngrams[batch_docs[i]], dx_f.row(i));
            }
        }
    }
    return out;
}

struct EpochMetrics {
    int epoch = 0;
    double loss_author = 0.0;
    double loss_feature = 0.0;
    double loss_kl = 0.0;
    double total = 0.0;
    bool has_kl = false;
    double coeff_author = 0.0;
    double coeff_feature = 0.0;
};

struct TrainResult {
    std::vector<EpochMetrics> metrics;
    bool diverged = false;
    int completed_epochs = 0;
};

// One epoch = one shuffled pass over all positive (author, doc) pairs.
// Deterministic given cfg.seed and an initialized model. The per-epoch
// callback sees the model after each epoch (checkpointing hook). On a
// non-finite loss the run aborts before the optimizer step, so parameters
// stay at their last good values.
inline TrainResult train_model(
    VadesModel& model, const TrainData& data, const TrainConfig& cfg, Rng& rng,
    const std::function<void(int, const EpochMetrics&)>& on_epoch = nullptr) {
    cfg.validate();
    if (data.n_docs() == 0) {
        throw error("train: no training documents");
    }

    Adam adam;
    adam.lr = cfg.lr;
    adam.weight_decay = cfg.weight_decay;
    auto params = model.collect_params(!cfg.freeze_contrastive);
    adam.init(params);

    TrainResult result;
    std::vector<std::uint32_t> order(data.n_docs());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = static_cast<std::uint32_t>(i);
    }

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        EpochMetrics em;
        em.epoch = epoch;
        em.coeff_author = 1.0 - cfg.alpha;
        em.coeff_feature = cfg.alpha;
        em.has_kl = !cfg.no_vib;
        double weight_sum = 0.0;

        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const std::span<const std::uint32_t> docs(order.data() + start, stop - start);
            PairBatch batch = build_batch(data, docs, model.n_authors(), cfg.negatives, rng);

            model.zero_grads();
            NoiseSource noise(cfg.no_vib ? NoiseSource::Mode::Zero : NoiseSource::Mode::Draw,
                              &rng);
            LossInputs in;
            in.data = &data;
            in.batch = &batch;
            in.cfg = &cfg;
            in.noise = &noise;
            in.dropout_rng = cfg.dropout > 0.0 ? &rng : nullptr;
            in.bn_training = true;
            in.with_grads = true;
            HeadCache fc, gc;
            LossBreakdown lb;
            try {
                lb = compute_loss(model, in, &fc, &gc);
            } catch (const error&) {
                result.diverged = true;
                return result;
            }
            adam.step(params);
            model.f.bn.update_running(fc.bn);
            model.g.bn.update_running(gc.bn);

            const auto bw = static_cast<double>(docs.size());
            em.loss_author += lb.author * bw;
            em.loss_feature += lb.feature * bw;
            em.loss_kl += lb.kl * bw;
            em.total += lb.total * bw;
            weight_sum += bw;
        }
        em.loss_author /= weight_sum;
        em.loss_feature /= weight_sum;
        em.loss_kl /= weight_sum;
        em.total /= weight_sum;
        result.metrics.push_back(em);
        result.completed_epochs = epoch;
        if (on_epoch) on_epoch(epoch, em);
    }
    return result;
}

} // namespace vades
