#pragma once

// Small model fixtures shared by the model tests and the acceptance suite.

#include <memory>
#include <string>
#include <vector>

#include "support/synthetic.hpp"
#include "vades/pipeline.hpp"

namespace testsupport {

inline vades::FeatureInventory tiny_inventory(std::size_t r) {
    vades::FeatureInventory full = vades::default_inventory();
    vades::FeatureInventory inv;
    inv.version = "tiny-" + std::to_string(r) + "/1";
    inv.entries.assign(full.entries.begin(),
                       full.entries.begin() + static_cast<std::ptrdiff_t>(r));
    return inv;
}

inline vades::Standardizer identity_standardizer(std::size_t r) {
    vades::Standardizer s;
    s.means.assign(r, 0.0);
    s.stds.assign(r, 1.0);
    s.mask.assign(r, 0);
    return s;
}

struct TinyFixture {
    vades::VadesModel model;
    vades::TrainData data;
    vades::PairBatch batch;
    vades::TrainConfig cfg;
};

// r=8, r0=16, 3 authors, 6 documents, k=2, L=2: the configuration used for
// the full-loss gradient check. Batchnorm running statistics are made
// nontrivial so the inference-mode affine path is exercised.
inline TinyFixture make_tiny_fixture(std::uint64_t seed, double alpha = 0.4,
                                     double beta = 0.5, bool no_vib = false,
                                     int negatives = 2, int mc_samples = 2) {
    TinyFixture fx;
    fx.cfg.alpha = alpha;
    fx.cfg.beta = beta;
    fx.cfg.negatives = negatives;
    fx.cfg.mc_samples = mc_samples;
    fx.cfg.no_vib = no_vib;
    fx.cfg.dropout = 0.0;
    fx.cfg.seed = seed;

    const std::size_t r = 8, n_docs = 6;
    vades::EncoderConfig enc;
    enc.r0 = 16;
    enc.hash_buckets = 64;

    vades::Rng rng(seed);
    fx.model.setup({"a0", "a1", "a2"}, tiny_inventory(r), identity_standardizer(r),
                   enc, rng);
    for (auto* head : {&fx.model.f, &fx.model.g}) {
        for (std::size_t j = 0; j < head->bn.width(); ++j) {
            head->bn.running_mean[j] = 0.1 * rng.gaussian();
            head->bn.running_var[j] = std::exp(0.5 * rng.gaussian());
        }
    }

    fx.data.features_std = vades::Mat(n_docs, r);
    for (auto& v : fx.data.features_std.a) v = rng.gaussian();
    for (std::size_t d = 0; d < n_docs; ++d) {
        fx.data.doc_ids.push_back("d" + std::to_string(d));
        fx.data.doc_author.push_back(static_cast<std::uint32_t>(d % 3));
        std::vector<std::string> tokens;
        const std::size_t n_tok = 5 + rng.uniform_int(5);
        for (std::size_t t = 0; t < n_tok; ++t) {
            tokens.push_back("tok" + std::to_string(rng.uniform_int(20)));
        }
        fx.data.doc_ngrams.push_back(vades::doc_ngram_ids(tokens, fx.model.enc_cfg));
    }

    std::vector<std::uint32_t> docs(n_docs);
    for (std::size_t i = 0; i < n_docs; ++i) docs[i] = static_cast<std::uint32_t>(i);
    fx.batch = vades::build_batch(fx.data, docs, fx.model.n_authors(), fx.cfg.negatives,
                                  rng);
    return fx;
}

// full synthetic pipeline: corpus -> split -> features -> trained model.
// Returned by pointer because data.corpus points at the held corpus.
struct SyntheticRun {
    vades::Corpus corpus;
    vades::ExperimentData data;
    vades::TrainedRun run;
};

inline std::unique_ptr<SyntheticRun> run_synthetic_training(
    std::size_t n_authors, std::size_t docs_per_author, const vades::TrainConfig& cfg,
    std::uint64_t corpus_seed = 1000, std::size_t hash_buckets = 4096,
    std::size_t r0 = 64) {
    auto s = std::make_unique<SyntheticRun>();
    s->corpus = make_synthetic_corpus(n_authors, docs_per_author, corpus_seed);
    const vades::SplitSpec split = vades::stratified_split(s->corpus, 0.8, 7);
    s->data = vades::prepare_experiment(s->corpus, split, vades::default_inventory());
    vades::EncoderConfig enc;
    enc.r0 = r0;
    enc.hash_buckets = hash_buckets;
    s->run = vades::run_training(s->data, enc, cfg);
    return s;
}

} // namespace testsupport
