#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "vades/checkpoint.hpp"
#include "vades/eval.hpp"
#include "vades/model.hpp"

namespace vades {

inline std::vector<std::string> doc_tokens(const Document& doc) {
    std::vector<std::string> tokens;
    for (const auto& s : doc.sentences) {
        tokenize_words(s, tokens);
    }
    return tokens;
}

// Everything derived from the corpus that training and evaluation share:
// the full raw feature matrix, the standardizer fit on the train rows, and
// the per-train-document inputs.
struct ExperimentData {
    const Corpus* corpus = nullptr;
    SplitSpec split;
    FeatureInventory inventory;
    Mat feats_raw; // rows follow corpus.documents order
    Standardizer standardizer;
    std::vector<std::size_t> train_rows; // corpus doc indices, split order
    std::vector<std::size_t> test_rows;
};

inline ExperimentData prepare_experiment(const Corpus& corpus, SplitSpec split,
                                         FeatureInventory inventory, Mat feats_raw) {
    ExperimentData d;
    d.corpus = &corpus;
    d.split = std::move(split);
    d.inventory = std::move(inventory);
    d.feats_raw = std::move(feats_raw);
    for (const auto& id : d.split.train_ids) {
        d.train_rows.push_back(corpus.doc_index.at(id));
    }
    for (const auto& id : d.split.test_ids) {
        d.test_rows.push_back(corpus.doc_index.at(id));
    }
    Mat train_feats(d.train_rows.size(), d.feats_raw.cols);
    for (std::size_t i = 0; i < d.train_rows.size(); ++i) {
        std::copy(d.feats_raw.row(d.train_rows[i]).begin(),
                  d.feats_raw.row(d.train_rows[i]).end(), train_feats.row(i).begin());
    }
    d.standardizer = fit_standardizer(train_feats);
    return d;
}

inline ExperimentData prepare_experiment(const Corpus& corpus, SplitSpec split,
                                         FeatureInventory inventory,
                                         unsigned n_threads = 1) {
    Mat feats = extract_matrix(corpus, inventory, n_threads);
    return prepare_experiment(corpus, std::move(split), std::move(inventory),
                              std::move(feats));
}

struct TrainedRun {
    VadesModel model;
    TrainResult result;
    std::string rng_state; // post-training, persisted in the checkpoint
};

// Builds the model over the authors present in the train split, prepares
// per-document training inputs and runs the optimization. The whole run is
// a deterministic function of (data, enc, cfg).
inline TrainedRun run_training(
    const ExperimentData& data, EncoderConfig enc, const TrainConfig& cfg,
    const std::function<void(int, const EpochMetrics&, VadesModel&, const std::string&)>&
        on_epoch = nullptr) {
    cfg.validate();
    const Corpus& corpus = *data.corpus;

    ExternalVectors ext;
    if (enc.kind == EncoderConfig::Kind::External) {
        ext = load_external_vectors(enc.external_path);
        validate_external_coverage(ext, corpus);
        enc.r0 = ext.dim; // the file determines r0
    }

    std::set<std::string> author_set;
    for (std::size_t row : data.train_rows) {
        author_set.insert(corpus.documents[row].author_id);
    }
    if (author_set.size() < 2) {
        throw config_error("training needs at least 2 authors in the train split");
    }

    TrainedRun run;
    Rng rng(cfg.seed);
    run.model.setup({author_set.begin(), author_set.end()}, data.inventory,
                    data.standardizer, enc, rng);
    run.model.ext = std::move(ext);

    TrainData td;
    const std::size_t n_train = data.train_rows.size();
    td.features_std = Mat(n_train, data.inventory.dim());
    if (enc.kind == EncoderConfig::Kind::External) {
        td.doc_d0 = Mat(n_train, run.model.r0());
    }
    for (std::size_t i = 0; i < n_train; ++i) {
        const Document& doc = corpus.documents[data.train_rows[i]];
        td.doc_ids.push_back(doc.doc_id);
        td.doc_author.push_back(
            static_cast<std::uint32_t>(run.model.author_index.at(doc.author_id)));
        std::copy(data.feats_raw.row(data.train_rows[i]).begin(),
                  data.feats_raw.row(data.train_rows[i]).end(),
                  td.features_std.row(i).begin());
        run.model.standardizer.transform_inplace(td.features_std.row(i));
        if (enc.kind == EncoderConfig::Kind::Builtin) {
            td.doc_ngrams.push_back(doc_ngram_ids(doc_tokens(doc), run.model.enc_cfg));
        } else {
            const auto& v = run.model.ext.get(doc.doc_id);
            std::copy(v.begin(), v.end(), td.doc_d0.row(i).begin());
        }
    }

    auto wrapped = on_epoch
                       ? std::function<void(int, const EpochMetrics&)>(
                             [&](int epoch, const EpochMetrics& em) {
                                 on_epoch(epoch, em, run.model, rng.state());
                             })
                       : std::function<void(int, const EpochMetrics&)>();
    run.result = train_model(run.model, td, cfg, rng, wrapped);
    run.rng_state = rng.state();
    return run;
}

// inference-mode document means for the given ids (rows in id order)
inline Mat infer_doc_means(VadesModel& model, const Corpus& corpus,
                           std::span<const std::string> ids) {
    Mat out(ids.size(), model.r());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const Document& doc = corpus.doc(ids[i]);
        std::vector<double> d0;
        if (model.enc_cfg.kind == EncoderConfig::Kind::Builtin) {
            d0 = model.encode_tokens(doc_tokens(doc));
        } else {
            d0 = model.ext.get(doc.doc_id);
        }
        const GaussianEmbedding e = model.doc_gaussian(d0);
        std::copy(e.mu.begin(), e.mu.end(), out.row(i).begin());
    }
    return out;
}

// top-1 cosine attribution accuracy over the given documents
inline double attribution_accuracy(VadesModel& model, const Corpus& corpus,
                                   std::span<const std::string> ids) {
    if (ids.empty()) {
        throw error("attribution_eval: empty test split");
    }
    const Mat doc_mu = infer_doc_means(model, corpus, ids);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto ranked = attribute(doc_mu.row(i), model.author_mu);
        const std::string& truth = corpus.doc(ids[i]).author_id;
        if (model.author_ids[ranked[0]] == truth) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(ids.size());
}

struct StyleTargets {
    Mat values; // rows follow model.author_ids order, standardized
    std::vector<std::uint8_t> mask;
};

// Author-level stylistic targets: mean of the author's raw document feature
// vectors over the whole corpus, standardized across authors.
inline StyleTargets author_style_targets(const VadesModel& model, const Corpus& corpus,
                                         const Mat& feats_raw) {
    const std::size_t na = model.n_authors();
    const std::size_t q = feats_raw.cols;
    Mat raw(na, q);
    std::vector<double> counts(na, 0.0);
    for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
        auto it = model.author_index.find(corpus.documents[i].author_id);
        if (it == model.author_index.end()) continue; // author unseen in training
        const std::size_t a = it->second;
        for (std::size_t j = 0; j < q; ++j) {
            raw(a, j) += feats_raw(i, j);
        }
        counts[a] += 1.0;
    }
    for (std::size_t a = 0; a < na; ++a) {
        if (counts[a] == 0.0) {
            throw error("author '" + model.author_ids[a] + "' has no documents in corpus");
        }
        for (std::size_t j = 0; j < q; ++j) raw(a, j) /= counts[a];
    }
    const Standardizer st = fit_standardizer(raw);
    StyleTargets t;
    t.values = st.transform(raw);
    t.mask = st.mask;
    return t;
}

struct EvalReport {
    double attribution_accuracy = 0.0;
    StyleRegressionReport style;
    std::vector<double> axis_rho;
    double mean_abs_rho = 0.0;
};

inline EvalReport evaluate_model(VadesModel& model, const ExperimentData& data,
                                 std::span<const std::string> eval_ids, int folds = 10,
                                 std::uint64_t fold_seed = 0) {
    EvalReport rep;
    rep.attribution_accuracy = attribution_accuracy(model, *data.corpus, eval_ids);
    const StyleTargets targets = author_style_targets(model, *data.corpus, data.feats_raw);
    rep.style = style_regression_eval(model.author_mu, targets.values, targets.mask,
                                      model.inventory, folds, fold_seed);
    rep.axis_rho = axis_correlation(model.author_mu, targets.values, targets.mask);
    rep.mean_abs_rho = mean_abs_correlation(rep.axis_rho);
    return rep;
}

struct SweepRow {
    double alpha = 0.0;
    double accuracy = 0.0;
    double mean_style_mse = 0.0;
    double coeff_author = 0.0;
};

// One full train + eval per alpha, same seed throughout.
inline std::vector<SweepRow> alpha_sweep(const ExperimentData& data,
                                         const EncoderConfig& enc, TrainConfig cfg,
                                         std::span<const double> alphas, int folds = 10) {
    std::vector<SweepRow> rows;
    for (double a : alphas) {
        cfg.alpha = a;
        TrainedRun run = run_training(data, enc, cfg);
        if (run.result.diverged) {
            throw error("alpha_sweep: training diverged at alpha=" + std::to_string(a));
        }
        const EvalReport rep = evaluate_model(run.model, data, data.split.test_ids, folds,
                                              cfg.seed);
        rows.push_back({a, rep.attribution_accuracy, rep.style.mean_family_mse(),
                        1.0 - a});
    }
    return rows;
}

} // namespace vades
