// vades - author/document embeddings with stylometric constraints.
//
// Subcommands: features, train, eval, infer, export, sweep. Every command is
// reproducible from its effective config + seed; the config actually used is
// echoed into the output directory. Exit codes: 0 success, 1 invalid
// input/config, 2 runtime failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vades/checkpoint.hpp"
#include "vades/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

unsigned thread_count() {
    if (const char* env = std::getenv("VADES_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n >= 1) return static_cast<unsigned>(n);
    }
    return 1;
}

// one training run per output directory
struct DirLock {
    fs::path path;
    explicit DirLock(const fs::path& dir) : path(dir / ".vades-lock") {
        if (fs::exists(path)) {
            throw vades::config_error("output directory is locked by another run: " +
                                      path.string() + " (remove the lock if stale)");
        }
        std::ofstream out(path);
        out << "locked\n";
    }
    ~DirLock() {
        std::error_code ec;
        fs::remove(path, ec);
    }
};

struct CorpusOpts {
    std::string path;
    std::string format = "jsonl";
    std::size_t max_sentences = 200;
};

void add_corpus_options(CLI::App* cmd, CorpusOpts& o) {
    cmd->add_option("--corpus", o.path, "corpus file (jsonl) or directory (textdir)")
        ->required();
    cmd->add_option("--format", o.format, "corpus format: jsonl | textdir")
        ->check(CLI::IsMember({"jsonl", "textdir"}));
    cmd->add_option("--max-sentences", o.max_sentences,
                    "keep only the first N sentences of each document");
}

vades::Corpus load_and_preprocess(const CorpusOpts& o) {
    vades::Corpus corpus =
        vades::load_corpus(o.path, vades::parse_corpus_format(o.format));
    vades::preprocess_corpus(corpus, o.max_sentences);
    return corpus;
}

struct TrainOpts {
    vades::TrainConfig cfg;
    std::string feature_loss = "cross-entropy";
    std::string encoder = "builtin";
    std::size_t r0 = 128;
    std::size_t hash_buckets = 1u << 17;
    std::vector<int> ngram_orders = {1, 2};
    double split_ratio = 0.8;
    std::uint64_t split_seed = 1;
    std::string inventory_path;
};

void add_train_options(CLI::App* cmd, TrainOpts& o) {
    cmd->add_option("--alpha", o.cfg.alpha, "feature-loss weight in [0,1]")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--beta", o.cfg.beta, "KL weight");
    cmd->add_option("--negatives", o.cfg.negatives, "negative pairs per positive (k)");
    cmd->add_option("--mc-samples", o.cfg.mc_samples, "Monte-Carlo draws per pair (L)");
    cmd->add_option("--lr", o.cfg.lr, "learning rate");
    cmd->add_option("--epochs", o.cfg.epochs, "training epochs");
    cmd->add_option("--batch-size", o.cfg.batch_size, "positive pairs per step");
    cmd->add_option("--dropout", o.cfg.dropout, "dropout probability in the heads");
    cmd->add_option("--weight-decay", o.cfg.weight_decay, "L2 regularization");
    cmd->add_option("--seed", o.cfg.seed, "seed for init, sampling and noise");
    cmd->add_flag("--no-vib", o.cfg.no_vib,
                  "point embeddings: L=1, eps=0, KL term omitted");
    cmd->add_option("--feature-loss", o.feature_loss, "cross-entropy | l2")
        ->check(CLI::IsMember({"cross-entropy", "l2"}));
    cmd->add_flag("--freeze-contrastive", o.cfg.freeze_contrastive,
                  "do not train c/e scale and offset");
    cmd->add_option("--encoder", o.encoder, "builtin | external:<vectors file>");
    cmd->add_option("--r0", o.r0, "intermediate encoder dimension (builtin)");
    cmd->add_option("--hash-buckets", o.hash_buckets, "n-gram hash buckets (builtin)");
    cmd->add_option("--ngram-orders", o.ngram_orders, "token n-gram orders (builtin)");
    cmd->add_option("--split-ratio", o.split_ratio, "train fraction of the 80/20 split")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--split-seed", o.split_seed, "seed of the stratified split");
    cmd->add_option("--inventory", o.inventory_path,
                    "feature inventory JSON (default: built-in r=300)");
}

vades::EncoderConfig make_encoder_config(const TrainOpts& o, const CorpusOpts& c) {
    vades::EncoderConfig enc;
    enc.r0 = o.r0;
    enc.hash_buckets = o.hash_buckets;
    enc.ngram_orders = o.ngram_orders;
    if (o.encoder == "builtin") {
        enc.kind = vades::EncoderConfig::Kind::Builtin;
    } else if (o.encoder.rfind("external:", 0) == 0) {
        enc.kind = vades::EncoderConfig::Kind::External;
        enc.external_path = o.encoder.substr(9);
    } else {
        throw vades::config_error("--encoder must be builtin or external:<path>");
    }
    (void)c;
    return enc;
}

vades::FeatureInventory resolve_inventory(const std::string& path) {
    return path.empty() ? vades::default_inventory() : vades::load_inventory(path);
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) {
        throw vades::error("cannot write " + path.string());
    }
    out << content;
}

vades::Mat features_with_cache(const vades::Corpus& corpus,
                               const vades::FeatureInventory& inv,
                               const fs::path& cache_path) {
    const std::uint64_t key = vades::corpus_content_key(corpus);
    vades::Mat feats;
    if (vades::read_feature_cache(cache_path, key, inv, feats)) {
        return feats;
    }
    feats = vades::extract_matrix(corpus, inv, thread_count());
    vades::write_feature_cache(cache_path, key, inv, feats);
    return feats;
}

void write_metrics_line(std::ofstream& out, const vades::EpochMetrics& em) {
    json j;
    j["epoch"] = em.epoch;
    j["loss_author"] = em.loss_author;
    j["loss_feature"] = em.loss_feature;
    if (em.has_kl) {
        j["loss_kl"] = em.loss_kl;
    }
    j["total"] = em.total;
    j["coeff_author"] = em.coeff_author;
    j["coeff_feature"] = em.coeff_feature;
    out << j.dump() << '\n';
    out.flush();
}

void write_embedding_csv(std::ostream& out, const std::string& id,
                         const vades::GaussianEmbedding& e) {
    char buf[32];
    out << id;
    for (double v : e.mu) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << ',' << buf;
    }
    for (double v : e.var) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << ',' << buf;
    }
    out << '\n';
}

int run_features(const CorpusOpts& copts, const std::string& inventory_path,
                 const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const vades::Corpus corpus = load_and_preprocess(copts);
    const vades::FeatureInventory inv = resolve_inventory(inventory_path);
    const vades::Mat feats = features_with_cache(corpus, inv, out_dir / "features.cache");
    vades::write_features_csv(out_dir / "features.csv", inv, corpus, feats);
    const vades::Standardizer st = vades::fit_standardizer(feats);
    std::cout << "documents: " << feats.rows << "\nfeatures: " << feats.cols
              << "\nmasked (zero-variance) features: " << st.masked_count() << "\n";
    return 0;
}

int run_train(CLI::App* root, const CorpusOpts& copts, TrainOpts& topts,
              const fs::path& out_dir) {
    topts.cfg.feature_loss = topts.feature_loss == "l2"
                                 ? vades::TrainConfig::FeatureLoss::L2
                                 : vades::TrainConfig::FeatureLoss::CrossEntropy;
    topts.cfg.max_sentences = copts.max_sentences;
    topts.cfg.validate();
    fs::create_directories(out_dir);
    DirLock lock(out_dir);
    write_text(out_dir / "config.toml", root->config_to_str(true, true));

    const vades::Corpus corpus = load_and_preprocess(copts);
    const vades::SplitSpec split =
        vades::stratified_split(corpus, topts.split_ratio, topts.split_seed);
    vades::save_split(split, out_dir / "split.json");

    vades::FeatureInventory inv = resolve_inventory(topts.inventory_path);
    vades::Mat feats = features_with_cache(corpus, inv, out_dir / "features.cache");
    const vades::ExperimentData data =
        vades::prepare_experiment(corpus, split, std::move(inv), std::move(feats));

    const vades::EncoderConfig enc = make_encoder_config(topts, copts);
    std::ofstream metrics(out_dir / "metrics.jsonl");
    const fs::path ckpt_path = out_dir / "checkpoint.bin";

    vades::TrainedRun run = vades::run_training(
        data, enc, topts.cfg,
        [&](int epoch, const vades::EpochMetrics& em, vades::VadesModel& model,
            const std::string& rng_state) {
            write_metrics_line(metrics, em);
            vades::save_checkpoint(ckpt_path, model,
                                   {topts.cfg, epoch, rng_state});
            std::cout << "epoch " << epoch << " total " << em.total << " (author "
                      << em.loss_author << ", feature " << em.loss_feature;
            if (em.has_kl) std::cout << ", kl " << em.loss_kl;
            std::cout << ")\n";
        });
    if (topts.cfg.epochs == 0) {
        vades::save_checkpoint(ckpt_path, run.model, {topts.cfg, 0, run.rng_state});
    }
    if (run.result.diverged) {
        std::cerr << "training diverged after epoch " << run.result.completed_epochs
                  << "; last good checkpoint kept at " << ckpt_path << "\n";
        return 2;
    }
    std::cout << "checkpoint: " << ckpt_path << "\n";
    return 0;
}

int run_eval(const CorpusOpts& copts, const std::string& checkpoint_path,
             const std::string& split_path, const std::string& on, int folds,
             const fs::path& out_dir) {
    fs::create_directories(out_dir);
    vades::VadesModel model;
    const vades::CheckpointInfo info = vades::load_checkpoint(checkpoint_path, model);

    CorpusOpts adjusted = copts;
    adjusted.max_sentences = info.config.max_sentences;
    const vades::Corpus corpus = load_and_preprocess(adjusted);
    const vades::SplitSpec split = vades::load_split(split_path);
    if (on == "train") {
        std::cerr << "warning: evaluating on train data\n";
    }
    const auto& ids = on == "train" ? split.train_ids : split.test_ids;

    vades::ExperimentData data;
    data.corpus = &corpus;
    data.split = split;
    data.inventory = model.inventory;
    data.feats_raw = features_with_cache(corpus, model.inventory, out_dir / "features.cache");

    const vades::EvalReport rep =
        vades::evaluate_model(model, data, ids, folds, info.config.seed);

    json attribution;
    attribution["on"] = on;
    attribution["n_documents"] = ids.size();
    attribution["accuracy"] = rep.attribution_accuracy;
    write_text(out_dir / "attribution.json", attribution.dump(2) + "\n");

    json style;
    style["folds"] = rep.style.folds;
    style["mean_family_mse"] = rep.style.mean_family_mse();
    for (int fam = 0; fam < vades::kNumFamilies; ++fam) {
        const std::string name(vades::family_names()[fam]);
        if (std::isfinite(rep.style.family_mean[fam])) {
            style["families"][name] = {{"mse", rep.style.family_mean[fam]},
                                       {"std", rep.style.family_std[fam]}};
        }
    }
    {
        auto arr = json::array();
        for (std::size_t i = 0; i < rep.style.per_feature_mse.size(); ++i) {
            const bool masked = rep.style.masked[i] != 0;
            arr.push_back({{"feature", model.inventory.entries[i].name},
                           {"masked", masked},
                           {"mse", masked ? json() : json(rep.style.per_feature_mse[i])}});
        }
        style["per_feature"] = arr;
    }
    write_text(out_dir / "style_regression.json", style.dump(2) + "\n");

    {
        std::ofstream corr(out_dir / "correlation.csv");
        corr << "index,feature,family,masked,rho\n";
        char buf[32];
        for (std::size_t i = 0; i < rep.axis_rho.size(); ++i) {
            const auto& e = model.inventory.entries[i];
            corr << i << ',' << e.name << ','
                 << vades::family_names()[static_cast<int>(e.family)] << ','
                 << (rep.style.masked[i] ? 1 : 0) << ',';
            if (std::isfinite(rep.axis_rho[i])) {
                std::snprintf(buf, sizeof buf, "%.17g", rep.axis_rho[i]);
                corr << buf;
            }
            corr << '\n';
        }
    }

    std::cout << "attribution accuracy (" << on << "): " << rep.attribution_accuracy
              << "\nstyle regression (" << folds << "-fold CV, MSE by family):\n";
    for (int fam = 0; fam < vades::kNumFamilies; ++fam) {
        if (!std::isfinite(rep.style.family_mean[fam])) continue;
        char line[128];
        std::snprintf(line, sizeof line, "  %-14s %6.3f (%.3f)\n",
                      std::string(vades::family_names()[fam]).c_str(),
                      rep.style.family_mean[fam], rep.style.family_std[fam]);
        std::cout << line;
    }
    std::cout << "mean |axis correlation|: " << rep.mean_abs_rho << "\n";
    return 0;
}

int run_infer(const std::string& checkpoint_path, const std::string& text_path,
              const std::string& out_path) {
    vades::VadesModel model;
    const vades::CheckpointInfo info = vades::load_checkpoint(checkpoint_path, model);
    std::ifstream in(text_path);
    if (!in) {
        throw vades::config_error("cannot open text file: " + text_path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    const vades::GaussianEmbedding e =
        model.infer_document(ss.str(), info.config.max_sentences);
    json j;
    j["mu"] = e.mu;
    j["var"] = e.var;
    j["variance_norm"] = vades::variance_norm(e);
    if (out_path.empty()) {
        std::cout << j.dump() << "\n";
    } else {
        write_text(out_path, j.dump() + "\n");
    }
    return 0;
}

int run_export(const CorpusOpts& copts, const std::string& checkpoint_path,
               const fs::path& out_dir) {
    fs::create_directories(out_dir);
    vades::VadesModel model;
    const vades::CheckpointInfo info = vades::load_checkpoint(checkpoint_path, model);
    CorpusOpts adjusted = copts;
    adjusted.max_sentences = info.config.max_sentences;
    const vades::Corpus corpus = load_and_preprocess(adjusted);

    auto header = [&](std::ostream& out, const char* id_name) {
        out << id_name;
        for (const auto& e : model.inventory.entries) out << ",mu_" << e.name;
        for (const auto& e : model.inventory.entries) out << ",var_" << e.name;
        out << '\n';
    };
    {
        std::ofstream out(out_dir / "authors.csv");
        header(out, "author_id");
        for (const auto& id : model.author_ids) {
            write_embedding_csv(out, id, model.author_embedding(id));
        }
    }
    {
        std::ofstream out(out_dir / "documents.csv");
        header(out, "doc_id");
        for (const auto& doc : corpus.documents) {
            std::vector<double> d0;
            if (model.enc_cfg.kind == vades::EncoderConfig::Kind::Builtin) {
                d0 = model.encode_tokens(vades::doc_tokens(doc));
            } else {
                d0 = model.ext.get(doc.doc_id);
            }
            write_embedding_csv(out, doc.doc_id, model.doc_gaussian(d0));
        }
    }
    std::cout << "exported " << model.author_ids.size() << " authors, "
              << corpus.documents.size() << " documents\n";
    return 0;
}

int run_sweep(CLI::App* root, const CorpusOpts& copts, TrainOpts& topts,
              const std::vector<double>& alphas, int folds, const fs::path& out_dir) {
    topts.cfg.feature_loss = topts.feature_loss == "l2"
                                 ? vades::TrainConfig::FeatureLoss::L2
                                 : vades::TrainConfig::FeatureLoss::CrossEntropy;
    topts.cfg.max_sentences = copts.max_sentences;
    topts.cfg.validate();
    fs::create_directories(out_dir);
    DirLock lock(out_dir);
    write_text(out_dir / "config.toml", root->config_to_str(true, true));

    const vades::Corpus corpus = load_and_preprocess(copts);
    const vades::SplitSpec split =
        vades::stratified_split(corpus, topts.split_ratio, topts.split_seed);
    vades::save_split(split, out_dir / "split.json");
    vades::FeatureInventory inv = resolve_inventory(topts.inventory_path);
    vades::Mat feats = features_with_cache(corpus, inv, out_dir / "features.cache");
    const vades::ExperimentData data =
        vades::prepare_experiment(corpus, split, std::move(inv), std::move(feats));
    const vades::EncoderConfig enc = make_encoder_config(topts, copts);

    const auto rows = vades::alpha_sweep(data, enc, topts.cfg, alphas, folds);
    std::ofstream csv(out_dir / "sweep.csv");
    csv << "alpha,accuracy,mean_style_mse,coeff_author\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r.alpha, r.accuracy,
                      r.mean_style_mse, r.coeff_author);
        csv << buf;
        std::cout << "alpha " << r.alpha << ": accuracy " << r.accuracy
                  << ", mean style MSE " << r.mean_style_mse << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"VADES: variational author/document embeddings with stylometric constraints"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default(); // complete config echoes
    app.set_config("--config", "", "read options from a config file (flags override)");

    CorpusOpts feat_corpus, train_corpus, eval_corpus, export_corpus, sweep_corpus;
    TrainOpts train_opts, sweep_opts;
    std::string feat_inventory, feat_out;
    std::string train_out;
    std::string eval_checkpoint, eval_split, eval_on = "test", eval_out;
    int eval_folds = 10;
    std::string infer_checkpoint, infer_text, infer_out;
    std::string export_checkpoint, export_out;
    std::vector<double> sweep_alphas = {0.0, 0.1, 0.5, 0.9, 1.0};
    int sweep_folds = 10;
    std::string sweep_out;

    auto* features = app.add_subcommand("features", "extract stylistic feature matrix");
    add_corpus_options(features, feat_corpus);
    features->add_option("--inventory", feat_inventory, "feature inventory JSON");
    features->add_option("--out", feat_out, "output directory")->required();
    features->fallthrough();

    auto* train = app.add_subcommand("train", "train a VADES model");
    add_corpus_options(train, train_corpus);
    add_train_options(train, train_opts);
    train->add_option("--out", train_out, "output directory")->required();
    train->fallthrough();

    auto* eval = app.add_subcommand("eval", "attribution + style regression evaluation");
    add_corpus_options(eval, eval_corpus);
    eval->add_option("--checkpoint", eval_checkpoint, "trained checkpoint")->required();
    eval->add_option("--split", eval_split, "split.json from training")->required();
    eval->add_option("--on", eval_on, "evaluate on test or train side")
        ->check(CLI::IsMember({"test", "train"}));
    eval->add_option("--folds", eval_folds, "CV folds for style regression");
    eval->add_option("--out", eval_out, "output directory")->required();
    eval->fallthrough();

    auto* infer = app.add_subcommand("infer", "embed a single document");
    infer->add_option("--checkpoint", infer_checkpoint, "trained checkpoint")->required();
    infer->add_option("--text", infer_text, "UTF-8 text file")->required();
    infer->add_option("--out", infer_out, "output JSON file (default stdout)");
    infer->fallthrough();

    auto* exportc = app.add_subcommand("export", "export author/document embedding CSVs");
    add_corpus_options(exportc, export_corpus);
    exportc->add_option("--checkpoint", export_checkpoint, "trained checkpoint")->required();
    exportc->add_option("--out", export_out, "output directory")->required();
    exportc->fallthrough();

    auto* sweep = app.add_subcommand("sweep", "train + evaluate across alpha values");
    add_corpus_options(sweep, sweep_corpus);
    add_train_options(sweep, sweep_opts);
    sweep->add_option("--alphas", sweep_alphas, "alpha values to sweep");
    sweep->add_option("--folds", sweep_folds, "CV folds for style regression");
    sweep->add_option("--out", sweep_out, "output directory")->required();
    sweep->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (features->parsed()) {
            return run_features(feat_corpus, feat_inventory, feat_out);
        }
        if (train->parsed()) {
            return run_train(&app, train_corpus, train_opts, train_out);
        }
        if (eval->parsed()) {
            return run_eval(eval_corpus, eval_checkpoint, eval_split, eval_on, eval_folds,
                            eval_out);
        }
        if (infer->parsed()) {
            return run_infer(infer_checkpoint, infer_text, infer_out);
        }
        if (exportc->parsed()) {
            return run_export(export_corpus, export_checkpoint, export_out);
        }
        if (sweep->parsed()) {
            return run_sweep(&app, sweep_corpus, sweep_opts, sweep_alphas, sweep_folds,
                             sweep_out);
        }
    } catch (const vades::config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
