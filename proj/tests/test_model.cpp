#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/tempdir.hpp"
#include "support/tinymodel.hpp"
#include "vades/checkpoint.hpp"
#include "vades/pipeline.hpp"

using namespace vades;
using Catch::Matchers::WithinAbs;
using testsupport::make_tiny_fixture;
using testsupport::run_synthetic_training;
using testsupport::TinyFixture;

namespace {

LossBreakdown eval_loss(TinyFixture& fx, NoiseSource& noise, bool with_grads,
                        HeadCache* fc = nullptr, HeadCache* gc = nullptr) {
    LossInputs in;
    in.data = &fx.data;
    in.batch = &fx.batch;
    in.cfg = &fx.cfg;
    in.noise = &noise;
    in.dropout_rng = nullptr; // deterministic evaluation
    in.bn_training = false;
    in.with_grads = with_grads;
    return compute_loss(fx.model, in, fc, gc);
}

} // namespace

TEST_CASE("pair_prob soft-contrastive contract") {
    const std::vector<double> z = {1.0, 2.0, 3.0};

    SECTION("identical points at e=0 give exactly 0.5") {
        CHECK(pair_prob(z, z, 1.0, 0.0) == 0.5);
    }
    SECTION("c*dist == e cancels to 0.5 exactly") {
        const std::vector<double> z1 = {0.0, 0.0}, z2 = {0.0, 2.0};
        CHECK(pair_prob(z1, z2, 1.0, 2.0) == 0.5);
    }
    SECTION("unit distance at c=1, e=0 is sigmoid(-1)") {
        const std::vector<double> z1 = {0.0}, z2 = {1.0};
        CHECK_THAT(pair_prob(z1, z2, 1.0, 0.0),
                   WithinAbs(0.2689414213699951, 1e-15));
    }
    SECTION("strictly decreasing in distance on a 100-point grid") {
        double prev = 2.0;
        for (int i = 0; i < 100; ++i) {
            const std::vector<double> z1 = {0.0}, z2 = {0.05 * (i + 1)};
            const double q = pair_prob(z1, z2, 1.3, 0.7);
            CHECK(q < prev);
            CHECK(q > 0.0);
            CHECK(q < 1.0);
            prev = q;
        }
    }
    SECTION("dimension mismatch errors") {
        const std::vector<double> z2 = {1.0, 2.0};
        CHECK_THROWS_AS(pair_prob(z, z2, 1.0, 0.0), error);
    }
}

TEST_CASE("sample_z reparametrization") {
    const std::vector<double> mu = {0.5, -1.0}, var = {4.0, 0.25};

    SECTION("zero noise returns the mean") {
        CHECK(sample_z(mu, var, std::vector<double>{0.0, 0.0}) == mu);
    }
    SECTION("hand arithmetic: mu=0, var=4, eps=1 -> 2") {
        const auto z = sample_z(std::vector<double>{0.0}, std::vector<double>{4.0},
                                std::vector<double>{1.0});
        CHECK(z[0] == 2.0);
    }
    SECTION("empirical mean approaches mu") {
        Rng rng(17);
        const int n = 100000;
        double sum = 0.0;
        std::vector<double> eps(1);
        for (int i = 0; i < n; ++i) {
            eps[0] = rng.gaussian();
            sum += sample_z(std::vector<double>{0.7}, std::vector<double>{4.0}, eps)[0];
        }
        const double mean = sum / n;
        CHECK_THAT(mean, WithinAbs(0.7, 3.0 * 2.0 / std::sqrt(double(n))));
    }
}

TEST_CASE("build_batch negative sampling") {
    TrainData data;
    data.doc_author = {0, 1, 0, 1};
    data.doc_ids = {"d0", "d1", "d2", "d3"};
    data.doc_ngrams.resize(4);
    Rng rng(5);
    const std::vector<std::uint32_t> docs = {0, 1, 2, 3};

    SECTION("with 2 authors and k=1 the negative is always the other author") {
        const PairBatch b = build_batch(data, docs, 2, 1, rng);
        for (const auto& e : b.entries) {
            REQUIRE(e.neg_authors.size() == 1);
            CHECK(e.neg_authors[0] == 1 - e.author);
        }
    }
    SECTION("negatives never collide with the positive identity") {
        for (int trial = 0; trial < 50; ++trial) {
            const PairBatch b = build_batch(data, docs, 2, 3, rng);
            for (const auto& e : b.entries) {
                for (auto a : e.neg_authors) CHECK(a != e.author);
                for (auto d : e.neg_docs) CHECK(d != e.doc);
            }
        }
    }
    SECTION("single author cannot sample author negatives") {
        CHECK_THROWS_WITH(build_batch(data, docs, 1, 2, rng),
                          Catch::Matchers::ContainsSubstring("author negatives"));
    }
    SECTION("single document cannot sample feature negatives") {
        TrainData one;
        one.doc_author = {0};
        one.doc_ids = {"d0"};
        one.doc_ngrams.resize(1);
        const std::vector<std::uint32_t> d1 = {0};
        CHECK_THROWS_WITH(build_batch(one, d1, 3, 2, rng),
                          Catch::Matchers::ContainsSubstring("feature negatives"));
    }
}

TEST_CASE("loss of a single positive pair at distance zero is -log 0.5") {
    TinyFixture fx = make_tiny_fixture(21, /*alpha=*/0.0, /*beta=*/0.0,
                                       /*no_vib=*/true, /*negatives=*/2);
    // f head collapsed to zero output, author mean at the origin, e_a = 0
    fx.model.f.l2.w.zero();
    std::fill(fx.model.f.l2.b.begin(), fx.model.f.l2.b.end(), 0.0);
    for (std::size_t j = 0; j < fx.model.r(); ++j) fx.model.author_mu(0, j) = 0.0;
    fx.model.cp.v[1] = 0.0;

    fx.cfg.negatives = 0;
    PairBatch single;
    single.entries.push_back({0, 0, {}, {}});
    fx.batch = single;

    NoiseSource noise(NoiseSource::Mode::Zero, nullptr);
    const LossBreakdown lb = eval_loss(fx, noise, false);
    CHECK_THAT(lb.author, WithinAbs(0.6931471805599453, 1e-12));
    CHECK_THAT(lb.total, WithinAbs(0.6931471805599453, 1e-12));
    CHECK(lb.feature == 0.0);
    CHECK_FALSE(lb.has_kl);
}

TEST_CASE("loss decomposition reassembles exactly") {
    TinyFixture fx = make_tiny_fixture(31, 0.37, 0.2);
    Rng rng(99);
    NoiseSource noise(NoiseSource::Mode::Draw, &rng);
    const LossBreakdown lb = eval_loss(fx, noise, false);
    CHECK_THAT(lb.total,
               WithinAbs((1.0 - 0.37) * lb.author + 0.37 * lb.feature + 0.2 * lb.kl,
                         1e-12));
    CHECK(lb.has_kl);
    CHECK(lb.kl >= 0.0);
}

TEST_CASE("alpha=0 loss equals the author term plus beta*KL, by oracle") {
    const double beta = 0.125;
    TinyFixture fx = make_tiny_fixture(41, 0.0, beta);
    NoiseSource noise(NoiseSource::Mode::Zero, nullptr);
    const LossBreakdown lb = eval_loss(fx, noise, false);
    CHECK(lb.feature == 0.0);

    // oracle: with zero noise z = mu, so every term is a pair_prob of means
    const double c_a = fx.model.cp.c_author();
    const double e_a = fx.model.cp.e_author();
    double logprob = 0.0;
    std::size_t terms = 0;
    std::set<std::uint32_t> authors_seen;
    for (const auto& entry : fx.batch.entries) {
        const GaussianEmbedding doc = fx.model.doc_gaussian(
            [&] {
                std::vector<double> d0(fx.model.r0());
                fx.model.table.forward(fx.data.doc_ngrams[entry.doc], d0);
                return d0;
            }());
        const auto mu_a = fx.model.author_mu.row(entry.author);
        logprob += std::log(pair_prob(mu_a, doc.mu, c_a, e_a));
        ++terms;
        authors_seen.insert(entry.author);
        for (auto neg : entry.neg_authors) {
            const auto mu_n = fx.model.author_mu.row(neg);
            logprob += std::log(1.0 - pair_prob(mu_n, doc.mu, c_a, e_a));
            ++terms;
            authors_seen.insert(neg);
        }
    }
    const double author_term = -logprob / static_cast<double>(terms);
    CHECK_THAT(lb.author, WithinAbs(author_term, 1e-10));

    // KL oracle: 0.5 sum(var + mu^2 - 1 - ln var), averaged per entity set
    double kl_a = 0.0;
    for (auto a : authors_seen) {
        for (std::size_t j = 0; j < fx.model.r(); ++j) {
            const double mu = fx.model.author_mu(a, j);
            const double var = std::exp(fx.model.author_logvar(a, j));
            kl_a += 0.5 * (var + mu * mu - 1.0 - std::log(var));
        }
    }
    kl_a /= static_cast<double>(authors_seen.size());
    double kl_d = 0.0;
    for (const auto& entry : fx.batch.entries) {
        std::vector<double> d0(fx.model.r0());
        fx.model.table.forward(fx.data.doc_ngrams[entry.doc], d0);
        const GaussianEmbedding doc = fx.model.doc_gaussian(d0);
        for (std::size_t j = 0; j < fx.model.r(); ++j) {
            kl_d += 0.5 * (doc.var[j] + doc.mu[j] * doc.mu[j] - 1.0 -
                           std::log(doc.var[j]));
        }
    }
    kl_d /= static_cast<double>(fx.batch.entries.size());
    CHECK_THAT(lb.kl, WithinAbs(kl_a + kl_d, 1e-10));
    CHECK_THAT(lb.total, WithinAbs(author_term + beta * (kl_a + kl_d), 1e-10));
}

TEST_CASE("full-loss analytic gradients match central finite differences") {
    TinyFixture fx = make_tiny_fixture(51, 0.4, 0.5);
    Rng noise_rng(123);
    NoiseSource noise(NoiseSource::Mode::Record, &noise_rng);

    fx.model.zero_grads();
    eval_loss(fx, noise, true);
    noise.start_replay();

    auto loss_fn = [&]() {
        noise.rewind();
        return eval_loss(fx, noise, false).total;
    };
    const auto params = fx.model.collect_params();
    const GradCheckReport report = gradient_check(loss_fn, params, 1e-5, 1e-4);
    INFO("worst: " << report.worst.param << "[" << report.worst.index
                   << "] analytic=" << report.worst.analytic
                   << " numeric=" << report.worst.numeric);
    CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("gradient check covers the L2 feature loss variant") {
    TinyFixture fx = make_tiny_fixture(52, 0.6, 0.3);
    fx.cfg.feature_loss = TrainConfig::FeatureLoss::L2;
    Rng noise_rng(321);
    NoiseSource noise(NoiseSource::Mode::Record, &noise_rng);
    fx.model.zero_grads();
    eval_loss(fx, noise, true);
    noise.start_replay();
    auto loss_fn = [&]() {
        noise.rewind();
        return eval_loss(fx, noise, false).total;
    };
    const GradCheckReport report =
        gradient_check(loss_fn, fx.model.collect_params(), 1e-5, 1e-4);
    CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("alpha=1 yields exactly-zero author-table gradients") {
    TinyFixture fx = make_tiny_fixture(61, 1.0, 1e-3);
    Rng rng(7);
    NoiseSource noise(NoiseSource::Mode::Draw, &rng);
    fx.model.zero_grads();
    const LossBreakdown lb = eval_loss(fx, noise, true);
    CHECK(lb.author == 0.0);
    for (double g : fx.model.g_author_mu.a) CHECK(g == 0.0);
    for (double g : fx.model.g_author_logvar.a) CHECK(g == 0.0);
    // document side still trains
    double head_grad = 0.0;
    for (double g : fx.model.f.l2.gw.a) head_grad += std::fabs(g);
    CHECK(head_grad > 0.0);
}

TEST_CASE("alpha=0 contributes no feature term") {
    TinyFixture fx = make_tiny_fixture(62, 0.0, 1e-3);
    Rng rng(8);
    NoiseSource noise(NoiseSource::Mode::Draw, &rng);
    const LossBreakdown lb = eval_loss(fx, noise, false);
    CHECK(lb.feature == 0.0);
    CHECK_THAT(lb.total, WithinAbs(lb.author + 1e-3 * lb.kl, 1e-12));
}

TEST_CASE("MC estimates at L=1e4 and L=1e5 agree within 3 standard errors") {
    const std::size_t r = 6;
    Rng init(77);
    std::vector<double> mu1(r), var1(r), mu2(r), var2(r);
    for (std::size_t i = 0; i < r; ++i) {
        mu1[i] = init.gaussian();
        mu2[i] = init.gaussian();
        var1[i] = std::exp(0.5 * init.gaussian());
        var2[i] = std::exp(0.5 * init.gaussian());
    }
    auto estimate = [&](int draws, std::uint64_t seed) {
        Rng rng(seed);
        std::vector<double> eps(r);
        double sum = 0.0, sumsq = 0.0;
        for (int l = 0; l < draws; ++l) {
            rng.fill_gaussian(eps.data(), r);
            const auto z1 = sample_z(mu1, var1, eps);
            rng.fill_gaussian(eps.data(), r);
            const auto z2 = sample_z(mu2, var2, eps);
            const double lp = std::log(pair_prob(z1, z2, 1.0, 1.0));
            sum += lp;
            sumsq += lp * lp;
        }
        const double m = sum / draws;
        const double var = sumsq / draws - m * m;
        return std::pair{m, std::sqrt(var / draws)};
    };
    const auto [m4, se4] = estimate(10000, 101);
    const auto [m5, se5] = estimate(100000, 202);
    CHECK_THAT(m4, WithinAbs(m5, 3.0 * std::sqrt(se4 * se4 + se5 * se5)));
}

TEST_CASE("training is deterministic given the seed") {
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.negatives = 2;
    cfg.mc_samples = 2;
    cfg.batch_size = 8;
    cfg.seed = 42;
    const auto a = run_synthetic_training(3, 5, cfg, 500, 256, 16);
    const auto b = run_synthetic_training(3, 5, cfg, 500, 256, 16);
    REQUIRE(a->run.model.author_mu.size() == b->run.model.author_mu.size());
    for (std::size_t i = 0; i < a->run.model.author_mu.size(); ++i) {
        CHECK(a->run.model.author_mu.a[i] == b->run.model.author_mu.a[i]);
    }
    for (std::size_t i = 0; i < a->run.model.table.rows.size(); ++i) {
        CHECK(a->run.model.table.rows.a[i] == b->run.model.table.rows.a[i]);
    }
    REQUIRE(a->run.result.metrics.size() == b->run.result.metrics.size());
    for (std::size_t e = 0; e < a->run.result.metrics.size(); ++e) {
        CHECK(a->run.result.metrics[e].total == b->run.result.metrics[e].total);
    }
}

TEST_CASE("zero epochs leaves the model at initialization") {
    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 9;
    const auto run = run_synthetic_training(3, 4, cfg, 600, 128, 16);

    // re-create the initialization directly
    VadesModel fresh;
    Rng rng(cfg.seed);
    EncoderConfig enc;
    enc.r0 = 16;
    enc.hash_buckets = 128;
    fresh.setup(run->run.model.author_ids, run->run.model.inventory,
                run->run.model.standardizer, enc, rng);
    for (std::size_t i = 0; i < fresh.author_mu.size(); ++i) {
        CHECK(run->run.model.author_mu.a[i] == fresh.author_mu.a[i]);
    }
    CHECK(run->run.result.metrics.empty());
}

TEST_CASE("training loss decreases on a synthetic corpus, 5 seeds") {
    double first_sum = 0.0, last_sum = 0.0;
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        TrainConfig cfg;
        cfg.epochs = 10;
        cfg.negatives = 3;
        cfg.mc_samples = 3;
        cfg.batch_size = 8;
        cfg.alpha = 0.5;
        cfg.seed = seed;
        const auto run = run_synthetic_training(5, 6, cfg, 700, 1024, 32);
        REQUIRE_FALSE(run->run.result.diverged);
        first_sum += run->run.result.metrics.front().total;
        last_sum += run->run.result.metrics.back().total;
    }
    CHECK(last_sum < first_sum);
}

TEST_CASE("no-VIB output is invariant to beta") {
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.no_vib = true;
    cfg.negatives = 2;
    cfg.mc_samples = 4; // forced to 1 internally
    cfg.batch_size = 8;
    cfg.seed = 3;

    TrainConfig cfg_b = cfg;
    cfg_b.beta = 7.5;
    cfg.beta = 0.0;
    const auto a = run_synthetic_training(3, 5, cfg, 800, 256, 16);
    const auto b = run_synthetic_training(3, 5, cfg_b, 800, 256, 16);
    for (std::size_t i = 0; i < a->run.model.author_mu.size(); ++i) {
        CHECK(a->run.model.author_mu.a[i] == b->run.model.author_mu.a[i]);
    }
    for (const auto& em : a->run.result.metrics) {
        CHECK_FALSE(em.has_kl);
        CHECK(em.loss_kl == 0.0);
    }
}

TEST_CASE("frozen contrastive parameters do not move") {
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.freeze_contrastive = true;
    cfg.negatives = 2;
    cfg.mc_samples = 2;
    cfg.batch_size = 8;
    cfg.seed = 11;
    const auto run = run_synthetic_training(3, 5, cfg, 900, 256, 16);
    CHECK(run->run.model.cp.c_author() == 1.0);
    CHECK(run->run.model.cp.e_author() == 1.0);
    CHECK(run->run.model.cp.c_feature() == 1.0);
    CHECK(run->run.model.cp.e_feature() == 1.0);
}

TEST_CASE("doc_gaussian contracts") {
    SECTION("zero g output gives unit variance exactly") {
        TinyFixture fx = make_tiny_fixture(71);
        fx.model.g.l2.w.zero();
        std::fill(fx.model.g.l2.b.begin(), fx.model.g.l2.b.end(), 0.0);
        std::vector<double> d0(fx.model.r0(), 0.3);
        const GaussianEmbedding e = fx.model.doc_gaussian(d0);
        for (double v : e.var) CHECK(v == 1.0);
    }
    SECTION("matches an independent forward-pass oracle") {
        TinyFixture fx = make_tiny_fixture(72);
        VadesModel& m = fx.model;
        std::vector<double> d0(m.r0());
        Rng rng(5);
        for (auto& v : d0) v = rng.gaussian();
        const GaussianEmbedding e = m.doc_gaussian(d0);

        // reference implementation with plain loops
        auto head_ref = [&](const DocHeads& h) {
            std::vector<double> a1(h.l1.out_dim());
            for (std::size_t o = 0; o < h.l1.out_dim(); ++o) {
                double s = h.l1.b[o];
                for (std::size_t k = 0; k < h.l1.in_dim(); ++k) {
                    s += h.l1.w(o, k) * d0[k];
                }
                a1[o] = std::tanh(s);
            }
            for (std::size_t j = 0; j < a1.size(); ++j) {
                a1[j] = h.bn.gamma[j] * (a1[j] - h.bn.running_mean[j]) /
                            std::sqrt(h.bn.running_var[j] + h.bn.eps) +
                        h.bn.beta[j];
            }
            std::vector<double> out(h.l2.out_dim());
            for (std::size_t o = 0; o < h.l2.out_dim(); ++o) {
                double s = h.l2.b[o];
                for (std::size_t k = 0; k < h.l2.in_dim(); ++k) {
                    s += h.l2.w(o, k) * a1[k];
                }
                out[o] = s;
            }
            return out;
        };
        const auto mu_ref = head_ref(m.f);
        const auto lv_ref = head_ref(m.g);
        for (std::size_t j = 0; j < m.r(); ++j) {
            CHECK_THAT(e.mu[j], WithinAbs(mu_ref[j], 1e-12));
            CHECK_THAT(e.var[j], WithinAbs(std::exp(lv_ref[j]), 1e-12));
        }
    }
    SECTION("near-identity construction reproduces d0 at small scale") {
        // r == r0 == 16, identity weights, batchnorm tuned to the exact
        // identity map; tanh is linear to ~1e-15 at 1e-5 inputs
        vades::EncoderConfig enc;
        enc.r0 = 16;
        enc.hash_buckets = 32;
        VadesModel m;
        Rng rng(1);
        m.setup({"a0", "a1"}, testsupport::tiny_inventory(16),
                testsupport::identity_standardizer(16), enc, rng);
        for (auto* head : {&m.f}) {
            head->l1.w.zero();
            for (int i = 0; i < 16; ++i) head->l1.w(i, i) = 1.0;
            std::fill(head->l1.b.begin(), head->l1.b.end(), 0.0);
            std::fill(head->bn.running_mean.begin(), head->bn.running_mean.end(), 0.0);
            std::fill(head->bn.running_var.begin(), head->bn.running_var.end(),
                      1.0 - head->bn.eps);
            std::fill(head->bn.gamma.begin(), head->bn.gamma.end(), 1.0);
            std::fill(head->bn.beta.begin(), head->bn.beta.end(), 0.0);
            head->l2.w.zero();
            for (int i = 0; i < 16; ++i) head->l2.w(i, i) = 1.0;
            std::fill(head->l2.b.begin(), head->l2.b.end(), 0.0);
        }
        std::vector<double> d0(16);
        for (int i = 0; i < 16; ++i) d0[i] = 1e-5 * (i - 8);
        const GaussianEmbedding e = m.doc_gaussian(d0);
        for (int i = 0; i < 16; ++i) {
            CHECK_THAT(e.mu[i], WithinAbs(d0[i], 1e-12));
        }
    }
    SECTION("non-finite head output errors") {
        TinyFixture fx = make_tiny_fixture(73);
        fx.model.f.l2.b[0] = std::numeric_limits<double>::infinity();
        std::vector<double> d0(fx.model.r0(), 0.1);
        CHECK_THROWS_AS(fx.model.doc_gaussian(d0), error);
    }
}

TEST_CASE("author_embedding lookup and variance_norm") {
    TinyFixture fx = make_tiny_fixture(81);
    const GaussianEmbedding e = fx.model.author_embedding("a1");
    const std::size_t row = fx.model.author_index.at("a1");
    for (std::size_t j = 0; j < fx.model.r(); ++j) {
        CHECK(e.mu[j] == fx.model.author_mu(row, j));
        CHECK(e.var[j] == std::exp(fx.model.author_logvar(row, j)));
        CHECK(e.var[j] > 0.0);
    }
    CHECK_THROWS_WITH(fx.model.author_embedding("nobody"),
                      Catch::Matchers::ContainsSubstring("nobody"));

    GaussianEmbedding ones;
    ones.mu = {0.0, 0.0};
    ones.var = {1.0, 1.0};
    CHECK(variance_norm(ones) == 1.0);
}

TEST_CASE("non-finite loss names the offending term") {
    TinyFixture fx = make_tiny_fixture(91, 0.5, 0.0, true);
    fx.model.author_mu(0, 0) = 1e200; // distance overflows
    NoiseSource noise(NoiseSource::Mode::Zero, nullptr);
    CHECK_THROWS_WITH(eval_loss(fx, noise, false),
                      Catch::Matchers::ContainsSubstring("author"));
}

TEST_CASE("checkpoint save -> load reproduces inference bit-exactly") {
    testsupport::TempDir tmp;
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.negatives = 2;
    cfg.mc_samples = 2;
    cfg.batch_size = 8;
    cfg.seed = 77;
    auto run = run_synthetic_training(3, 5, cfg, 950, 256, 16);

    const auto path = tmp.path / "model.ckpt";
    save_checkpoint(path, run->run.model, {cfg, cfg.epochs, run->run.rng_state});

    VadesModel loaded;
    const CheckpointInfo info = load_checkpoint(path, loaded);
    CHECK(info.epoch == cfg.epochs);
    CHECK(info.config.seed == cfg.seed);
    CHECK(info.rng_state == run->run.rng_state);

    const std::string text =
        "The captain watched the harbor. Perhaps the journey mattered; perhaps not.";
    const GaussianEmbedding a = run->run.model.infer_document(text, 200);
    const GaussianEmbedding b = loaded.infer_document(text, 200);
    for (std::size_t j = 0; j < a.mu.size(); ++j) {
        CHECK(a.mu[j] == b.mu[j]);
        CHECK(a.var[j] == b.var[j]);
    }
    for (const auto& id : run->run.model.author_ids) {
        const auto ea = run->run.model.author_embedding(id);
        const auto eb = loaded.author_embedding(id);
        CHECK(ea.mu == eb.mu);
        CHECK(ea.var == eb.var);
    }

    // save(load(x)) is byte-identical to save(x)
    const auto path2 = tmp.path / "model2.ckpt";
    save_checkpoint(path2, loaded, info);
    CHECK(testsupport::read_file(path) == testsupport::read_file(path2));
}

TEST_CASE("infer_document consistency") {
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.negatives = 2;
    cfg.mc_samples = 2;
    cfg.batch_size = 8;
    cfg.seed = 13;
    auto run = run_synthetic_training(3, 5, cfg, 960, 256, 16);
    VadesModel& model = run->run.model;

    SECTION("a training document re-infers to its stored embedding") {
        const std::string& id = run->data.split.train_ids.front();
        const Document& doc = run->corpus.doc(id);
        const Mat stored =
            infer_doc_means(model, run->corpus, std::span<const std::string>(&id, 1));
        const GaussianEmbedding again = model.infer_document(doc.raw_text, 200);
        for (std::size_t j = 0; j < model.r(); ++j) {
            CHECK(again.mu[j] == stored(0, j));
        }
    }
    SECTION("unseen text yields finite gaussians with positive variance") {
        const GaussianEmbedding e = model.infer_document(
            "Entirely novel words meander through unexplored paragraphs.", 200);
        for (std::size_t j = 0; j < model.r(); ++j) {
            CHECK(std::isfinite(e.mu[j]));
            CHECK(e.var[j] > 0.0);
        }
    }
    SECTION("repeated calls are identical") {
        const GaussianEmbedding a = model.infer_document("The same text twice.", 200);
        const GaussianEmbedding b = model.infer_document("The same text twice.", 200);
        CHECK(a.mu == b.mu);
        CHECK(a.var == b.var);
    }
    SECTION("empty text errors") {
        CHECK_THROWS_WITH(model.infer_document("", 200),
                          Catch::Matchers::ContainsSubstring("empty document"));
    }
}
