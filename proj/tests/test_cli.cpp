#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <string>
#include <sys/wait.h>

#include "support/synthetic.hpp"
#include "support/tempdir.hpp"
#include "vades/corpus.hpp"

using testsupport::read_file;
using testsupport::TempDir;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const TempDir& tmp, const std::string& args) {
    const fs::path out_file = tmp.path / "stdout.txt";
    const fs::path err_file = tmp.path / "stderr.txt";
    const std::string cmd = std::string(VADES_CLI_PATH) + " " + args + " > " +
                            out_file.string() + " 2> " + err_file.string();
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(out_file);
    r.err = read_file(err_file);
    return r;
}

// small corpus + cheap training flags shared by the CLI tests
fs::path write_corpus(const TempDir& tmp, std::size_t authors = 3, std::size_t docs = 6) {
    vades::Corpus c = testsupport::make_synthetic_corpus(authors, docs, 42);
    const fs::path path = tmp.path / "corpus.jsonl";
    vades::save_corpus(c, path);
    return path;
}

std::string cheap_train_flags() {
    return " --epochs 2 --negatives 2 --mc-samples 2 --batch-size 8 --r0 16"
           " --hash-buckets 256 --seed 5";
}

} // namespace

TEST_CASE("features command writes CSV and cache, byte-identical on rerun") {
    TempDir tmp;
    const fs::path corpus = write_corpus(tmp, 3, 10);
    const auto r1 = run_cli(tmp, "features --corpus " + corpus.string() + " --out " +
                                     (tmp.path / "f1").string());
    INFO(r1.err);
    REQUIRE(r1.code == 0);
    CHECK(r1.out.find("masked") != std::string::npos);

    const std::string csv = read_file(tmp.path / "f1" / "features.csv");
    std::size_t lines = 0;
    for (char c : csv) lines += c == '\n';
    CHECK(lines == 31); // 30 docs + header

    const auto r2 = run_cli(tmp, "features --corpus " + corpus.string() + " --out " +
                                     (tmp.path / "f2").string());
    REQUIRE(r2.code == 0);
    CHECK(read_file(tmp.path / "f2" / "features.csv") == csv);
}

TEST_CASE("malformed corpus record fails with the line number") {
    TempDir tmp;
    const fs::path corpus = tmp.path / "bad.jsonl";
    testsupport::write_file(corpus,
                            R"({"id": "d1", "author": "a", "text": "Fine text."})" "\n"
                            R"({"id": "d2", "text": "missing author"})" "\n");
    const auto r = run_cli(tmp, "features --corpus " + corpus.string() + " --out " +
                                    (tmp.path / "out").string());
    CHECK(r.code == 1);
    CHECK(r.err.find(":2:") != std::string::npos);
}

TEST_CASE("train produces reproducible artifacts") {
    TempDir tmp;
    const fs::path corpus = write_corpus(tmp);
    const std::string base = "train --corpus " + corpus.string() + cheap_train_flags();

    const auto r1 = run_cli(tmp, base + " --out " + (tmp.path / "run1").string());
    INFO(r1.err);
    REQUIRE(r1.code == 0);
    REQUIRE(fs::exists(tmp.path / "run1" / "checkpoint.bin"));
    REQUIRE(fs::exists(tmp.path / "run1" / "split.json"));
    REQUIRE(fs::exists(tmp.path / "run1" / "metrics.jsonl"));
    REQUIRE(fs::exists(tmp.path / "run1" / "config.toml"));
    CHECK_FALSE(fs::exists(tmp.path / "run1" / ".vades-lock")); // released

    const auto r2 = run_cli(tmp, base + " --out " + (tmp.path / "run2").string());
    REQUIRE(r2.code == 0);
    CHECK(read_file(tmp.path / "run1" / "checkpoint.bin") ==
          read_file(tmp.path / "run2" / "checkpoint.bin"));
    CHECK(read_file(tmp.path / "run1" / "metrics.jsonl") ==
          read_file(tmp.path / "run2" / "metrics.jsonl"));
    CHECK(read_file(tmp.path / "run1" / "split.json") ==
          read_file(tmp.path / "run2" / "split.json"));
}

TEST_CASE("the echoed config reproduces the run") {
    TempDir tmp;
    const fs::path corpus = write_corpus(tmp);
    const auto r1 = run_cli(tmp, "train --corpus " + corpus.string() +
                                     cheap_train_flags() + " --alpha 0.3 --out " +
                                     (tmp.path / "orig").string());
    INFO(r1.err);
    REQUIRE(r1.code == 0);

    const auto r2 = run_cli(tmp, "train --config " +
                                     (tmp.path / "orig" / "config.toml").string() +
                                     " --out " + (tmp.path / "replay").string());
    INFO(r2.err);
    REQUIRE(r2.code == 0);
    CHECK(read_file(tmp.path / "orig" / "checkpoint.bin") ==
          read_file(tmp.path / "replay" / "checkpoint.bin"));
}

TEST_CASE("metrics log lines carry the loss components") {
    TempDir tmp;
    const fs::path corpus = write_corpus(tmp);
    const auto r = run_cli(tmp, "train --corpus " + corpus.string() +
                                    cheap_train_flags() + " --out " +
                                    (tmp.path / "run").string());
    REQUIRE(r.code == 0);
    const std::string metrics = read_file(tmp.path / "run" / "metrics.jsonl");
    CHECK(metrics.find("loss_author") != std::string::npos);
    CHECK(metrics.find("loss_kl") != std::string::npos);
    CHECK(metrics.find("coeff_author") != std::string::npos);
}

TEST_CASE("no-vib training omits the KL term from the metrics log") {
    TempDir tmp;
    const fs::path corpus = write_corpus(tmp);
    const auto r = run_cli(tmp, "train --corpus " + corpus.string() +
                                    cheap_train_flags() + " --no-vib --out " +
                                    (tmp.path / "run").string());
    REQUIRE(r.code == 0);
    const std::string metrics = read_file(tmp.path / "run" / "metrics.jsonl");
    CHECK(metrics.find("loss_author") != std::string::npos);
    CHECK(metrics.find("loss_kl") == std::string::npos);
}

TEST_CASE("invalid alpha is a validation error") {
    TempDir tmp;
    const fs::path corpus = write_corpus(tmp);
    const auto r = run_cli(tmp, "train --corpus " + corpus.string() +
                                    " --alpha 1.5 --out " + (tmp.path / "x").string());
    CHECK(r.code == 1);
}

TEST_CASE("a lock file blocks a second run into the same directory") {
    TempDir tmp;
    const fs::path corpus = write_corpus(tmp);
    fs::create_directories(tmp.path / "busy");
    testsupport::write_file(tmp.path / "busy" / ".vades-lock", "locked\n");
    const auto r = run_cli(tmp, "train --corpus " + corpus.string() +
                                    cheap_train_flags() + " --out " +
                                    (tmp.path / "busy").string());
    CHECK(r.code == 1);
    CHECK(r.err.find("locked") != std::string::npos);
}

TEST_CASE("eval, infer and export work from a trained checkpoint") {
    TempDir tmp;
    const fs::path corpus = write_corpus(tmp, 3, 8);
    const fs::path run_dir = tmp.path / "run";
    const auto rt = run_cli(tmp, "train --corpus " + corpus.string() +
                                     cheap_train_flags() + " --out " + run_dir.string());
    INFO(rt.err);
    REQUIRE(rt.code == 0);
    const std::string ckpt = (run_dir / "checkpoint.bin").string();
    const std::string split = (run_dir / "split.json").string();

    SECTION("eval writes reports; accuracy within [0,1]") {
        const auto r = run_cli(tmp, "eval --corpus " + corpus.string() +
                                        " --checkpoint " + ckpt + " --split " + split +
                                        " --folds 3 --out " + (tmp.path / "eval").string());
        INFO(r.err);
        REQUIRE(r.code == 0);
        REQUIRE(fs::exists(tmp.path / "eval" / "attribution.json"));
        REQUIRE(fs::exists(tmp.path / "eval" / "style_regression.json"));
        REQUIRE(fs::exists(tmp.path / "eval" / "correlation.csv"));
        const std::string attribution = read_file(tmp.path / "eval" / "attribution.json");
        CHECK(attribution.find("accuracy") != std::string::npos);
        CHECK(r.out.find("attribution accuracy") != std::string::npos);
    }
    SECTION("eval on the train split warns") {
        const auto r = run_cli(tmp, "eval --corpus " + corpus.string() +
                                        " --checkpoint " + ckpt + " --split " + split +
                                        " --on train --folds 3 --out " +
                                        (tmp.path / "eval_train").string());
        REQUIRE(r.code == 0);
        CHECK(r.err.find("train data") != std::string::npos);
    }
    SECTION("infer prints a gaussian embedding") {
        testsupport::write_file(tmp.path / "text.txt",
                                "The quiet harbor waited. Perhaps too quiet.");
        const auto r = run_cli(tmp, "infer --checkpoint " + ckpt + " --text " +
                                        (tmp.path / "text.txt").string());
        REQUIRE(r.code == 0);
        CHECK(r.out.find("\"mu\"") != std::string::npos);
        CHECK(r.out.find("variance_norm") != std::string::npos);
    }
    SECTION("infer on an empty file exits 1 with a clear message") {
        testsupport::write_file(tmp.path / "empty.txt", "");
        const auto r = run_cli(tmp, "infer --checkpoint " + ckpt + " --text " +
                                        (tmp.path / "empty.txt").string());
        CHECK(r.code == 1);
        CHECK(r.err.find("empty document") != std::string::npos);
    }
    SECTION("export row counts match authors and documents") {
        const auto r = run_cli(tmp, "export --corpus " + corpus.string() +
                                        " --checkpoint " + ckpt + " --out " +
                                        (tmp.path / "exp").string());
        REQUIRE(r.code == 0);
        const std::string authors = read_file(tmp.path / "exp" / "authors.csv");
        const std::string documents = read_file(tmp.path / "exp" / "documents.csv");
        std::size_t author_lines = 0, doc_lines = 0;
        for (char c : authors) author_lines += c == '\n';
        for (char c : documents) doc_lines += c == '\n';
        CHECK(author_lines == 3 + 1);
        CHECK(doc_lines == 24 + 1);
    }
}

TEST_CASE("sweep writes one CSV row per alpha and records the coefficient") {
    TempDir tmp;
    const fs::path corpus = write_corpus(tmp);
    const auto r = run_cli(tmp, "sweep --corpus " + corpus.string() +
                                    cheap_train_flags() +
                                    " --alphas 0.0 1.0 --folds 3 --out " +
                                    (tmp.path / "sweep").string());
    INFO(r.err);
    REQUIRE(r.code == 0);
    const std::string csv = read_file(tmp.path / "sweep" / "sweep.csv");
    std::size_t lines = 0;
    for (char c : csv) lines += c == '\n';
    CHECK(lines == 3); // header + 2 alphas
    // alpha=1 row records a zero author coefficient
    CHECK(csv.find("\n1,") != std::string::npos);
    const auto pos = csv.find("\n1,");
    const std::string row = csv.substr(pos + 1, csv.find('\n', pos + 1) - pos - 1);
    CHECK(row.rfind(",0") == row.size() - 2);
}

TEST_CASE("missing subcommand or unknown flags exit nonzero") {
    TempDir tmp;
    CHECK(run_cli(tmp, "").code != 0);
    CHECK(run_cli(tmp, "train --nonsense x").code != 0);
}
