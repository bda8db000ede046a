#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "vades/linalg.hpp"
#include "vades/rng.hpp"
#include "vades/stylometry.hpp"

namespace vades {

// Authors ranked by descending cosine similarity to the document embedding;
// ties broken by ascending row index (rows are in sorted author-id order).
inline std::vector<std::size_t> attribute(std::span<const double> doc_embedding,
                                          const Mat& author_means) {
    const double dn = norm2(doc_embedding);
    if (dn <= 0.0) {
        throw error("attribute: zero-norm document embedding");
    }
    std::vector<double> sims(author_means.rows);
    for (std::size_t a = 0; a < author_means.rows; ++a) {
        const double an = norm2(author_means.row(a));
        if (an <= 0.0) {
            throw error("attribute: zero-norm author embedding at row " + std::to_string(a));
        }
        sims[a] = dot(doc_embedding, author_means.row(a)) / (dn * an);
    }
    std::vector<std::size_t> order(author_means.rows);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sims[x] > sims[y]; });
    return order;
}

struct AttributionResult {
    std::vector<double> run_accuracies;
    std::vector<std::uint64_t> run_seeds;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
};

// mean +- std over repeated runs (runs differ in training seed); a single
// run reports std 0
inline AttributionResult aggregate_attribution(std::vector<double> accuracies,
                                               std::vector<std::uint64_t> seeds) {
    if (accuracies.empty()) {
        throw error("aggregate_attribution: no runs");
    }
    AttributionResult res;
    res.run_accuracies = std::move(accuracies);
    res.run_seeds = std::move(seeds);
    double s = 0.0;
    for (double a : res.run_accuracies) s += a;
    res.mean_accuracy = s / static_cast<double>(res.run_accuracies.size());
    double var = 0.0;
    for (double a : res.run_accuracies) {
        var += (a - res.mean_accuracy) * (a - res.mean_accuracy);
    }
    res.std_accuracy = std::sqrt(var / static_cast<double>(res.run_accuracies.size()));
    return res;
}

// --- RBF kernel ridge regression ---
// Stands in for the paper's epsilon-SVR: same RBF kernel and CV protocol,
// but closed-form and deterministic. gamma follows the "scale" convention
// 1/(p * var(X)); lambda defaults to 1.0.

struct KernelRidge {
    Mat x_train;
    Mat coef; // n_train x n_targets
    double gamma = 0.0;
    double lambda = 1.0;
};

inline double rbf_gamma(const Mat& x) {
    double mean = 0.0;
    for (double v : x.a) mean += v;
    mean /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x.a) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size());
    if (var <= 1e-12) var = 1.0;
    return 1.0 / (static_cast<double>(x.cols) * var);
}

inline KernelRidge fit_kernel_ridge(const Mat& x, const Mat& y, double lambda = 1.0) {
    if (x.rows != y.rows || x.rows == 0) {
        throw error("fit_kernel_ridge: shape mismatch");
    }
    KernelRidge m;
    m.x_train = x;
    m.gamma = rbf_gamma(x);
    m.lambda = lambda;
    const std::size_t n = x.rows;
    Mat k(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        k(i, i) = 1.0 + lambda;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = std::exp(-m.gamma * squared_distance(x.row(i), x.row(j)));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    m.coef = y;
    cholesky_solve_inplace(k, m.coef);
    return m;
}

inline Mat kernel_ridge_predict(const KernelRidge& m, const Mat& xq) {
    Mat out(xq.rows, m.coef.cols);
    for (std::size_t q = 0; q < xq.rows; ++q) {
        for (std::size_t i = 0; i < m.x_train.rows; ++i) {
            const double k = std::exp(-m.gamma * squared_distance(xq.row(q), m.x_train.row(i)));
            for (std::size_t c = 0; c < m.coef.cols; ++c) {
                out(q, c) += k * m.coef(i, c);
            }
        }
    }
    return out;
}

struct StyleRegressionReport {
    std::vector<double> per_feature_mse; // NaN for masked features
    std::vector<std::uint8_t> masked;
    std::vector<double> family_mean; // indexed by FeatureFamily
    std::vector<double> family_std;  // std across the family's features
    int folds = 0;

    // average of the family means over non-empty families (the "average MSE
    // score" of the alpha sweep)
    double mean_family_mse() const {
        double s = 0.0;
        int n = 0;
        for (double v : family_mean) {
            if (std::isfinite(v)) {
                s += v;
                ++n;
            }
        }
        return n > 0 ? s / n : std::numeric_limits<double>::quiet_NaN();
    }
};

// K-fold CV over authors: every author is predicted exactly once from a
// model fitted on the other folds. Targets must be standardized; masked
// (zero-variance) targets are excluded and reported as such.
inline StyleRegressionReport style_regression_eval(
    const Mat& author_embeddings, const Mat& author_targets,
    const std::vector<std::uint8_t>& target_mask, const FeatureInventory& inventory,
    int folds = 10, std::uint64_t seed = 0, double lambda = 1.0) {
    const std::size_t n = author_embeddings.rows;
    if (author_targets.rows != n) {
        throw error("style_regression_eval: embedding/target row mismatch");
    }
    if (folds < 2 || static_cast<std::size_t>(folds) > n) {
        throw error("style_regression_eval: folds must be in [2, #authors]");
    }
    const std::size_t q = author_targets.cols;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<double> sq_err(q, 0.0);
    for (int fold = 0; fold < folds; ++fold) {
        // contiguous chunks of the shuffled order partition the authors
        const std::size_t lo = n * static_cast<std::size_t>(fold) / folds;
        const std::size_t hi = n * static_cast<std::size_t>(fold + 1) / folds;
        const std::size_t n_test = hi - lo;
        const std::size_t n_train = n - n_test;
        Mat xtr(n_train, author_embeddings.cols), ytr(n_train, q);
        Mat xte(n_test, author_embeddings.cols);
        std::size_t ti = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t row = order[i];
            if (i >= lo && i < hi) continue;
            std::copy(author_embeddings.row(row).begin(), author_embeddings.row(row).end(),
                      xtr.row(ti).begin());
            std::copy(author_targets.row(row).begin(), author_targets.row(row).end(),
                      ytr.row(ti).begin());
            ++ti;
        }
        for (std::size_t i = lo; i < hi; ++i) {
            std::copy(author_embeddings.row(order[i]).begin(),
                      author_embeddings.row(order[i]).end(), xte.row(i - lo).begin());
        }
        const KernelRidge model = fit_kernel_ridge(xtr, ytr, lambda);
        const Mat pred = kernel_ridge_predict(model, xte);
        for (std::size_t i = lo; i < hi; ++i) {
            const std::size_t row = order[i];
            for (std::size_t c = 0; c < q; ++c) {
                const double d = pred(i - lo, c) - author_targets(row, c);
                sq_err[c] += d * d;
            }
        }
    }

    StyleRegressionReport rep;
    rep.folds = folds;
    rep.masked = target_mask;
    rep.per_feature_mse.assign(q, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t c = 0; c < q; ++c) {
        if (!target_mask[c]) {
            rep.per_feature_mse[c] = sq_err[c] / static_cast<double>(n);
        }
    }

    rep.family_mean.assign(kNumFamilies, std::numeric_limits<double>::quiet_NaN());
    rep.family_std.assign(kNumFamilies, std::numeric_limits<double>::quiet_NaN());
    for (int fam = 0; fam < kNumFamilies; ++fam) {
        std::vector<double> vals;
        for (std::size_t c = 0; c < inventory.entries.size() && c < q; ++c) {
            if (static_cast<int>(inventory.entries[c].family) == fam && !target_mask[c]) {
                vals.push_back(rep.per_feature_mse[c]);
            }
        }
        if (vals.empty()) continue;
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        rep.family_mean[fam] = mean;
        rep.family_std[fam] = std::sqrt(var / static_cast<double>(vals.size()));
    }
    return rep;
}

// Pearson correlation between embedding coordinate i and stylistic feature i
// across authors. Masked or zero-variance axes report NaN.
inline std::vector<double> axis_correlation(const Mat& author_embeddings,
                                            const Mat& author_targets,
                                            const std::vector<std::uint8_t>& target_mask) {
    const std::size_t n = author_embeddings.rows;
    if (n < 3) {
        throw error("axis_correlation: need at least 3 authors");
    }
    const std::size_t r = std::min(author_embeddings.cols, author_targets.cols);
    std::vector<double> rho(r, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < r; ++i) {
        if (i < target_mask.size() && target_mask[i]) continue;
        double mx = 0.0, my = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            mx += author_embeddings(a, i);
            my += author_targets(a, i);
        }
        mx /= static_cast<double>(n);
        my /= static_cast<double>(n);
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            const double dx = author_embeddings(a, i) - mx;
            const double dy = author_targets(a, i) - my;
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
        if (sxx > 0.0 && syy > 0.0) {
            rho[i] = sxy / std::sqrt(sxx * syy);
        }
    }
    return rho;
}

inline double mean_abs_correlation(const std::vector<double>& rho) {
    double s = 0.0;
    std::size_t n = 0;
    for (double v : rho) {
        if (std::isfinite(v)) {
            s += std::fabs(v);
            ++n;
        }
    }
    return n > 0 ? s / static_cast<double>(n) : 0.0;
}

// Multinomial logistic regression on standardized stylistic features, the
// "Stylistic features + LR" baseline. Full-batch gradient descent with a
// fixed iteration budget; zero init makes it deterministic.
inline double lr_feature_baseline(const Mat& x_train, const std::vector<int>& y_train,
                                  const Mat& x_test, const std::vector<int>& y_test,
                                  int n_classes, int iters = 500, double lr = 0.1,
                                  double l2 = 1e-4) {
    if (n_classes < 2) {
        throw error("lr_feature_baseline: need at least 2 classes");
    }
    const std::size_t n = x_train.rows, p = x_train.cols;
    Mat w(static_cast<std::size_t>(n_classes), p + 1); // last column = bias
    Mat gw(w.rows, w.cols);
    std::vector<double> logits(static_cast<std::size_t>(n_classes));
    for (int it = 0; it < iters; ++it) {
        gw.zero();
        for (std::size_t i = 0; i < n; ++i) {
            double maxl = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < n_classes; ++c) {
                logits[c] = dot(w.row(c).subspan(0, p), x_train.row(i)) + w(c, p);
                maxl = std::max(maxl, logits[c]);
            }
            double z = 0.0;
            for (int c = 0; c < n_classes; ++c) {
                logits[c] = std::exp(logits[c] - maxl);
                z += logits[c];
            }
            for (int c = 0; c < n_classes; ++c) {
                const double prob = logits[c] / z;
                const double g = prob - (y_train[i] == c ? 1.0 : 0.0);
                double* grow = gw.data() + static_cast<std::size_t>(c) * gw.cols;
                const double* xi = x_train.data() + i * p;
                for (std::size_t j = 0; j < p; ++j) grow[j] += g * xi[j];
                grow[p] += g;
            }
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t j = 0; j < w.size(); ++j) {
            w.a[j] -= lr * (gw.a[j] * inv_n + l2 * w.a[j]);
        }
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < x_test.rows; ++i) {
        int best = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < n_classes; ++c) {
            const double v = dot(w.row(c).subspan(0, p), x_test.row(i)) + w(c, p);
            if (v > best_v) {
                best_v = v;
                best = c;
            }
        }
        if (best == y_test[i]) ++correct;
    }
    return x_test.rows == 0 ? 0.0
                            : static_cast<double>(correct) / static_cast<double>(x_test.rows);
}

} // namespace vades
