#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "vades/linalg.hpp"
#include "vades/rng.hpp"

namespace vades {

// --- scalar activations, numerically stable forms ---

inline double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                    : std::exp(x) / (1.0 + std::exp(x));
}

inline double log_sigmoid(double x) {
    return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// inverse of softplus, y > 0
inline double inv_softplus(double y) {
    return y > 30.0 ? y : std::log(std::expm1(y));
}

// --- parameter bookkeeping ---

// A flat view over one named parameter tensor and its gradient buffer.
struct ParamRef {
    std::string name;
    double* value = nullptr;
    double* grad = nullptr;
    std::size_t size = 0;
};

// y = W x + b applied row-wise: Y(n,out) = X(n,in) * W^T + b
struct DenseLayer {
    Mat w;  // out x in
    std::vector<double> b;
    Mat gw;
    std::vector<double> gb;

    DenseLayer() = default;
    DenseLayer(std::size_t out, std::size_t in)
        : w(out, in), b(out, 0.0), gw(out, in), gb(out, 0.0) {}

    std::size_t out_dim() const { return w.rows; }
    std::size_t in_dim() const { return w.cols; }

    void init_xavier(Rng& rng) {
        const double s = std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
        for (auto& x : w.a) x = (2.0 * rng.uniform() - 1.0) * s;
        std::fill(b.begin(), b.end(), 0.0);
    }

    void forward(const Mat& x, Mat& y) const {
        if (x.cols != w.cols) {
            throw error("dense forward: input width " + std::to_string(x.cols) +
                        " != " + std::to_string(w.cols));
        }
        y = Mat(x.rows, w.rows);
        for (std::size_t i = 0; i < x.rows; ++i) {
            const double* xi = x.data() + i * x.cols;
            double* yi = y.data() + i * y.cols;
            for (std::size_t o = 0; o < w.rows; ++o) {
                const double* wo = w.data() + o * w.cols;
                double s = b[o];
                for (std::size_t k = 0; k < w.cols; ++k) s += wo[k] * xi[k];
                yi[o] = s;
            }
        }
    }

    // accumulates into gw/gb, writes grad wrt input into dx
    void backward(const Mat& x, const Mat& dy, Mat& dx) {
        if (dy.rows != x.rows || dy.cols != w.rows) {
            throw error("dense backward: shape mismatch");
        }
        dx = Mat(x.rows, w.cols);
        for (std::size_t i = 0; i < x.rows; ++i) {
            const double* xi = x.data() + i * x.cols;
            const double* di = dy.data() + i * dy.cols;
            double* dxi = dx.data() + i * dx.cols;
            for (std::size_t o = 0; o < w.rows; ++o) {
                const double g = di[o];
                gb[o] += g;
                const double* wo = w.data() + o * w.cols;
                double* gwo = gw.data() + o * w.cols;
                for (std::size_t k = 0; k < w.cols; ++k) {
                    gwo[k] += g * xi[k];
                    dxi[k] += g * wo[k];
                }
            }
        }
    }
};

// Per-unit batch normalization with explicit train/inference modes.
// Training normalizes with batch statistics (population variance); inference
// is a fixed affine map through the running statistics.
struct BatchNorm {
    std::vector<double> gamma, beta;
    std::vector<double> running_mean, running_var;
    std::vector<double> ggamma, gbeta;
    double momentum = 0.1;
    double eps = 1e-5;

    BatchNorm() = default;
    explicit BatchNorm(std::size_t width)
        : gamma(width, 1.0), beta(width, 0.0), running_mean(width, 0.0),
          running_var(width, 1.0), ggamma(width, 0.0), gbeta(width, 0.0) {}

    std::size_t width() const { return gamma.size(); }

    struct Cache {
        Mat xhat;
        std::vector<double> mean, inv_std, batch_var;
    };

    void forward_train(const Mat& x, Mat& y, Cache& cache) const {
        const std::size_t n = x.rows, d = width();
        cache.mean.assign(d, 0.0);
        cache.batch_var.assign(d, 0.0);
        cache.inv_std.assign(d, 0.0);
        cache.xhat = Mat(n, d);
        y = Mat(n, d);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) cache.mean[j] += x(i, j);
        }
        for (std::size_t j = 0; j < d; ++j) cache.mean[j] /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                const double c = x(i, j) - cache.mean[j];
                cache.batch_var[j] += c * c;
            }
        }
        for (std::size_t j = 0; j < d; ++j) {
            cache.batch_var[j] /= static_cast<double>(n);
            cache.inv_std[j] = 1.0 / std::sqrt(cache.batch_var[j] + eps);
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                cache.xhat(i, j) = (x(i, j) - cache.mean[j]) * cache.inv_std[j];
                y(i, j) = gamma[j] * cache.xhat(i, j) + beta[j];
            }
        }
    }

    void forward_infer(const Mat& x, Mat& y) const {
        const std::size_t n = x.rows, d = width();
        y = Mat(n, d);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                y(i, j) = gamma[j] * (x(i, j) - running_mean[j]) /
                              std::sqrt(running_var[j] + eps) +
                          beta[j];
            }
        }
    }

    void backward_train(const Cache& cache, const Mat& dy, Mat& dx) {
        const std::size_t n = dy.rows, d = width();
        dx = Mat(n, d);
        for (std::size_t j = 0; j < d; ++j) {
            double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double dxhat = dy(i, j) * gamma[j];
                sum_dxhat += dxhat;
                sum_dxhat_xhat += dxhat * cache.xhat(i, j);
                ggamma[j] += dy(i, j) * cache.xhat(i, j);
                gbeta[j] += dy(i, j);
            }
            const double inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double dxhat = dy(i, j) * gamma[j];
                dx(i, j) = cache.inv_std[j] *
                           (dxhat - inv_n * sum_dxhat -
                            cache.xhat(i, j) * inv_n * sum_dxhat_xhat);
            }
        }
    }

    void backward_infer(const Mat& x, const Mat& dy, Mat& dx) {
        const std::size_t n = dy.rows, d = width();
        dx = Mat(n, d);
        for (std::size_t j = 0; j < d; ++j) {
            const double inv_std = 1.0 / std::sqrt(running_var[j] + eps);
            for (std::size_t i = 0; i < n; ++i) {
                ggamma[j] += dy(i, j) * (x(i, j) - running_mean[j]) * inv_std;
                gbeta[j] += dy(i, j);
                dx(i, j) = dy(i, j) * gamma[j] * inv_std;
            }
        }
    }

    // separate from forward_train so loss evaluation stays a pure function
    void update_running(const Cache& cache) {
        for (std::size_t j = 0; j < width(); ++j) {
            running_mean[j] = (1.0 - momentum) * running_mean[j] + momentum * cache.mean[j];
            running_var[j] = (1.0 - momentum) * running_var[j] + momentum * cache.batch_var[j];
        }
    }
};

// Inverted dropout; the mask is drawn by the caller so that deterministic
// evaluation can skip it entirely.
inline void dropout_mask(Mat& mask, double p, Rng& rng) {
    for (auto& m : mask.a) {
        m = rng.uniform() < p ? 0.0 : 1.0 / (1.0 - p);
    }
}

inline void apply_mask(Mat& x, const Mat& mask) {
    for (std::size_t i = 0; i < x.size(); ++i) x.a[i] *= mask.a[i];
}

// KL( N(mu, diag(var)) || N(0, I) ) = 0.5 sum(var + mu^2 - 1 - ln var).
// Gradients are wrt mu and log var.
inline double kl_diag_gaussian_vs_standard(std::span<const double> mu,
                                           std::span<const double> var,
                                           std::span<double> grad_mu = {},
                                           std::span<double> grad_logvar = {},
                                           double weight = 1.0) {
    double kl = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (!(var[i] > 0.0)) {
            throw error("kl_diag_gaussian: nonpositive variance");
        }
        kl += 0.5 * (var[i] + mu[i] * mu[i] - 1.0 - std::log(var[i]));
        if (!grad_mu.empty()) grad_mu[i] += weight * mu[i];
        if (!grad_logvar.empty()) grad_logvar[i] += weight * 0.5 * (var[i] - 1.0);
    }
    return kl;
}

// Adam with bias correction; L2 decay is added to gradients before the
// moment updates.
struct Adam {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-5;
    std::int64_t t = 0;
    std::vector<std::vector<double>> m, v;

    void init(const std::vector<ParamRef>& params) {
        m.clear();
        v.clear();
        for (const auto& p : params) {
            m.emplace_back(p.size, 0.0);
            v.emplace_back(p.size, 0.0);
        }
        t = 0;
    }

    void step(const std::vector<ParamRef>& params) {
        if (m.size() != params.size()) {
            throw error("adam: state not initialized for this parameter set");
        }
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t gi = 0; gi < params.size(); ++gi) {
            const auto& p = params[gi];
            auto& mg = m[gi];
            auto& vg = v[gi];
            for (std::size_t i = 0; i < p.size; ++i) {
                double g = p.grad[i];
                if (!std::isfinite(g)) {
                    throw error("adam: non-finite gradient in parameter '" + p.name + "'");
                }
                g += weight_decay * p.value[i];
                mg[i] = beta1 * mg[i] + (1.0 - beta1) * g;
                vg[i] = beta2 * vg[i] + (1.0 - beta2) * g * g;
                const double mhat = mg[i] / bc1;
                const double vhat = vg[i] / bc2;
                p.value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
        }
    }
};

// --- finite-difference gradient checking ---

struct GradCheckEntry {
    std::string param;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_err = 0.0;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    GradCheckEntry worst;
    std::vector<GradCheckEntry> failures;

    bool ok(double tolerance) const { return max_rel_err < tolerance; }
};

// Central differences against supplied analytic gradients. loss_fn must be
// deterministic: dropout off, noise frozen, batchnorm in inference mode.
// Relative error is |a - n| / max(1, |a|, |n|).
template <typename LossFn>
GradCheckReport gradient_check(LossFn&& loss_fn, const std::vector<ParamRef>& params,
                               double h = 1e-5, double tolerance = 1e-4) {
    GradCheckReport report;
    for (const auto& p : params) {
        for (std::size_t i = 0; i < p.size; ++i) {
            const double saved = p.value[i];
            p.value[i] = saved + h;
            const double up = loss_fn();
            p.value[i] = saved - h;
            const double down = loss_fn();
            p.value[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = p.grad[i];
            const double scale = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
            const double rel = std::fabs(analytic - numeric) / scale;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst = {p.name, i, analytic, numeric, rel};
            }
            if (rel >= tolerance) {
                report.failures.push_back({p.name, i, analytic, numeric, rel});
            }
        }
    }
    return report;
}

} // namespace vades
