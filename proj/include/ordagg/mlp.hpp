#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ordagg/distribution.hpp"
#include "ordagg/losses.hpp"
#include "ordagg/rng.hpp"

namespace ordagg {

/// Dense row-major matrix, just enough for small MLPs.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
    double* row(std::size_t i) { return a.data() + i * cols; }
    const double* row(std::size_t i) const { return a.data() + i * cols; }
};

struct MlpConfig {
    int input_dim = 1;
    int output_dim = 2;
    int hidden_layers = 2;
    int hidden_size = 25;
    double dropout_p = 0.2;
    double learning_rate = 0.01;
    double weight_decay = 0.001;
    int batch_size = 25;
    int patience = 8;
    int max_epochs = 500;
    double val_fraction = 0.1;
    std::uint64_t seed = 0;

    void validate() const {
        if (input_dim < 1 || output_dim < 2 || hidden_layers < 1 || hidden_size < 1 ||
            batch_size < 1 || patience < 1 || max_epochs < 1)
            throw std::invalid_argument("MlpConfig: dimensions and counts must be positive");
        if (!(dropout_p >= 0.0 && dropout_p < 1.0))
            throw std::invalid_argument("MlpConfig: dropout_p must be in [0,1)");
        if (!(val_fraction > 0.0 && val_fraction <= 0.5))
            throw std::invalid_argument("MlpConfig: val_fraction must be in (0, 0.5]");
        if (!(learning_rate > 0.0) || weight_decay < 0.0)
            throw std::invalid_argument("MlpConfig: bad learning_rate/weight_decay");
    }

    /// Tuned defaults keyed by scale granularity (2, 5 or 11 points).
    static MlpConfig defaults_for_granularity(int points) {
        MlpConfig c;
        c.output_dim = points;
        switch (points) {
            case 2:
                c.hidden_size = 25;
                c.batch_size = 25;
                c.learning_rate = 0.01;
                c.weight_decay = 0.001;
                break;
            case 5:
                c.hidden_size = 25;
                c.batch_size = 50;
                c.learning_rate = 0.01;
                c.weight_decay = 0.001;
                break;
            case 11:
                c.hidden_size = 50;
                c.batch_size = 50;
                c.learning_rate = 0.005;
                c.weight_decay = 0.0005;
                break;
            default:
                c.hidden_size = 25;
                c.batch_size = 50;
                break;
        }
        return c;
    }
};

/// One labeled example: normalized input scores and the target CDF.
struct Sample {
    std::vector<double> x;
    Cdf y;
};

struct TrainReport {
    int epochs_run = 0;
    double best_val_loss = 0.0;
    bool stopped_early = false;
    double final_train_loss = 0.0;
};

/// Feedforward network with a CDF head: per hidden layer
/// affine -> batch norm -> ReLU -> dropout, then a final affine whose
/// softmax output is prefix-summed into a valid CDF.
class Network {
public:
    struct Dense {
        Matrix w;  // out x in
        std::vector<double> b;
    };
    struct BatchNorm {
        std::vector<double> gamma, beta;
        std::vector<double> running_mean, running_var;
    };

    Network() = default;

    Network(const MlpConfig& config, std::uint64_t init_seed) : cfg_(config) {
        cfg_.validate();
        Rng rng(derive_seed(init_seed, "mlp_init"));
        int in = cfg_.input_dim;
        for (int l = 0; l < cfg_.hidden_layers; ++l) {
            hidden_.push_back(make_dense(in, cfg_.hidden_size, rng));
            BatchNorm bn;
            bn.gamma.assign(static_cast<std::size_t>(cfg_.hidden_size), 1.0);
            bn.beta.assign(static_cast<std::size_t>(cfg_.hidden_size), 0.0);
            bn.running_mean.assign(static_cast<std::size_t>(cfg_.hidden_size), 0.0);
            bn.running_var.assign(static_cast<std::size_t>(cfg_.hidden_size), 1.0);
            norms_.push_back(std::move(bn));
            in = cfg_.hidden_size;
        }
        output_ = make_dense(in, cfg_.output_dim, rng);
    }

    const MlpConfig& config() const { return cfg_; }
    std::vector<Dense>& hidden() { return hidden_; }
    const std::vector<Dense>& hidden() const { return hidden_; }
    std::vector<BatchNorm>& norms() { return norms_; }
    const std::vector<BatchNorm>& norms() const { return norms_; }
    Dense& output() { return output_; }
    const Dense& output() const { return output_; }

    /// Flattened view of all trainable parameters, in a fixed order.
    /// Batch-norm running statistics are state, not parameters.
    std::vector<double*> parameters() {
        std::vector<double*> ps;
        auto add = [&ps](std::vector<double>& v) {
            for (double& x : v) ps.push_back(&x);
        };
        for (std::size_t l = 0; l < hidden_.size(); ++l) {
            add(hidden_[l].w.a);
            add(hidden_[l].b);
            add(norms_[l].gamma);
            add(norms_[l].beta);
        }
        add(output_.w.a);
        add(output_.b);
        return ps;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < hidden_.size(); ++l)
            n += hidden_[l].w.a.size() + hidden_[l].b.size() + norms_[l].gamma.size() +
                 norms_[l].beta.size();
        return n + output_.w.a.size() + output_.b.size();
    }

    /// Eval-mode forward pass: batch norm uses running statistics, dropout
    /// is off. Each output row is a valid CDF.
    Matrix forward_eval(const Matrix& batch) const {
        check_input(batch);
        Matrix h = batch;
        for (std::size_t l = 0; l < hidden_.size(); ++l) {
            h = affine(hidden_[l], h);
            const BatchNorm& bn = norms_[l];
            for (std::size_t i = 0; i < h.rows; ++i) {
                for (std::size_t j = 0; j < h.cols; ++j) {
                    const double xhat =
                        (h(i, j) - bn.running_mean[j]) / std::sqrt(bn.running_var[j] + kBnEps);
                    double v = bn.gamma[j] * xhat + bn.beta[j];
                    h(i, j) = v > 0.0 ? v : 0.0;
                }
            }
        }
        Matrix logits = affine(output_, h);
        cdf_head(logits);
        return logits;
    }

    Cdf predict(const std::vector<double>& x) const {
        Matrix in(1, x.size());
        std::copy(x.begin(), x.end(), in.row(0));
        Matrix out = forward_eval(in);
        return Cdf(std::vector<double>(out.row(0), out.row(0) + out.cols));
    }

    /// Mean CDF training loss of the batch plus exact gradients for every
    /// parameter. Train-mode semantics: batch-norm statistics come from the
    /// batch (running stats are updated), dropout masks are drawn from
    /// mask_seed, so the loss is a deterministic, differentiable function
    /// of the parameters given (batch, mask_seed).
    struct Gradients {
        std::vector<Matrix> dw_hidden;
        std::vector<std::vector<double>> db_hidden;
        std::vector<std::vector<double>> dgamma, dbeta;
        Matrix dw_out;
        std::vector<double> db_out;
    };

    std::pair<double, Gradients> loss_and_grad(const Matrix& batch, const std::vector<Cdf>& targets,
                                               std::uint64_t mask_seed,
                                               bool update_running_stats = true) {
        check_input(batch);
        if (targets.size() != batch.rows)
            throw std::invalid_argument("loss_and_grad: target count != batch rows");
        for (const Cdf& t : targets)
            if (t.size() != static_cast<std::size_t>(cfg_.output_dim))
                throw std::invalid_argument("loss_and_grad: target CDF has wrong length");

        const std::size_t B = batch.rows;
        const std::size_t L = hidden_.size();
        const std::size_t n_out = static_cast<std::size_t>(cfg_.output_dim);

        // ---- forward, caching everything the backward pass needs ----
        std::vector<Matrix> inputs(L + 1);     // input to each affine
        std::vector<Matrix> pre_bn(L);         // affine outputs
        std::vector<Matrix> xhat(L);           // normalized activations
        std::vector<std::vector<double>> mu(L), var(L);
        std::vector<Matrix> post_act(L);       // after ReLU, before dropout
        std::vector<Matrix> drop_mask(L);      // dropout scale factors
        inputs[0] = batch;

        Rng mask_rng(derive_seed(mask_seed, "dropout"));
        const double keep = 1.0 - cfg_.dropout_p;

        for (std::size_t l = 0; l < L; ++l) {
            pre_bn[l] = affine(hidden_[l], inputs[l]);
            const std::size_t H = pre_bn[l].cols;
            mu[l].assign(H, 0.0);
            var[l].assign(H, 0.0);
            for (std::size_t i = 0; i < B; ++i)
                for (std::size_t j = 0; j < H; ++j) mu[l][j] += pre_bn[l](i, j);
            for (double& m : mu[l]) m /= static_cast<double>(B);
            for (std::size_t i = 0; i < B; ++i)
                for (std::size_t j = 0; j < H; ++j) {
                    const double d = pre_bn[l](i, j) - mu[l][j];
                    var[l][j] += d * d;
                }
            for (double& v : var[l]) v /= static_cast<double>(B);

            if (update_running_stats) {
                BatchNorm& bn = norms_[l];
                const double unbias =
                    B > 1 ? static_cast<double>(B) / static_cast<double>(B - 1) : 1.0;
                for (std::size_t j = 0; j < H; ++j) {
                    bn.running_mean[j] =
                        (1.0 - kBnMomentum) * bn.running_mean[j] + kBnMomentum * mu[l][j];
                    bn.running_var[j] =
                        (1.0 - kBnMomentum) * bn.running_var[j] + kBnMomentum * var[l][j] * unbias;
                }
            }

            xhat[l] = Matrix(B, H);
            post_act[l] = Matrix(B, H);
            drop_mask[l] = Matrix(B, H);
            Matrix next(B, H);
            const BatchNorm& bn = norms_[l];
            for (std::size_t i = 0; i < B; ++i) {
                for (std::size_t j = 0; j < H; ++j) {
                    const double xh = (pre_bn[l](i, j) - mu[l][j]) / std::sqrt(var[l][j] + kBnEps);
                    xhat[l](i, j) = xh;
                    const double act = bn.gamma[j] * xh + bn.beta[j];
                    const double relu = act > 0.0 ? act : 0.0;
                    post_act[l](i, j) = relu;
                    double scale = 1.0;
                    if (cfg_.dropout_p > 0.0)
                        scale = mask_rng.uniform() < keep ? 1.0 / keep : 0.0;
                    drop_mask[l](i, j) = scale;
                    next(i, j) = relu * scale;
                }
            }
            inputs[l + 1] = std::move(next);
        }

        Matrix logits = affine(output_, inputs[L]);
        Matrix pmf = logits;  // softmax in place
        for (std::size_t i = 0; i < B; ++i) {
            double mx = pmf(i, 0);
            for (std::size_t j = 1; j < n_out; ++j) mx = std::max(mx, pmf(i, j));
            double sum = 0.0;
            for (std::size_t j = 0; j < n_out; ++j) {
                pmf(i, j) = std::exp(pmf(i, j) - mx);
                sum += pmf(i, j);
            }
            for (std::size_t j = 0; j < n_out; ++j) pmf(i, j) /= sum;
        }

        // CDF entries and loss. The terminal entry is identically 1 and
        // contributes no loss and no gradient.
        double loss = 0.0;
        Matrix dpmf(B, n_out);
        const double denom = static_cast<double>(n_out - 1) * static_cast<double>(B);
        for (std::size_t i = 0; i < B; ++i) {
            std::vector<double> q(n_out);
            double acc = 0.0;
            for (std::size_t j = 0; j < n_out; ++j) {
                acc += pmf(i, j);
                q[j] = acc;
            }
            std::vector<double> dq(n_out, 0.0);
            for (std::size_t j = 0; j + 1 < n_out; ++j) {
                const double p = targets[i].values[j];
                loss -= detail::xlogy_clamped(p, q[j]) +
                        detail::xlogy_clamped(1.0 - p, 1.0 - q[j]);
                double d = 0.0;
                if (p != 0.0 && q[j] > kProbEps) d -= p / q[j];
                if (p != 1.0 && 1.0 - q[j] > kProbEps) d += (1.0 - p) / (1.0 - q[j]);
                dq[j] = d / denom;
            }
            // dL/dpmf_j = sum_{m >= j, m < n-1} dL/dq_m
            double suffix = 0.0;
            for (std::size_t j = n_out; j-- > 0;) {
                if (j + 1 < n_out) suffix += dq[j];
                dpmf(i, j) = suffix;
            }
        }
        loss /= denom;

        // softmax backward: dlogit_j = p_j * (dpmf_j - sum_m dpmf_m p_m)
        Matrix dlogits(B, n_out);
        for (std::size_t i = 0; i < B; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < n_out; ++j) dot += dpmf(i, j) * pmf(i, j);
            for (std::size_t j = 0; j < n_out; ++j)
                dlogits(i, j) = pmf(i, j) * (dpmf(i, j) - dot);
        }

        Gradients g;
        g.dw_hidden.resize(L);
        g.db_hidden.resize(L);
        g.dgamma.resize(L);
        g.dbeta.resize(L);

        Matrix dx = affine_backward(output_, inputs[L], dlogits, g.dw_out, g.db_out);

        for (std::size_t l = L; l-- > 0;) {
            const std::size_t H = pre_bn[l].cols;
            // dropout + ReLU backward
            for (std::size_t i = 0; i < B; ++i)
                for (std::size_t j = 0; j < H; ++j) {
                    double d = dx(i, j) * drop_mask[l](i, j);
                    dx(i, j) = post_act[l](i, j) > 0.0 ? d : 0.0;
                }
            // batch-norm backward (batch statistics)
            const BatchNorm& bn = norms_[l];
            g.dgamma[l].assign(H, 0.0);
            g.dbeta[l].assign(H, 0.0);
            std::vector<double> sum_dxhat(H, 0.0), sum_dxhat_xhat(H, 0.0);
            for (std::size_t i = 0; i < B; ++i)
                for (std::size_t j = 0; j < H; ++j) {
                    const double dxh = dx(i, j) * bn.gamma[j];
                    g.dgamma[l][j] += dx(i, j) * xhat[l](i, j);
                    g.dbeta[l][j] += dx(i, j);
                    sum_dxhat[j] += dxh;
                    sum_dxhat_xhat[j] += dxh * xhat[l](i, j);
                }
            Matrix dz(B, H);
            for (std::size_t i = 0; i < B; ++i)
                for (std::size_t j = 0; j < H; ++j) {
                    const double dxh = dx(i, j) * bn.gamma[j];
                    const double inv_std = 1.0 / std::sqrt(var[l][j] + kBnEps);
                    dz(i, j) = inv_std *
                               (dxh - sum_dxhat[j] / static_cast<double>(B) -
                                xhat[l](i, j) * sum_dxhat_xhat[j] / static_cast<double>(B));
                }
            dx = affine_backward(hidden_[l], inputs[l], dz, g.dw_hidden[l], g.db_hidden[l]);
        }

        return {loss, std::move(g)};
    }

    /// Mean CDF loss of a dataset in eval mode.
    double eval_loss(const std::vector<Sample>& data) const {
        if (data.empty()) throw std::invalid_argument("eval_loss: empty dataset");
        double acc = 0.0;
        for (const Sample& s : data) acc += cumulative_log_loss(s.y, predict(s.x));
        return acc / static_cast<double>(data.size());
    }

    static constexpr double kBnEps = 1e-5;
    static constexpr double kBnMomentum = 0.1;

private:
    static Dense make_dense(int in, int out, Rng& rng) {
        Dense d;
        d.w = Matrix(static_cast<std::size_t>(out), static_cast<std::size_t>(in));
        d.b.assign(static_cast<std::size_t>(out), 0.0);
        const double std_dev = std::sqrt(2.0 / static_cast<double>(in));
        for (double& x : d.w.a) x = rng.normal() * std_dev;
        return d;
    }

    void check_input(const Matrix& batch) const {
        if (batch.cols != static_cast<std::size_t>(cfg_.input_dim))
            throw std::invalid_argument("forward: batch has " + std::to_string(batch.cols) +
                                        " columns, expected " + std::to_string(cfg_.input_dim));
        if (batch.rows == 0) throw std::invalid_argument("forward: empty batch");
    }

    static Matrix affine(const Dense& d, const Matrix& x) {
        Matrix y(x.rows, d.w.rows);
        for (std::size_t i = 0; i < x.rows; ++i) {
            const double* xi = x.row(i);
            double* yi = y.row(i);
            for (std::size_t o = 0; o < d.w.rows; ++o) {
                const double* wo = d.w.row(o);
                double acc = d.b[o];
                for (std::size_t k = 0; k < x.cols; ++k) acc += wo[k] * xi[k];
                yi[o] = acc;
            }
        }
        return y;
    }

    /// Accumulates dW = dy^T x and db, returns dx = dy W.
    static Matrix affine_backward(const Dense& d, const Matrix& x, const Matrix& dy, Matrix& dw,
                                  std::vector<double>& db) {
        dw = Matrix(d.w.rows, d.w.cols);
        db.assign(d.b.size(), 0.0);
        Matrix dx(x.rows, x.cols);
        for (std::size_t i = 0; i < x.rows; ++i) {
            const double* xi = x.row(i);
            const double* dyi = dy.row(i);
            double* dxi = dx.row(i);
            for (std::size_t o = 0; o < d.w.rows; ++o) {
                const double g = dyi[o];
                if (g == 0.0) continue;
                db[o] += g;
                double* dwo = dw.row(o);
                const double* wo = d.w.row(o);
                for (std::size_t k = 0; k < x.cols; ++k) {
                    dwo[k] += g * xi[k];
                    dxi[k] += g * wo[k];
                }
            }
        }
        return dx;
    }

    /// softmax rows -> prefix sums, clamped into exact CDF form.
    static void cdf_head(Matrix& logits) {
        for (std::size_t i = 0; i < logits.rows; ++i) {
            double* r = logits.row(i);
            double mx = r[0];
            for (std::size_t j = 1; j < logits.cols; ++j) mx = std::max(mx, r[j]);
            double sum = 0.0;
            for (std::size_t j = 0; j < logits.cols; ++j) {
                r[j] = std::exp(r[j] - mx);
                sum += r[j];
            }
            double acc = 0.0;
            for (std::size_t j = 0; j < logits.cols; ++j) {
                acc += r[j] / sum;
                r[j] = std::min(acc, 1.0);
            }
            r[logits.cols - 1] = 1.0;
        }
    }

    MlpConfig cfg_;
    std::vector<Dense> hidden_;
    std::vector<BatchNorm> norms_;
    Dense output_;
};

/// AdamW moment buffers; step counts from zero.
struct AdamWState {
    std::vector<double> m, v;
    long step = 0;

    explicit AdamWState(const Network& net) {
        m.assign(net.parameter_count(), 0.0);
        v.assign(net.parameter_count(), 0.0);
    }
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

namespace detail {

inline std::vector<const double*> flatten_gradients(const Network::Gradients& g) {
    std::vector<const double*> out;
    auto add = [&out](const std::vector<double>& v) {
        for (const double& x : v) out.push_back(&x);
    };
    for (std::size_t l = 0; l < g.dw_hidden.size(); ++l) {
        add(g.dw_hidden[l].a);
        add(g.db_hidden[l]);
        add(g.dgamma[l]);
        add(g.dbeta[l]);
    }
    add(g.dw_out.a);
    add(g.db_out);
    return out;
}

}  // namespace detail

/// One AdamW update: decoupled weight decay (parameters scaled by
/// 1 - lr*wd before the Adam step), then bias-corrected Adam.
inline void adamw_step(Network& net, const Network::Gradients& grads, AdamWState& state,
                       const MlpConfig& cfg) {
    std::vector<double*> params = net.parameters();
    std::vector<const double*> gs = detail::flatten_gradients(grads);
    if (params.size() != gs.size() || params.size() != state.m.size())
        throw std::invalid_argument("adamw_step: parameter/gradient layout mismatch");
    ++state.step;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
    const double decay = 1.0 - cfg.learning_rate * cfg.weight_decay;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = *gs[i];
        *params[i] *= decay;
        state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * g;
        state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        *params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + kAdamEps);
    }
}

/// Minibatch training with early stopping on the validation loss; returns
/// the parameters from the best validation epoch. Deterministic given
/// (config.seed, data).
inline std::pair<Network, TrainReport> train(const MlpConfig& config,
                                             const std::vector<Sample>& train_set,
                                             const std::vector<Sample>& val_set) {
    config.validate();
    if (train_set.empty() || val_set.empty())
        throw std::invalid_argument("train: train and validation sets must be nonempty");

    Network net(config, config.seed);
    AdamWState opt(net);
    Network best = net;
    double best_val = net.eval_loss(val_set);
    int best_epoch = 0;
    TrainReport report;
    report.best_val_loss = best_val;

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    const std::size_t B = static_cast<std::size_t>(config.batch_size);
    int since_best = 0;
    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(config.seed, "epoch_shuffle", {static_cast<std::uint64_t>(epoch)}));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += B) {
            const std::size_t stop = std::min(order.size(), start + B);
            Matrix batch(stop - start, static_cast<std::size_t>(config.input_dim));
            std::vector<Cdf> targets;
            targets.reserve(stop - start);
            for (std::size_t i = start; i < stop; ++i) {
                const Sample& s = train_set[order[i]];
                std::copy(s.x.begin(), s.x.end(), batch.row(i - start));
                targets.push_back(s.y);
            }
            const std::uint64_t mask_seed =
                derive_seed(config.seed, "dropout_mask",
                            {static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(start)});
            auto [loss, grads] = net.loss_and_grad(batch, targets, mask_seed);
            adamw_step(net, grads, opt, config);
            epoch_loss += loss;
            ++batches;
        }
        report.final_train_loss = epoch_loss / static_cast<double>(batches);
        report.epochs_run = epoch + 1;

        const double val = net.eval_loss(val_set);
        if (val < best_val) {
            best_val = val;
            best = net;
            best_epoch = epoch + 1;
            since_best = 0;
        } else {
            ++since_best;
            if (since_best >= config.patience) {
                report.stopped_early = true;
                break;
            }
        }
    }
    (void)best_epoch;
    report.best_val_loss = best_val;
    return {std::move(best), report};
}

/// Fold assignment, out-of-fold losses and the per-fold networks from
/// k-fold cross validation. Every unit is scored exactly once, by the
/// network that did not see it. Early stopping uses a val_fraction
/// carve-out of the training folds, never the held-out fold.
struct KFoldResult {
    std::vector<int> fold_of_unit;
    std::vector<double> per_unit_loss;
    std::vector<Network> networks;
};

inline KFoldResult kfold_cv(const std::vector<Sample>& dataset, int k, const MlpConfig& config) {
    if (k < 2) throw std::invalid_argument("kfold_cv: k >= 2");
    if (static_cast<std::size_t>(k) > dataset.size())
        throw std::invalid_argument("kfold_cv: k exceeds dataset size");

    const std::size_t n = dataset.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(config.seed, "kfold_shuffle"));
    rng.shuffle(order);

    KFoldResult result;
    result.fold_of_unit.assign(n, -1);
    result.per_unit_loss.assign(n, 0.0);
    result.networks.resize(static_cast<std::size_t>(k));

    // Contiguous folds over the shuffled order; sizes differ by at most 1.
    std::vector<std::size_t> fold_start(static_cast<std::size_t>(k) + 1, 0);
    for (int f = 0; f < k; ++f)
        fold_start[static_cast<std::size_t>(f) + 1] =
            fold_start[static_cast<std::size_t>(f)] +
            n / static_cast<std::size_t>(k) +
            (static_cast<std::size_t>(f) < n % static_cast<std::size_t>(k) ? 1 : 0);

    for (int f = 0; f < k; ++f) {
        const std::size_t lo = fold_start[static_cast<std::size_t>(f)];
        const std::size_t hi = fold_start[static_cast<std::size_t>(f) + 1];
        std::vector<Sample> rest;
        rest.reserve(n - (hi - lo));
        for (std::size_t i = 0; i < n; ++i) {
            if (i >= lo && i < hi) {
                result.fold_of_unit[order[i]] = f;
            } else {
                rest.push_back(dataset[order[i]]);
            }
        }
        const std::size_t n_val = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(config.val_fraction *
                                                  static_cast<double>(rest.size()))));
        if (n_val >= rest.size())
            throw std::invalid_argument("kfold_cv: training folds too small for validation split");
        std::vector<Sample> val_set(rest.end() - static_cast<std::ptrdiff_t>(n_val), rest.end());
        rest.resize(rest.size() - n_val);

        MlpConfig fold_cfg = config;
        fold_cfg.seed = derive_seed(config.seed, "kfold_train", {static_cast<std::uint64_t>(f)});
        auto [net, rep] = train(fold_cfg, rest, val_set);
        (void)rep;
        for (std::size_t i = lo; i < hi; ++i) {
            const Sample& s = dataset[order[i]];
            result.per_unit_loss[order[i]] = cumulative_log_loss(s.y, net.predict(s.x));
        }
        result.networks[static_cast<std::size_t>(f)] = std::move(net);
    }
    return result;
}

}  // namespace ordagg
