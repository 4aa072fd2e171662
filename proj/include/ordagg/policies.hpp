#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "ordagg/feedback.hpp"
#include "ordagg/isotonic.hpp"
#include "ordagg/losses.hpp"
#include "ordagg/mlp.hpp"
#include "ordagg/stats.hpp"

namespace ordagg {

/// Regularized averaging: Q(y) = gamma * Q0(y) + (1-gamma) * ecdf_K(y).
inline Cdf regavg_predict(const Cdf& q0, double gamma, const std::vector<int>& raw_scores,
                          const OrdinalScale& scale) {
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw std::invalid_argument("regavg_predict: gamma must be in [0,1]");
    if (raw_scores.empty()) throw std::invalid_argument("regavg_predict: empty score multiset");
    if (q0.size() != scale.size()) throw std::invalid_argument("regavg_predict: scale mismatch");
    const Cdf emp = empirical_cdf(raw_scores, scale);
    std::vector<double> out(scale.size());
    for (std::size_t i = 0; i + 1 < out.size(); ++i)
        out[i] = gamma * q0.values[i] + (1.0 - gamma) * emp.values[i];
    out.back() = 1.0;
    return Cdf(std::move(out));
}

/// The ten-point regularization grid 0.1, 0.2, ..., 1.0.
inline std::vector<double> default_gamma_grid() {
    std::vector<double> g;
    for (int i = 1; i <= 10; ++i) g.push_back(static_cast<double>(i) / 10.0);
    return g;
}

struct GammaTuneResult {
    std::map<int, double> gamma_by_k;
    std::map<int, double> train_loss_by_k;
};

/// Units whose target CDF carries no non-neutral mass are excluded from
/// mean aggregation under the neutral-dropping preference loss; the set
/// depends only on the targets, so every policy sees the same units.
inline std::vector<std::size_t> evaluable_units(const FeedbackMatrix& m, const WorkerSplit& split,
                                                LossKind kind) {
    std::vector<std::size_t> units;
    const int zi = m.scale().zero_index();
    for (std::size_t t = 0; t < m.num_units(); ++t) {
        if (kind == LossKind::PrefIgnoreNeutral && zi >= 0) {
            const Pmf p = pmf_from_cdf(output_cdf(m, split, t));
            double nonneutral = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i)
                if (static_cast<int>(i) != zi) nonneutral += p.values[i];
            if (nonneutral <= 0.0) continue;
        }
        units.push_back(t);
    }
    if (units.empty()) throw std::invalid_argument("no evaluable units for this loss");
    return units;
}

/// For each K, pick the grid gamma with the lowest mean loss over
/// (train environments x units); ties break toward more regularization.
inline GammaTuneResult tune_gamma(const FeedbackMatrix& m, const WorkerSplit& split,
                                  const std::vector<Environment>& train_envs,
                                  const std::vector<int>& k_values, LossKind kind,
                                  const std::vector<double>& grid = default_gamma_grid()) {
    if (train_envs.empty()) throw std::invalid_argument("tune_gamma: no train environments");
    if (grid.empty()) throw std::invalid_argument("tune_gamma: empty gamma grid");
    const Cdf q0 = prior_q0(m, split);
    const std::vector<std::size_t> units = evaluable_units(m, split, kind);
    std::vector<Cdf> targets;
    targets.reserve(units.size());
    for (std::size_t t : units) targets.push_back(output_cdf(m, split, t));

    GammaTuneResult result;
    for (int k : k_values) {
        std::vector<double> loss_by_gamma(grid.size(), 0.0);
        std::size_t count = 0;
        for (const Environment& env : train_envs) {
            for (std::size_t u = 0; u < units.size(); ++u) {
                const std::vector<int> scores = input_scores(m, split, env, k, units[u]);
                const Cdf emp = empirical_cdf(scores, m.scale());
                for (std::size_t gi = 0; gi < grid.size(); ++gi) {
                    const double gamma = grid[gi];
                    std::vector<double> q(m.scale().size());
                    for (std::size_t i = 0; i + 1 < q.size(); ++i)
                        q[i] = gamma * q0.values[i] + (1.0 - gamma) * emp.values[i];
                    q.back() = 1.0;
                    loss_by_gamma[gi] += evaluate_loss(kind, targets[u], Cdf(std::move(q)), m.scale());
                }
                ++count;
            }
        }
        std::size_t best = 0;
        for (std::size_t gi = 1; gi < grid.size(); ++gi)
            if (loss_by_gamma[gi] <= loss_by_gamma[best]) best = gi;  // ties -> larger gamma
        result.gamma_by_k[k] = grid[best];
        result.train_loss_by_k[k] = loss_by_gamma[best] / static_cast<double>(count);
    }
    return result;
}

/// Supervised policy: per (environment, K), an MLP ensemble from k-fold
/// cross validation mapping the K permuted input scores to the target CDF.
/// Predictions for a unit always come from the fold that held it out.
class SlPolicy {
public:
    SlPolicy() = default;

    static std::vector<Sample> build_dataset(const FeedbackMatrix& m, const WorkerSplit& split,
                                             const Environment& env, int k) {
        std::vector<Sample> data;
        data.reserve(m.num_units());
        for (std::size_t t = 0; t < m.num_units(); ++t) {
            Sample s;
            const std::vector<int> raw = input_scores(m, split, env, k, t);
            s.x.reserve(raw.size());
            for (int r : raw)
                s.x.push_back(m.scale().normalized_at(static_cast<std::size_t>(m.scale().require_index(r))));
            s.y = output_cdf(m, split, t);
            data.push_back(std::move(s));
        }
        return data;
    }

    /// Train the (environment, K) grid; independent tasks run in parallel
    /// with seeds derived per task, so the result is jobs-invariant.
    void fit(const FeedbackMatrix& m, const WorkerSplit& split,
             const std::vector<Environment>& envs, const std::vector<int>& k_values,
             const MlpConfig& base_config, std::uint64_t base_seed, int folds = 5, int jobs = 1) {
        folds_ = folds;
        struct Task {
            int env_id;
            int k;
            const Environment* env;
        };
        std::vector<Task> tasks;
        for (const Environment& env : envs)
            for (int k : k_values) tasks.push_back({env.id, k, &env});
        std::vector<KFoldResult> results(tasks.size());
        parallel_for(tasks.size(), jobs, [&](std::size_t i) {
            const Task& task = tasks[i];
            MlpConfig cfg = base_config;
            cfg.input_dim = task.k;
            cfg.output_dim = static_cast<int>(m.scale().size());
            cfg.seed = derive_seed(base_seed, "sl_policy",
                                   {static_cast<std::uint64_t>(task.env_id),
                                    static_cast<std::uint64_t>(task.k)});
            results[i] = kfold_cv(build_dataset(m, split, *task.env, task.k), folds_, cfg);
        });
        for (std::size_t i = 0; i < tasks.size(); ++i)
            fits_[{tasks[i].env_id, tasks[i].k}] = std::move(results[i]);
    }

    Cdf predict(const FeedbackMatrix& m, const WorkerSplit& split, const Environment& env, int k,
                std::size_t unit) const {
        const KFoldResult& fit = fit_for(env.id, k);
        const std::vector<int> raw = input_scores(m, split, env, k, unit);
        std::vector<double> x;
        x.reserve(raw.size());
        for (int r : raw)
            x.push_back(m.scale().normalized_at(static_cast<std::size_t>(m.scale().require_index(r))));
        const int fold = fit.fold_of_unit.at(unit);
        return fit.networks[static_cast<std::size_t>(fold)].predict(x);
    }

    const KFoldResult& fit_for(int env_id, int k) const {
        auto it = fits_.find({env_id, k});
        if (it == fits_.end())
            throw std::runtime_error("sl policy: no trained network for environment " +
                                     std::to_string(env_id) + ", K=" + std::to_string(k));
        return it->second;
    }

    const std::map<std::pair<int, int>, KFoldResult>& fits() const { return fits_; }
    std::map<std::pair<int, int>, KFoldResult>& fits() { return fits_; }
    int folds() const { return folds_; }
    void set_folds(int folds) { folds_ = folds; }

private:
    std::map<std::pair<int, int>, KFoldResult> fits_;
    int folds_ = 5;
};

/// Threshold-restricted probe policy: one predictor per non-top scale
/// point y, trained on the binarized vector (1[Y_k <= y])_k to predict the
/// scalar target CDF element at y. Per-threshold outputs are assembled and
/// projected to a valid CDF by pool-adjacent-violators.
class SlbPolicy {
public:
    SlbPolicy() = default;

    static std::vector<Sample> build_dataset(const FeedbackMatrix& m, const WorkerSplit& split,
                                             const Environment& env, int k, std::size_t threshold) {
        std::vector<Sample> data;
        data.reserve(m.num_units());
        const int cut = m.scale().raw(threshold);
        for (std::size_t t = 0; t < m.num_units(); ++t) {
            Sample s;
            const std::vector<int> raw = input_scores(m, split, env, k, t);
            s.x.reserve(raw.size());
            for (int r : raw) s.x.push_back(r <= cut ? 1.0 : 0.0);
            const Cdf target = output_cdf(m, split, t);
            s.y = Cdf({target.values[threshold], 1.0});
            data.push_back(std::move(s));
        }
        return data;
    }

    void fit(const FeedbackMatrix& m, const WorkerSplit& split,
             const std::vector<Environment>& envs, const std::vector<int>& k_values,
             const MlpConfig& base_config, std::uint64_t base_seed, int folds = 5, int jobs = 1) {
        folds_ = folds;
        num_thresholds_ = m.scale().size() - 1;
        struct Task {
            int env_id;
            int k;
            std::size_t threshold;
            const Environment* env;
        };
        std::vector<Task> tasks;
        for (const Environment& env : envs)
            for (int k : k_values)
                for (std::size_t y = 0; y < num_thresholds_; ++y)
                    tasks.push_back({env.id, k, y, &env});
        std::vector<KFoldResult> results(tasks.size());
        parallel_for(tasks.size(), jobs, [&](std::size_t i) {
            const Task& task = tasks[i];
            MlpConfig cfg = base_config;
            cfg.input_dim = task.k;
            cfg.output_dim = 2;  // scalar via the first CDF entry
            cfg.seed = derive_seed(base_seed, "slb_policy",
                                   {static_cast<std::uint64_t>(task.env_id),
                                    static_cast<std::uint64_t>(task.k),
                                    static_cast<std::uint64_t>(task.threshold)});
            results[i] =
                kfold_cv(build_dataset(m, split, *task.env, task.k, task.threshold), folds_, cfg);
        });
        for (std::size_t i = 0; i < tasks.size(); ++i)
            fits_[{tasks[i].env_id, tasks[i].k, tasks[i].threshold}] = std::move(results[i]);
    }

    Cdf predict(const FeedbackMatrix& m, const WorkerSplit& split, const Environment& env, int k,
                std::size_t unit) const {
        std::vector<double> assembled(m.scale().size(), 1.0);
        const std::vector<int> raw = input_scores(m, split, env, k, unit);
        for (std::size_t y = 0; y < num_thresholds_; ++y) {
            auto it = fits_.find({env.id, k, y});
            if (it == fits_.end())
                throw std::runtime_error("slb policy: no trained network for environment " +
                                         std::to_string(env.id) + ", K=" + std::to_string(k));
            const KFoldResult& fit = it->second;
            const int cut = m.scale().raw(y);
            std::vector<double> x;
            x.reserve(raw.size());
            for (int r : raw) x.push_back(r <= cut ? 1.0 : 0.0);
            const int fold = fit.fold_of_unit.at(unit);
            assembled[y] = fit.networks[static_cast<std::size_t>(fold)].predict(x).values[0];
        }
        return project_to_cdf(std::move(assembled));
    }

    /// Nondecreasing projection of assembled per-threshold predictions,
    /// clamped to [0,1]. The appended terminal 1 never moves because no
    /// prediction exceeds it.
    static Cdf project_to_cdf(std::vector<double> assembled) {
        assembled = pava_nondecreasing(std::move(assembled));
        for (double& v : assembled) v = std::clamp(v, 0.0, 1.0);
        return Cdf(std::move(assembled));
    }

    struct Key {
        int env_id;
        int k;
        std::size_t threshold;
        bool operator<(const Key& o) const {
            return std::tie(env_id, k, threshold) < std::tie(o.env_id, o.k, o.threshold);
        }
    };

    const std::map<Key, KFoldResult>& fits() const { return fits_; }
    std::map<Key, KFoldResult>& fits() { return fits_; }
    std::size_t num_thresholds() const { return num_thresholds_; }
    int folds() const { return folds_; }
    void set_shape(std::size_t num_thresholds, int folds) {
        num_thresholds_ = num_thresholds;
        folds_ = folds;
    }

private:
    std::map<Key, KFoldResult> fits_;
    std::size_t num_thresholds_ = 0;
    int folds_ = 5;
};

}  // namespace ordagg
