#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ordagg/feedback.hpp"
#include "ordagg/isotonic.hpp"
#include "ordagg/losses.hpp"
#include "ordagg/policies.hpp"
#include "ordagg/stats.hpp"

namespace ordagg {

/// Mean loss per (environment, K); the Figure-2-style raw material for
/// bootstrap intervals and matching curves.
struct LossCurve {
    std::string policy;
    std::vector<int> k_values;
    std::vector<int> env_ids;
    std::vector<std::vector<double>> per_env_loss;  // envs x K
    std::vector<double> mean_loss;                  // column means

    void finalize() {
        mean_loss.assign(k_values.size(), 0.0);
        for (const auto& row : per_env_loss)
            for (std::size_t j = 0; j < row.size(); ++j) mean_loss[j] += row[j];
        for (double& v : mean_loss) v /= static_cast<double>(per_env_loss.size());
    }
};

struct BootstrapConfig {
    int resamples = 1000;
    double confidence = 0.95;
    std::uint64_t seed = 0;

    void validate() const {
        if (resamples < 1) throw std::invalid_argument("bootstrap: resamples >= 1");
        if (!(confidence > 0.0 && confidence < 1.0))
            throw std::invalid_argument("bootstrap: confidence in (0,1)");
    }
};

struct MatchingCurve {
    std::vector<double> grid;        // reference K values
    std::vector<double> k_required;  // challenger K to match the reference
    std::vector<double> ci_low, ci_high;
    std::vector<bool> unattained;    // target never reached inside [K_min, K_max]
};

/// Policy configurations accepted by run_experiment.
struct RegAvgSpec {
    Cdf q0;
    std::map<int, double> gamma_by_k;
};
struct SlSpec {
    MlpConfig config;
    std::uint64_t base_seed = 0;
    int folds = 5;
    int jobs = 1;
};
struct SlbSpec {
    MlpConfig config;
    std::uint64_t base_seed = 0;
    int folds = 5;
    int jobs = 1;
};
using PolicySpec = std::variant<RegAvgSpec, SlSpec, SlbSpec>;

namespace detail {

/// Mean loss per (environment, K) for an arbitrary predictor callback.
inline LossCurve loss_curve_from_predictor(
    const FeedbackMatrix& m, const WorkerSplit& split, const std::vector<Environment>& envs,
    const std::vector<int>& k_values, LossKind kind, const std::string& name,
    const std::function<Cdf(const Environment&, int, std::size_t)>& predict) {
    if (envs.empty()) throw std::invalid_argument("run_experiment: no environments");
    for (int k : k_values)
        if (k < 1 || k > static_cast<int>(split.input_set.size()))
            throw std::invalid_argument("run_experiment: K outside [1, L]");
    const std::vector<std::size_t> units = evaluable_units(m, split, kind);
    std::vector<Cdf> targets;
    targets.reserve(units.size());
    for (std::size_t t : units) targets.push_back(output_cdf(m, split, t));

    LossCurve curve;
    curve.policy = name;
    curve.k_values = k_values;
    for (const Environment& env : envs) {
        curve.env_ids.push_back(env.id);
        std::vector<double> row;
        row.reserve(k_values.size());
        for (int k : k_values) {
            double acc = 0.0;
            for (std::size_t u = 0; u < units.size(); ++u)
                acc += evaluate_loss(kind, targets[u], predict(env, k, units[u]), m.scale());
            row.push_back(acc / static_cast<double>(units.size()));
        }
        curve.per_env_loss.push_back(std::move(row));
    }
    curve.finalize();
    return curve;
}

}  // namespace detail

/// Evaluate one policy over (environments x K x units). Supervised policies
/// are trained here, per environment and K, with out-of-fold predictions.
/// K and K+1 share a permutation prefix by construction, so the input
/// worker sets are nested.
inline LossCurve run_experiment(const FeedbackMatrix& m, const WorkerSplit& split,
                                const std::vector<Environment>& envs, const PolicySpec& spec,
                                const std::vector<int>& k_values, LossKind kind) {
    if (std::holds_alternative<RegAvgSpec>(spec)) {
        const auto& ra = std::get<RegAvgSpec>(spec);
        return detail::loss_curve_from_predictor(
            m, split, envs, k_values, kind, "regavg",
            [&](const Environment& env, int k, std::size_t unit) {
                auto it = ra.gamma_by_k.find(k);
                if (it == ra.gamma_by_k.end())
                    throw std::invalid_argument("regavg: no tuned gamma for K=" +
                                                std::to_string(k));
                return regavg_predict(ra.q0, it->second, input_scores(m, split, env, k, unit),
                                      m.scale());
            });
    }
    if (std::holds_alternative<SlSpec>(spec)) {
        const auto& sl = std::get<SlSpec>(spec);
        SlPolicy policy;
        policy.fit(m, split, envs, k_values, sl.config, sl.base_seed, sl.folds, sl.jobs);
        return detail::loss_curve_from_predictor(
            m, split, envs, k_values, kind, "sl",
            [&](const Environment& env, int k, std::size_t unit) {
                return policy.predict(m, split, env, k, unit);
            });
    }
    const auto& slb = std::get<SlbSpec>(spec);
    SlbPolicy policy;
    policy.fit(m, split, envs, k_values, slb.config, slb.base_seed, slb.folds, slb.jobs);
    return detail::loss_curve_from_predictor(
        m, split, envs, k_values, kind, "slb",
        [&](const Environment& env, int k, std::size_t unit) {
            return policy.predict(m, split, env, k, unit);
        });
}

namespace detail {

/// Resampled environment row indices for bootstrap draw b. Rows are
/// addressed through an id-sorted view so the result does not depend on
/// row order in the curve.
inline std::vector<std::size_t> bootstrap_rows(const std::vector<int>& env_ids,
                                               std::uint64_t seed, int b) {
    std::vector<std::size_t> by_id(env_ids.size());
    std::iota(by_id.begin(), by_id.end(), 0);
    std::sort(by_id.begin(), by_id.end(),
              [&](std::size_t i, std::size_t j) { return env_ids[i] < env_ids[j]; });
    Rng rng(derive_seed(seed, "bootstrap_resample", {static_cast<std::uint64_t>(b)}));
    std::vector<std::size_t> rows(env_ids.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        rows[i] = by_id[rng.below(by_id.size())];
    return rows;
}

inline std::vector<double> column_means(const std::vector<std::vector<double>>& table,
                                        const std::vector<std::size_t>& rows) {
    std::vector<double> means(table.empty() ? 0 : table[0].size(), 0.0);
    for (std::size_t r : rows)
        for (std::size_t j = 0; j < means.size(); ++j) means[j] += table[r][j];
    for (double& v : means) v /= static_cast<double>(rows.size());
    return means;
}

}  // namespace detail

/// Percentile interval per K from resampling environments with replacement.
inline std::vector<std::pair<double, double>> bootstrap_ci(const LossCurve& curve,
                                                           const BootstrapConfig& config) {
    config.validate();
    if (curve.per_env_loss.empty()) throw std::invalid_argument("bootstrap_ci: no environments");
    const double lo_q = (1.0 - config.confidence) / 2.0;
    const double hi_q = 1.0 - lo_q;
    std::vector<std::vector<double>> draws(curve.k_values.size(),
                                           std::vector<double>(static_cast<std::size_t>(config.resamples)));
    for (int b = 0; b < config.resamples; ++b) {
        const auto rows = detail::bootstrap_rows(curve.env_ids, config.seed, b);
        const auto means = detail::column_means(curve.per_env_loss, rows);
        for (std::size_t j = 0; j < means.size(); ++j)
            draws[j][static_cast<std::size_t>(b)] = means[j];
    }
    std::vector<std::pair<double, double>> out;
    out.reserve(draws.size());
    for (std::size_t j = 0; j < draws.size(); ++j) {
        std::sort(draws[j].begin(), draws[j].end());
        // Percentile interval, widened to contain the point estimate.
        out.emplace_back(std::min(percentile_sorted(draws[j], lo_q), curve.mean_loss[j]),
                         std::max(percentile_sorted(draws[j], hi_q), curve.mean_loss[j]));
    }
    return out;
}

namespace detail {

/// Piecewise-linear interpolation of (k_values, losses) at x.
inline double interp(const std::vector<int>& ks, const std::vector<double>& loss, double x) {
    if (x <= ks.front()) return loss.front();
    if (x >= ks.back()) return loss.back();
    std::size_t hi = 1;
    while (static_cast<double>(ks[hi]) < x) ++hi;
    const double x0 = ks[hi - 1], x1 = ks[hi];
    const double t = (x - x0) / (x1 - x0);
    return loss[hi - 1] + t * (loss[hi] - loss[hi - 1]);
}

/// Smallest K in [K_min, K_max] where the interpolated (nonincreasing)
/// challenger curve first drops to the target, or K_max flagged unattained.
inline std::pair<double, bool> invert_first_crossing(const std::vector<int>& ks,
                                                     const std::vector<double>& loss,
                                                     double target) {
    if (loss.front() <= target) return {static_cast<double>(ks.front()), false};
    for (std::size_t i = 1; i < ks.size(); ++i) {
        if (loss[i] <= target) {
            const double x0 = ks[i - 1], x1 = ks[i];
            const double y0 = loss[i - 1], y1 = loss[i];
            if (y0 == y1) return {x1, false};
            return {x0 + (y0 - target) / (y0 - y1) * (x1 - x0), false};
        }
    }
    return {static_cast<double>(ks.back()), true};
}

inline std::vector<double> matching_inversion(const std::vector<int>& ks,
                                              std::vector<double> ref_mean,
                                              std::vector<double> chal_mean,
                                              const std::vector<double>& grid,
                                              std::vector<bool>* unattained) {
    // Inversion presumes losses decrease with K; repair empirical wiggles.
    ref_mean = pava_nonincreasing(std::move(ref_mean));
    chal_mean = pava_nonincreasing(std::move(chal_mean));
    std::vector<double> required(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double target = interp(ks, ref_mean, grid[i]);
        auto [k, miss] = invert_first_crossing(ks, chal_mean, target);
        required[i] = k;
        if (unattained) (*unattained)[i] = miss;
    }
    return required;
}

}  // namespace detail

/// How many individuals the challenger needs to match the reference at
/// each grid point, with environment-bootstrap confidence bands. Both
/// curves must come from the same environments and K values.
inline MatchingCurve matching_curve(const LossCurve& ref, const LossCurve& challenger,
                                    int grid_size, const BootstrapConfig& bootstrap) {
    if (ref.k_values != challenger.k_values)
        throw std::invalid_argument("matching_curve: k_values mismatch");
    if (ref.env_ids != challenger.env_ids)
        throw std::invalid_argument("matching_curve: environment sets mismatch");
    if (grid_size < 2) throw std::invalid_argument("matching_curve: grid_size >= 2");
    bootstrap.validate();

    MatchingCurve out;
    const double k_min = ref.k_values.front();
    const double k_max = ref.k_values.back();
    out.grid.resize(static_cast<std::size_t>(grid_size));
    for (int i = 0; i < grid_size; ++i)
        out.grid[static_cast<std::size_t>(i)] =
            k_min + (k_max - k_min) * static_cast<double>(i) / static_cast<double>(grid_size - 1);
    out.unattained.assign(out.grid.size(), false);
    out.k_required = detail::matching_inversion(ref.k_values, ref.mean_loss, challenger.mean_loss,
                                                out.grid, &out.unattained);

    std::vector<std::vector<double>> draws(out.grid.size(),
                                           std::vector<double>(static_cast<std::size_t>(bootstrap.resamples)));
    for (int b = 0; b < bootstrap.resamples; ++b) {
        const auto rows = detail::bootstrap_rows(ref.env_ids, bootstrap.seed, b);
        const auto req = detail::matching_inversion(
            ref.k_values, detail::column_means(ref.per_env_loss, rows),
            detail::column_means(challenger.per_env_loss, rows), out.grid, nullptr);
        for (std::size_t i = 0; i < req.size(); ++i) draws[i][static_cast<std::size_t>(b)] = req[i];
    }
    const double lo_q = (1.0 - bootstrap.confidence) / 2.0;
    out.ci_low.resize(out.grid.size());
    out.ci_high.resize(out.grid.size());
    for (std::size_t i = 0; i < out.grid.size(); ++i) {
        std::sort(draws[i].begin(), draws[i].end());
        // Percentile bands widened to contain the point estimate.
        out.ci_low[i] = std::min(percentile_sorted(draws[i], lo_q), out.k_required[i]);
        out.ci_high[i] = std::max(percentile_sorted(draws[i], 1.0 - lo_q), out.k_required[i]);
    }
    return out;
}

/// Advantage of a challenger that matches the reference's loss at ref_k
/// while using only challenger_k individuals.
inline double advantage(double ref_k, double challenger_k) {
    if (!(ref_k > 0.0) || !(challenger_k > 0.0))
        throw std::invalid_argument("advantage: inputs must be positive");
    return ref_k / challenger_k;
}

}  // namespace ordagg
