#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ordagg/distribution.hpp"
#include "ordagg/rng.hpp"
#include "ordagg/scale.hpp"

namespace ordagg {

/// Units x workers table of raw integer scores.
///
/// `repeated_pairs` lists unit index pairs (t, t') with identical task text,
/// used for the rater-noise statistic. The mask is reserved for future
/// missing-value support; v1 requires every entry present.
class FeedbackMatrix {
public:
    FeedbackMatrix(std::vector<int> scores, std::size_t num_units, std::size_t num_workers,
                   OrdinalScale scale, std::vector<std::string> unit_ids,
                   std::vector<std::string> worker_ids,
                   std::vector<std::pair<int, int>> repeated_pairs = {})
        : scores_(std::move(scores)),
          units_(num_units),
          workers_(num_workers),
          scale_(std::move(scale)),
          unit_ids_(std::move(unit_ids)),
          worker_ids_(std::move(worker_ids)),
          repeated_pairs_(std::move(repeated_pairs)) {
        if (units_ == 0 || workers_ == 0) throw std::invalid_argument("empty feedback matrix");
        if (scores_.size() != units_ * workers_)
            throw std::invalid_argument("score table size does not match dimensions");
        if (unit_ids_.size() != units_ || worker_ids_.size() != workers_)
            throw std::invalid_argument("id lists do not match dimensions");
        for (int s : scores_) scale_.require_index(s);
        for (auto [a, b] : repeated_pairs_) {
            if (a < 0 || b < 0 || a >= static_cast<int>(units_) || b >= static_cast<int>(units_))
                throw std::invalid_argument("repeated pair index out of range");
            if (a >= b) throw std::invalid_argument("repeated pair must be ordered (t < t')");
        }
    }

    std::size_t num_units() const { return units_; }
    std::size_t num_workers() const { return workers_; }
    const OrdinalScale& scale() const { return scale_; }
    const std::vector<std::string>& unit_ids() const { return unit_ids_; }
    const std::vector<std::string>& worker_ids() const { return worker_ids_; }
    const std::vector<std::pair<int, int>>& repeated_pairs() const { return repeated_pairs_; }

    int at(std::size_t unit, std::size_t worker) const {
        return scores_[unit * workers_ + worker];
    }

    std::vector<int> unit_scores(std::size_t unit, const std::vector<int>& workers) const {
        std::vector<int> out;
        out.reserve(workers.size());
        for (int w : workers) out.push_back(at(unit, static_cast<std::size_t>(w)));
        return out;
    }

private:
    std::vector<int> scores_;  // row-major, units_ x workers_
    std::size_t units_;
    std::size_t workers_;
    OrdinalScale scale_;
    std::vector<std::string> unit_ids_;
    std::vector<std::string> worker_ids_;
    std::vector<std::pair<int, int>> repeated_pairs_;
};

/// Disjoint partition of worker indices into an input set (feeds policies)
/// and an output set (defines prediction targets).
struct WorkerSplit {
    std::vector<int> input_set;
    std::vector<int> output_set;
    std::uint64_t seed = 0;
};

/// A permutation of input-set positions; the length-K prefix selects which
/// input workers a policy sees.
struct Environment {
    std::vector<int> perm;
    int id = 0;
};

/// Sample `output_size` worker indices without replacement; the complement
/// becomes the input set. Deterministic given the seed.
inline WorkerSplit split_workers(int num_workers, int output_size, std::uint64_t seed) {
    if (output_size <= 0 || output_size >= num_workers)
        throw std::invalid_argument("output_size must be in (0, num_workers)");
    std::vector<int> idx(static_cast<std::size_t>(num_workers));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(seed, "split_workers"));
    // Partial Fisher-Yates: the first output_size slots are the sample.
    for (int i = 0; i < output_size; ++i) {
        int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(num_workers - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    WorkerSplit split;
    split.seed = seed;
    split.output_set.assign(idx.begin(), idx.begin() + output_size);
    split.input_set.assign(idx.begin() + output_size, idx.end());
    std::sort(split.output_set.begin(), split.output_set.end());
    std::sort(split.input_set.begin(), split.input_set.end());
    return split;
}

/// `count` independent uniform permutations of {0..L-1}. Each environment's
/// stream is derived from (seed, its id), so the set is order-independent.
inline std::vector<Environment> sample_environments(int L, int count, std::uint64_t seed,
                                                    int id_offset = 0) {
    if (L < 1 || count < 1) throw std::invalid_argument("sample_environments: L, count >= 1");
    std::vector<Environment> envs;
    envs.reserve(static_cast<std::size_t>(count));
    for (int e = 0; e < count; ++e) {
        Environment env;
        env.id = id_offset + e;
        env.perm.resize(static_cast<std::size_t>(L));
        std::iota(env.perm.begin(), env.perm.end(), 0);
        Rng rng(derive_seed(seed, "environment", {static_cast<std::uint64_t>(env.id)}));
        rng.shuffle(env.perm);
        envs.push_back(std::move(env));
    }
    return envs;
}

/// Empirical CDF of the output-set scores for one unit.
inline Cdf output_cdf(const FeedbackMatrix& m, const WorkerSplit& split, std::size_t unit) {
    return empirical_cdf(m.unit_scores(unit, split.output_set), m.scale());
}

/// Scores of the first K input workers under an environment's permutation,
/// in permutation order.
inline std::vector<int> input_scores(const FeedbackMatrix& m, const WorkerSplit& split,
                                     const Environment& env, int k, std::size_t unit) {
    if (k < 1 || k > static_cast<int>(split.input_set.size()))
        throw std::invalid_argument("K outside [1, L]");
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        out.push_back(m.at(unit, static_cast<std::size_t>(
                                     split.input_set[static_cast<std::size_t>(env.perm[static_cast<std::size_t>(i)])])));
    return out;
}

/// Prior CDF: the mean over all units of the output-set empirical CDFs.
inline Cdf prior_q0(const FeedbackMatrix& m, const WorkerSplit& split) {
    if (split.output_set.empty()) throw std::invalid_argument("prior_q0: empty output set");
    std::vector<double> acc(m.scale().size(), 0.0);
    for (std::size_t t = 0; t < m.num_units(); ++t) {
        Cdf o = output_cdf(m, split, t);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += o.values[i];
    }
    const double T = static_cast<double>(m.num_units());
    for (double& v : acc) v /= T;
    return Cdf(std::move(acc));
}

}  // namespace ordagg
