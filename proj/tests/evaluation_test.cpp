#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "ordagg/evaluation.hpp"

using namespace ordagg;

namespace {

FeedbackMatrix make_matrix(std::vector<int> scores, std::size_t units, std::size_t workers,
                           OrdinalScale scale) {
    std::vector<std::string> uids, wids;
    for (std::size_t t = 0; t < units; ++t) uids.push_back("u" + std::to_string(t));
    for (std::size_t w = 0; w < workers; ++w) wids.push_back("w" + std::to_string(w));
    return FeedbackMatrix(std::move(scores), units, workers, std::move(scale), uids, wids);
}

LossCurve synthetic_curve(const std::string& name, const std::vector<int>& ks,
                          const std::vector<int>& env_ids,
                          const std::function<double(int env, double k)>& f) {
    LossCurve c;
    c.policy = name;
    c.k_values = ks;
    c.env_ids = env_ids;
    for (int e : env_ids) {
        std::vector<double> row;
        for (int k : ks) row.push_back(f(e, k));
        c.per_env_loss.push_back(std::move(row));
    }
    c.finalize();
    return c;
}

}  // namespace

TEST(RunExperiment, MatchedDegenerateWorldScoresZero) {
    // Output set duplicates the input set and every unit is unanimous, so
    // gamma = 0 at K = L reproduces each one-hot target exactly.
    OrdinalScale scale = OrdinalScale::binary();
    const std::size_t T = 4, W = 4;
    std::vector<int> scores(T * W);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t w = 0; w < W; ++w) scores[t * W + w] = t % 2 == 0 ? -1 : 1;
    auto m = make_matrix(scores, T, W, scale);
    WorkerSplit split{{0, 1}, {2, 3}, 0};
    auto envs = sample_environments(2, 3, 29);
    RegAvgSpec spec{prior_q0(m, split), {{2, 0.0}}};
    LossCurve curve = run_experiment(m, split, envs, spec, {2}, LossKind::CumulativeLog);
    EXPECT_EQ(curve.policy, "regavg");
    for (const auto& row : curve.per_env_loss)
        for (double v : row) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(RunExperiment, ShapeAndMeanConsistency) {
    Rng rng(31);
    OrdinalScale scale = OrdinalScale::five_point();
    const std::size_t T = 12, W = 6;
    std::vector<int> scores(T * W);
    for (int& s : scores) s = scale.raw(rng.below(scale.size()));
    auto m = make_matrix(scores, T, W, scale);
    WorkerSplit split{{0, 1, 2}, {3, 4, 5}, 0};
    auto envs = sample_environments(3, 4, 37);
    std::map<int, double> gammas{{1, 0.5}, {2, 0.5}, {3, 0.5}};
    RegAvgSpec spec{prior_q0(m, split), gammas};
    LossCurve curve = run_experiment(m, split, envs, spec, {1, 2, 3}, LossKind::CumulativeLog);
    ASSERT_EQ(curve.per_env_loss.size(), 4u);
    for (const auto& row : curve.per_env_loss) ASSERT_EQ(row.size(), 3u);
    for (std::size_t j = 0; j < curve.k_values.size(); ++j) {
        double acc = 0.0;
        for (const auto& row : curve.per_env_loss) acc += row[j];
        EXPECT_NEAR(curve.mean_loss[j], acc / 4.0, 1e-12);
    }
    EXPECT_THROW(run_experiment(m, split, envs, spec, {9}, LossKind::CumulativeLog),
                 std::invalid_argument);
}

TEST(RunExperiment, NestedPrefixProperty) {
    // For a fixed environment the worker set at K is a prefix of K+1.
    auto envs = sample_environments(10, 5, 41);
    WorkerSplit split;
    for (int i = 0; i < 10; ++i) split.input_set.push_back(i);
    for (const Environment& env : envs) {
        for (int k = 1; k < 10; ++k) {
            std::set<int> small, large;
            for (int i = 0; i < k; ++i)
                small.insert(split.input_set[static_cast<std::size_t>(env.perm[static_cast<std::size_t>(i)])]);
            for (int i = 0; i < k + 1; ++i)
                large.insert(split.input_set[static_cast<std::size_t>(env.perm[static_cast<std::size_t>(i)])]);
            for (int w : small) EXPECT_TRUE(large.count(w));
        }
    }
}

TEST(Bootstrap, IdenticalEnvironmentsGiveZeroWidth) {
    LossCurve c = synthetic_curve("x", {2, 3}, {0, 1, 2},
                                  [](int, double k) { return 1.0 / k; });
    BootstrapConfig cfg{500, 0.95, 7};
    auto ci = bootstrap_ci(c, cfg);
    ASSERT_EQ(ci.size(), 2u);
    for (std::size_t j = 0; j < ci.size(); ++j) {
        EXPECT_DOUBLE_EQ(ci[j].first, c.mean_loss[j]);
        EXPECT_DOUBLE_EQ(ci[j].second, c.mean_loss[j]);
    }
}

TEST(Bootstrap, TwoEnvironmentEnumeration) {
    // With 2 environments the resampled mean takes values {x0, mid, x1}
    // with probabilities {1/4, 1/2, 1/4}; sampled percentiles must match
    // the enumerated quantiles within 1%.
    const double x0 = 1.0, x1 = 3.0;
    LossCurve c = synthetic_curve("x", {2}, {0, 1},
                                  [&](int e, double) { return e == 0 ? x0 : x1; });
    BootstrapConfig cfg{100000, 0.95, 11};
    auto ci = bootstrap_ci(c, cfg);
    EXPECT_NEAR(ci[0].first, x0, 0.01 * x0);   // 2.5th percentile -> min pattern
    EXPECT_NEAR(ci[0].second, x1, 0.01 * x1);  // 97.5th percentile -> max pattern
}

TEST(Bootstrap, IntervalContainsPointEstimateForSymmetricToyData) {
    const double x0 = 2.0, x1 = 4.0;
    LossCurve c = synthetic_curve("x", {2, 5}, {0, 1},
                                  [&](int e, double k) { return (e == 0 ? x0 : x1) / k; });
    for (int resamples : {1, 2, 3, 8, 64, 1024}) {
        BootstrapConfig cfg{resamples, 0.95, 13};
        auto ci = bootstrap_ci(c, cfg);
        for (std::size_t j = 0; j < ci.size(); ++j) {
            EXPECT_LE(ci[j].first, c.mean_loss[j] + 1e-12);
            EXPECT_GE(ci[j].second, c.mean_loss[j] - 1e-12);
        }
    }
}

TEST(Bootstrap, DeterministicAndRowOrderInvariant) {
    LossCurve a = synthetic_curve("x", {2, 3}, {0, 1, 2},
                                  [](int e, double k) { return (e + 1.0) / k; });
    // Same environments listed in a different row order.
    LossCurve b = synthetic_curve("x", {2, 3}, {2, 0, 1},
                                  [](int e, double k) { return (e + 1.0) / k; });
    BootstrapConfig cfg{200, 0.9, 3};
    auto ca = bootstrap_ci(a, cfg);
    auto cb = bootstrap_ci(b, cfg);
    for (std::size_t j = 0; j < ca.size(); ++j) {
        EXPECT_DOUBLE_EQ(ca[j].first, cb[j].first);
        EXPECT_DOUBLE_EQ(ca[j].second, cb[j].second);
    }
    auto again = bootstrap_ci(a, cfg);
    for (std::size_t j = 0; j < ca.size(); ++j) EXPECT_DOUBLE_EQ(ca[j].first, again[j].first);
}

TEST(MatchingCurve, SelfMatchIsIdentity) {
    std::vector<int> ks;
    for (int k = 2; k <= 18; ++k) ks.push_back(k);
    LossCurve ref = synthetic_curve("ref", ks, {0, 1},
                                    [](int, double k) { return 1.0 / k; });
    BootstrapConfig boot{50, 0.95, 17};
    MatchingCurve mc = matching_curve(ref, ref, 100, boot);
    ASSERT_EQ(mc.grid.size(), 100u);
    const double step = (18.0 - 2.0) / 99.0;
    for (std::size_t i = 0; i < mc.grid.size(); ++i) {
        EXPECT_NEAR(mc.k_required[i], mc.grid[i], step + 1e-9);
        EXPECT_FALSE(mc.unattained[i]);
        EXPECT_LE(mc.ci_low[i], mc.k_required[i] + 1e-12);
        EXPECT_GE(mc.ci_high[i], mc.k_required[i] - 1e-12);
    }
}

TEST(MatchingCurve, HalvedLossCurveNeedsHalfTheWorkers) {
    // ref(K) = 1/K vs challenger(K) = 1/(2K): the analytic inversion gives
    // k_required(g) = g/2, floored at the K_min boundary of the search
    // interval.
    std::vector<int> ks;
    for (int k = 2; k <= 18; ++k) ks.push_back(k);
    LossCurve ref = synthetic_curve("ref", ks, {0, 1},
                                    [](int, double k) { return 1.0 / k; });
    LossCurve chal = synthetic_curve("chal", ks, {0, 1},
                                     [](int, double k) { return 0.5 / k; });
    BootstrapConfig boot{50, 0.95, 19};
    MatchingCurve mc = matching_curve(ref, chal, 100, boot);
    const double step = (18.0 - 2.0) / 99.0;
    for (std::size_t i = 0; i < mc.grid.size(); ++i) {
        const double oracle = std::max(2.0, mc.grid[i] / 2.0);
        EXPECT_NEAR(mc.k_required[i], oracle, step + 1e-9) << "grid point " << mc.grid[i];
        EXPECT_FALSE(mc.unattained[i]);
    }
}

TEST(MatchingCurve, UnattainedTargetsClampToKMax) {
    std::vector<int> ks{2, 3, 4};
    LossCurve ref = synthetic_curve("ref", ks, {0}, [](int, double k) { return 1.0 / k; });
    LossCurve chal = synthetic_curve("chal", ks, {0}, [](int, double k) { return 2.0 / k; });
    BootstrapConfig boot{10, 0.95, 23};
    MatchingCurve mc = matching_curve(ref, chal, 10, boot);
    // The challenger's best loss (at K=4) is 0.5 = ref(2); beyond the first
    // grid point the target is unattainable.
    EXPECT_FALSE(mc.unattained.front());
    for (std::size_t i = 1; i < mc.grid.size(); ++i) {
        EXPECT_TRUE(mc.unattained[i]);
        EXPECT_DOUBLE_EQ(mc.k_required[i], 4.0);
    }
}

TEST(MatchingCurve, IsotonicRepairHandlesWiggles) {
    std::vector<int> ks{2, 3, 4, 5};
    // Non-monotone challenger: the repair must make inversion well defined.
    LossCurve ref = synthetic_curve("ref", ks, {0}, [](int, double k) { return 1.0 / k; });
    LossCurve chal = synthetic_curve("chal", ks, {0}, [](int, double k) {
        return k == 3 ? 0.9 : 1.2 / k;
    });
    BootstrapConfig boot{10, 0.95, 29};
    MatchingCurve mc = matching_curve(ref, chal, 20, boot);
    for (std::size_t i = 1; i < mc.k_required.size(); ++i)
        EXPECT_GE(mc.k_required[i], mc.k_required[i - 1] - 1e-9);
}

TEST(MatchingCurve, RejectsMismatchedCurves) {
    LossCurve a = synthetic_curve("a", {2, 3}, {0}, [](int, double k) { return 1.0 / k; });
    LossCurve b = synthetic_curve("b", {2, 4}, {0}, [](int, double k) { return 1.0 / k; });
    BootstrapConfig boot{10, 0.95, 31};
    EXPECT_THROW(matching_curve(a, b, 10, boot), std::invalid_argument);
    LossCurve c = synthetic_curve("c", {2, 3}, {0, 1}, [](int, double k) { return 1.0 / k; });
    EXPECT_THROW(matching_curve(a, c, 10, boot), std::invalid_argument);
}

TEST(Advantage, Definition) {
    EXPECT_NEAR(advantage(18.0, 10.0), 1.8, 1e-12);
    EXPECT_DOUBLE_EQ(advantage(7.0, 7.0), 1.0);
    EXPECT_LT(advantage(5.0, 9.0), 1.0);
    EXPECT_THROW(advantage(0.0, 3.0), std::invalid_argument);
    EXPECT_THROW(advantage(3.0, -1.0), std::invalid_argument);
}
