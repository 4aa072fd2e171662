#include <gtest/gtest.h>

#include "ordagg/isotonic.hpp"
#include "ordagg/rng.hpp"

using namespace ordagg;

TEST(Pava, MonotoneInputUnchanged) {
    std::vector<double> v{0.1, 0.2, 0.2, 0.9};
    EXPECT_EQ(pava_nondecreasing(v), v);
}

TEST(Pava, PoolsViolatingPair) {
    std::vector<double> out = pava_nondecreasing({0.4, 0.3, 1.0});
    ASSERT_EQ(out.size(), 3u);
    EXPECT_DOUBLE_EQ(out[0], 0.35);
    EXPECT_DOUBLE_EQ(out[1], 0.35);
    EXPECT_DOUBLE_EQ(out[2], 1.0);
}

TEST(Pava, CascadingPools) {
    std::vector<double> out = pava_nondecreasing({3.0, 2.0, 1.0});
    for (double x : out) EXPECT_DOUBLE_EQ(x, 2.0);
}

TEST(Pava, OutputMonotoneAndMeanPreserving) {
    Rng rng(61);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> v(1 + rng.below(20));
        double sum = 0.0;
        for (double& x : v) {
            x = rng.uniform();
            sum += x;
        }
        std::vector<double> out = pava_nondecreasing(v);
        double out_sum = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            out_sum += out[i];
            if (i > 0) {
                EXPECT_GE(out[i], out[i - 1] - 1e-15);
            }
        }
        EXPECT_NEAR(out_sum, sum, 1e-9);
    }
}

TEST(Pava, NonincreasingMirrorsNondecreasing) {
    std::vector<double> out = pava_nonincreasing({1.0, 2.0, 0.5});
    ASSERT_EQ(out.size(), 3u);
    EXPECT_DOUBLE_EQ(out[0], 1.5);
    EXPECT_DOUBLE_EQ(out[1], 1.5);
    EXPECT_DOUBLE_EQ(out[2], 0.5);
    for (std::size_t i = 1; i < out.size(); ++i) EXPECT_LE(out[i], out[i - 1]);
}
