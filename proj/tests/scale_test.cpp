#include <gtest/gtest.h>

#include "ordagg/scale.hpp"

using ordagg::OrdinalScale;

TEST(OrdinalScale, ElevenPointNormalizesToFifths) {
    OrdinalScale s = OrdinalScale::eleven_point();
    ASSERT_EQ(s.size(), 11u);
    EXPECT_DOUBLE_EQ(s.normalized_at(0), -1.0);
    EXPECT_DOUBLE_EQ(s.normalized_at(5), 0.0);
    EXPECT_DOUBLE_EQ(s.normalized_at(8), 0.6);
    EXPECT_DOUBLE_EQ(s.normalized_at(10), 1.0);
}

TEST(OrdinalScale, NormalizedValuesStayInUnitInterval) {
    OrdinalScale s({-3, 0, 7});
    for (double v : s.normalized()) {
        EXPECT_GE(v, -1.0);
        EXPECT_LE(v, 1.0);
    }
    EXPECT_DOUBLE_EQ(s.normalized_at(2), 1.0);
}

TEST(OrdinalScale, RejectsBadLabelSets) {
    EXPECT_THROW(OrdinalScale({1}), std::invalid_argument);
    EXPECT_THROW(OrdinalScale({2, 2}), std::invalid_argument);
    EXPECT_THROW(OrdinalScale({3, 1}), std::invalid_argument);
}

TEST(OrdinalScale, IndexLookup) {
    OrdinalScale s = OrdinalScale::five_point();
    EXPECT_EQ(s.index_of(-2), 0);
    EXPECT_EQ(s.index_of(2), 4);
    EXPECT_EQ(s.index_of(3), -1);
    EXPECT_EQ(s.zero_index(), 2);
    EXPECT_EQ(OrdinalScale::binary().zero_index(), -1);
    EXPECT_THROW(s.require_index(9), std::invalid_argument);
}

TEST(OrdinalScale, SymmetryCheck) {
    EXPECT_TRUE(OrdinalScale::binary().symmetric_about_zero());
    EXPECT_TRUE(OrdinalScale::eleven_point().symmetric_about_zero());
    EXPECT_FALSE(OrdinalScale({-1, 0, 2}).symmetric_about_zero());
}
