#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ordagg/feedback.hpp"
#include "ordagg/rng.hpp"

namespace ordagg {

/// Probabilistic 11-point -> 5-point score mapping, stored in tenths so the
/// proportionality bookkeeping stays exact in integer arithmetic: each
/// 5-point score receives a total incoming mass of 22 tenths (= 2.2 scores).
/// Rows are 11-point labels -5..5, columns 5-point labels -2..2.
inline constexpr std::array<std::array<int, 5>, 11> kFivePointMapTenths = {{
    {10, 0, 0, 0, 0},   // -5
    {10, 0, 0, 0, 0},   // -4
    {2, 8, 0, 0, 0},    // -3
    {0, 10, 0, 0, 0},   // -2
    {0, 4, 6, 0, 0},    // -1
    {0, 0, 10, 0, 0},   //  0
    {0, 0, 6, 4, 0},    //  1
    {0, 0, 0, 10, 0},   //  2
    {0, 0, 0, 8, 2},    //  3
    {0, 0, 0, 0, 10},   //  4
    {0, 0, 0, 0, 10},   //  5
}};

/// Map negatives to -1, positives to +1, and zeros to either side with a
/// fair coin. Per-entry streams keyed by (unit, worker) keep the result
/// independent of traversal order.
inline FeedbackMatrix coarsen_binary(const FeedbackMatrix& m, std::uint64_t rng_seed) {
    if (m.scale().zero_index() < 0 && !m.scale().symmetric_about_zero())
        throw std::invalid_argument("coarsen_binary: scale must contain 0 or be symmetric");
    const std::size_t T = m.num_units();
    const std::size_t W = m.num_workers();
    std::vector<int> out(T * W);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t w = 0; w < W; ++w) {
            const int s = m.at(t, w);
            int b;
            if (s < 0) {
                b = -1;
            } else if (s > 0) {
                b = 1;
            } else {
                Rng rng(derive_seed(rng_seed, "coarsen_binary", {t, w}));
                b = rng.uniform() < 0.5 ? -1 : 1;
            }
            out[t * W + w] = b;
        }
    }
    return FeedbackMatrix(std::move(out), T, W, OrdinalScale::binary(), m.unit_ids(),
                          m.worker_ids(), m.repeated_pairs());
}

/// Map 11-point scores to the 5-point scale with the probabilistic table
/// above, independently per entry with seeded randomness.
inline FeedbackMatrix coarsen_5pt(const FeedbackMatrix& m, std::uint64_t rng_seed) {
    if (m.scale() != OrdinalScale::eleven_point())
        throw std::invalid_argument("coarsen_5pt: input must be on the 11-point scale -5..5");
    const std::size_t T = m.num_units();
    const std::size_t W = m.num_workers();
    std::vector<int> out(T * W);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t w = 0; w < W; ++w) {
            const int row = m.at(t, w) + 5;
            const auto& tenths = kFivePointMapTenths[static_cast<std::size_t>(row)];
            Rng rng(derive_seed(rng_seed, "coarsen_5pt", {t, w}));
            const double u = rng.uniform() * 10.0;
            double acc = 0.0;
            int mapped = 2;
            for (int c = 0; c < 5; ++c) {
                acc += tenths[static_cast<std::size_t>(c)];
                if (u < acc) {
                    mapped = c - 2;
                    break;
                }
            }
            out[t * W + w] = mapped;
        }
    }
    return FeedbackMatrix(std::move(out), T, W, OrdinalScale::five_point(), m.unit_ids(),
                          m.worker_ids(), m.repeated_pairs());
}

}  // namespace ordagg
