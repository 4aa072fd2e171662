#pragma once

#include <cstddef>
#include <vector>

namespace ordagg {

/// Pool-adjacent-violators projection onto nondecreasing sequences
/// (least-squares, equal weights). Already-monotone input is returned
/// unchanged.
inline std::vector<double> pava_nondecreasing(std::vector<double> v) {
    const std::size_t n = v.size();
    std::vector<double> mean(n);
    std::vector<std::size_t> count(n);
    std::size_t blocks = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mean[blocks] = v[i];
        count[blocks] = 1;
        ++blocks;
        while (blocks > 1 && mean[blocks - 2] > mean[blocks - 1]) {
            const double total = mean[blocks - 2] * static_cast<double>(count[blocks - 2]) +
                                 mean[blocks - 1] * static_cast<double>(count[blocks - 1]);
            count[blocks - 2] += count[blocks - 1];
            mean[blocks - 2] = total / static_cast<double>(count[blocks - 2]);
            --blocks;
        }
    }
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t b = 0; b < blocks; ++b)
        out.insert(out.end(), count[b], mean[b]);
    return out;
}

inline std::vector<double> pava_nonincreasing(std::vector<double> v) {
    for (double& x : v) x = -x;
    v = pava_nondecreasing(std::move(v));
    for (double& x : v) x = -x;
    return v;
}

}  // namespace ordagg
