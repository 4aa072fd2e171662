#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ordagg/scale.hpp"

namespace ordagg {

/// Probability mass function over a scale; entries sum to 1 (tol 1e-9).
struct Pmf {
    std::vector<double> values;

    Pmf() = default;
    explicit Pmf(std::vector<double> v) : values(std::move(v)) {
        double sum = 0.0;
        for (double p : values) {
            if (!(p >= 0.0)) throw std::invalid_argument("pmf entry negative or NaN");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("pmf does not sum to 1 (sum=" + std::to_string(sum) + ")");
    }

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
};

/// Cumulative distribution over a scale: nondecreasing, in [0,1], last
/// entry exactly 1. Construction validates to 1e-9 and then snaps the
/// stored values into exact form (clamped, monotone, terminal 1) so that
/// downstream code can rely on the invariant bit-for-bit.
struct Cdf {
    std::vector<double> values;

    Cdf() = default;
    explicit Cdf(std::vector<double> v) : values(std::move(v)) {
        if (values.empty()) throw std::invalid_argument("empty cdf");
        double prev = 0.0;
        for (double& c : values) {
            if (!(c >= -1e-9 && c <= 1.0 + 1e-9))
                throw std::invalid_argument("cdf entry outside [0,1]");
            if (c < prev - 1e-9) throw std::invalid_argument("cdf not nondecreasing");
            c = std::min(1.0, std::max({0.0, c, prev}));
            prev = c;
        }
        if (std::abs(values.back() - 1.0) > 1e-9)
            throw std::invalid_argument("cdf does not terminate at 1");
        values.back() = 1.0;
    }

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }

    bool operator==(const Cdf& o) const { return values == o.values; }
};

inline Cdf cdf_from_pmf(const Pmf& p) {
    std::vector<double> c(p.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += p.values[i];
        c[i] = acc;
    }
    return Cdf(std::move(c));
}

inline Pmf pmf_from_cdf(const Cdf& c) {
    std::vector<double> p(c.size());
    double prev = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        p[i] = c.values[i] - prev;  // >= 0 by the Cdf invariant
        prev = c.values[i];
    }
    return Pmf(std::move(p));
}

/// Empirical CDF of a multiset of raw scores: F(y) = #{s <= y} / n.
inline Cdf empirical_cdf(const std::vector<int>& raw_scores, const OrdinalScale& scale) {
    if (raw_scores.empty()) throw std::invalid_argument("empirical_cdf: empty score multiset");
    std::vector<double> counts(scale.size(), 0.0);
    for (int s : raw_scores) counts[static_cast<std::size_t>(scale.require_index(s))] += 1.0;
    const double n = static_cast<double>(raw_scores.size());
    double acc = 0.0;
    std::vector<double> c(scale.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        acc += counts[i];
        c[i] = acc / n;
    }
    return Cdf(std::move(c));
}

}  // namespace ordagg
