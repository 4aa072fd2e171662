#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace ordagg {

/// Errors caused by malformed user input (bad files, out-of-range values).
/// The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An ordered score set: raw integer labels plus their normalized positions
/// in [-1, 1]. Normalization is linear, y / max|label|, which preserves
/// order and symmetry.
class OrdinalScale {
public:
    explicit OrdinalScale(std::vector<int> raw_labels) : raw_(std::move(raw_labels)) {
        if (raw_.size() < 2) throw std::invalid_argument("scale needs at least 2 labels");
        for (std::size_t i = 1; i < raw_.size(); ++i) {
            if (raw_[i] <= raw_[i - 1])
                throw std::invalid_argument("scale labels must be strictly increasing");
        }
        int max_abs = 0;
        for (int r : raw_) max_abs = std::max(max_abs, std::abs(r));
        if (max_abs == 0) throw std::invalid_argument("scale labels cannot all be zero");
        normalized_.reserve(raw_.size());
        for (int r : raw_) normalized_.push_back(static_cast<double>(r) / max_abs);
    }

    std::size_t size() const { return raw_.size(); }
    const std::vector<int>& raw_labels() const { return raw_; }
    const std::vector<double>& normalized() const { return normalized_; }
    int raw(std::size_t i) const { return raw_.at(i); }
    double normalized_at(std::size_t i) const { return normalized_.at(i); }

    bool contains(int raw_label) const { return index_of(raw_label) >= 0; }

    /// Position of a raw label, or -1 if absent.
    int index_of(int raw_label) const {
        auto it = std::lower_bound(raw_.begin(), raw_.end(), raw_label);
        if (it == raw_.end() || *it != raw_label) return -1;
        return static_cast<int>(it - raw_.begin());
    }

    int require_index(int raw_label) const {
        int i = index_of(raw_label);
        if (i < 0)
            throw std::invalid_argument("score " + std::to_string(raw_label) +
                                        " is not on the scale");
        return i;
    }

    /// Position of the neutral label 0, or -1 if the scale has none.
    int zero_index() const { return index_of(0); }

    bool symmetric_about_zero() const {
        for (int r : raw_)
            if (!contains(-r)) return false;
        return true;
    }

    bool operator==(const OrdinalScale& o) const { return raw_ == o.raw_; }
    bool operator!=(const OrdinalScale& o) const { return !(*this == o); }

    static OrdinalScale binary() { return OrdinalScale({-1, 1}); }
    static OrdinalScale five_point() { return OrdinalScale({-2, -1, 0, 1, 2}); }
    static OrdinalScale eleven_point() {
        return OrdinalScale({-5, -4, -3, -2, -1, 0, 1, 2, 3, 4, 5});
    }

private:
    std::vector<int> raw_;
    std::vector<double> normalized_;
};

}  // namespace ordagg
