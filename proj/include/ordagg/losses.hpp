#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ordagg/distribution.hpp"
#include "ordagg/scale.hpp"

namespace ordagg {

/// Probability clamp applied before every log. Small enough that the
/// reference loss values stay exact to 1e-9.
inline constexpr double kProbEps = 1e-12;

enum class LossKind { CumulativeLog, StandardLog, PrefIgnoreNeutral, PrefKeepNeutral };

inline LossKind loss_kind_from_string(std::string_view s) {
    if (s == "cumlog") return LossKind::CumulativeLog;
    if (s == "stdlog") return LossKind::StandardLog;
    if (s == "pref1") return LossKind::PrefIgnoreNeutral;
    if (s == "pref2") return LossKind::PrefKeepNeutral;
    throw std::invalid_argument("unknown loss kind: " + std::string(s) +
                                " (expected cumlog|stdlog|pref1|pref2)");
}

inline const char* to_string(LossKind k) {
    switch (k) {
        case LossKind::CumulativeLog: return "cumlog";
        case LossKind::StandardLog: return "stdlog";
        case LossKind::PrefIgnoreNeutral: return "pref1";
        case LossKind::PrefKeepNeutral: return "pref2";
    }
    return "?";
}

namespace detail {

// x*log(y) with the 0*log(0) = 0 convention: a zero multiplier kills the
// term before the log is taken. The log argument is floored at eps, which
// keeps every loss finite while leaving exact matches (x = 1, y = 1) at
// exactly zero.
inline double xlogy_clamped(double x, double y) {
    return x == 0.0 ? 0.0 : x * std::log(std::max(y, kProbEps));
}

}  // namespace detail

/// Mean binary log loss over the CDF's threshold elements:
///   -(1/(|Y|-1)) * sum_y [ P(y) log Q(y) + (1-P(y)) log(1-Q(y)) ].
/// Log arguments are floored at eps; the terminal entry is 1 on both sides
/// and contributes exactly 0.
inline double cumulative_log_loss(const Cdf& target, const Cdf& predicted) {
    if (target.size() != predicted.size())
        throw std::invalid_argument("cumulative_log_loss: scale mismatch");
    const std::size_t n = target.size();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double p = target.values[i];
        const double q = predicted.values[i];
        acc += detail::xlogy_clamped(p, q) + detail::xlogy_clamped(1.0 - p, 1.0 - q);
    }
    // Terminal element: P = Q = 1, so P log Q = 0 and (1-P) log(1-Q) = 0.
    return -acc / static_cast<double>(n - 1);
}

/// -sum_y p(y) log q(y), with q clamped below by eps.
inline double standard_log_loss(const Pmf& target, const Pmf& predicted) {
    if (target.size() != predicted.size())
        throw std::invalid_argument("standard_log_loss: scale mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i)
        acc += detail::xlogy_clamped(target.values[i], predicted.values[i]);
    return -acc;
}

/// l(a, b) = -(a log b + (1-a) log(1-b)), log arguments floored at eps.
inline double binary_log_loss(double a, double b) {
    if (!(a >= 0.0 && a <= 1.0) || !(b >= 0.0 && b <= 1.0))
        throw std::invalid_argument("binary_log_loss: arguments must lie in [0,1]");
    return -(detail::xlogy_clamped(a, b) + detail::xlogy_clamped(1.0 - a, 1.0 - b));
}

namespace detail {

struct SignMasses {
    double pos = 0.0;
    double neg = 0.0;
    double zero = 0.0;
};

inline SignMasses sign_masses(const Pmf& p, const OrdinalScale& scale) {
    if (p.size() != scale.size())
        throw std::invalid_argument("preference loss: pmf does not match scale");
    SignMasses m;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const int raw = scale.raw(i);
        if (raw > 0)
            m.pos += p.values[i];
        else if (raw < 0)
            m.neg += p.values[i];
        else
            m.zero += p.values[i];
    }
    return m;
}

}  // namespace detail

/// Preference loss that drops neutral mass: binary log loss between the
/// positive-vs-nonneutral fractions of target and prediction. When the
/// target has no non-neutral mass the loss falls back to -p(0) log q(0).
/// Scales without a 0 label behave as if p(0) = q(0) = 0.
inline double pref_loss_ignore_neutral(const Pmf& target, const Pmf& predicted,
                                       const OrdinalScale& scale) {
    if (target.size() != predicted.size())
        throw std::invalid_argument("pref_loss_ignore_neutral: scale mismatch");
    const auto tp = detail::sign_masses(target, scale);
    const auto qp = detail::sign_masses(predicted, scale);
    const double t_nonneutral = tp.pos + tp.neg;
    if (t_nonneutral > 0.0) {
        const double a = tp.pos / t_nonneutral;
        const double b = qp.pos / std::max(qp.pos + qp.neg, kProbEps);
        return binary_log_loss(a, b);
    }
    return -detail::xlogy_clamped(tp.zero, qp.zero);
}

/// Preference loss that splits neutral mass evenly:
///   l( pos(p) + 0.5 p(0), pos(q) + 0.5 q(0) ).
inline double pref_loss_keep_neutral(const Pmf& target, const Pmf& predicted,
                                     const OrdinalScale& scale) {
    if (target.size() != predicted.size())
        throw std::invalid_argument("pref_loss_keep_neutral: scale mismatch");
    const auto tp = detail::sign_masses(target, scale);
    const auto qp = detail::sign_masses(predicted, scale);
    return binary_log_loss(tp.pos + 0.5 * tp.zero, qp.pos + 0.5 * qp.zero);
}

/// Fraction preferring one side, as reward-model pipelines compute it.
/// Undefined when no score clears the threshold in either direction.
struct PreferenceSignal {
    double value = 0.0;
    bool defined = false;
};

/// With B+ = #{s > y} and B- = #{s < -y} over normalized scores:
/// value = B+ / (B+ + B-), defined iff the denominator is positive.
inline PreferenceSignal preference_signal_thresholded(std::span<const double> normalized_scores,
                                                      double y_threshold = 0.0) {
    if (y_threshold < 0.0)
        throw std::invalid_argument("preference_signal_thresholded: threshold must be >= 0");
    std::size_t above = 0;
    std::size_t below = 0;
    for (double s : normalized_scores) {
        if (s > y_threshold) ++above;
        if (s < -y_threshold) ++below;
    }
    PreferenceSignal out;
    if (above + below > 0) {
        out.defined = true;
        out.value = static_cast<double>(above) / static_cast<double>(above + below);
    }
    return out;
}

/// (#{s > 0} + 0.5 #{s = 0}) / n; always defined for nonempty input.
inline PreferenceSignal preference_signal_half_neutral(std::span<const double> normalized_scores) {
    if (normalized_scores.empty())
        throw std::invalid_argument("preference_signal_half_neutral: empty multiset");
    double num = 0.0;
    for (double s : normalized_scores) {
        if (s > 0.0)
            num += 1.0;
        else if (s == 0.0)
            num += 0.5;
    }
    return PreferenceSignal{num / static_cast<double>(normalized_scores.size()), true};
}

/// Evaluate a loss between a target CDF and a predicted CDF.
inline double evaluate_loss(LossKind kind, const Cdf& target, const Cdf& predicted,
                            const OrdinalScale& scale) {
    switch (kind) {
        case LossKind::CumulativeLog:
            return cumulative_log_loss(target, predicted);
        case LossKind::StandardLog:
            return standard_log_loss(pmf_from_cdf(target), pmf_from_cdf(predicted));
        case LossKind::PrefIgnoreNeutral:
            return pref_loss_ignore_neutral(pmf_from_cdf(target), pmf_from_cdf(predicted), scale);
        case LossKind::PrefKeepNeutral:
            return pref_loss_keep_neutral(pmf_from_cdf(target), pmf_from_cdf(predicted), scale);
    }
    throw std::logic_error("unreachable loss kind");
}

}  // namespace ordagg
