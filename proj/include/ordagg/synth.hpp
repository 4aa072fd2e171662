#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "ordagg/feedback.hpp"
#include "ordagg/rng.hpp"

namespace ordagg {

/// Synthetic exchangeable population for desk-scale experiments.
///
/// Per unit t: latent location mu_t ~ N(0, unit_location_spread^2) and a
/// polarization weight pi_t ~ U(0, min(1, unit_polarization_spread)).
/// Per worker k: a persistent bias b_k = +-worker_bias_spread with equal
/// probability (a harsh half and a lenient half of the population) and a
/// noise scale sigma_k ~ U(0.5, 1.5) * worker_noise_spread. A score's
/// latent value is drawn from a mixture: with weight 1-pi_t around mu_t,
/// with weight pi_t/2 around each scale extreme; plus b_k + sigma_k *
/// N(0,1). The latent value is rounded to the nearest scale point (raw
/// units) and clipped.
///
/// Biases are i.i.d. across workers, so columns are exchangeable in law,
/// while a realized worker's bias persists across units. That persistent
/// shift is visible in granular scores and largely destroyed by
/// binarization, which is exactly the structure a learned aggregator can
/// exploit and simple averaging cannot. The two-point bias law keeps every
/// worker equally discriminative at the sign threshold, so the structure
/// stays hidden from binarized views.
struct SynthConfig {
    int num_units = 1000;
    int num_workers = 39;
    OrdinalScale scale = OrdinalScale::eleven_point();
    double unit_location_spread = 1.8;
    double unit_polarization_spread = 0.3;
    double worker_bias_spread = 1.8;
    double worker_noise_spread = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (num_units < 1 || num_workers < 1)
            throw std::invalid_argument("synth: counts must be >= 1");
        if (unit_location_spread < 0.0 || unit_polarization_spread < 0.0 ||
            worker_bias_spread < 0.0 || worker_noise_spread < 0.0)
            throw std::invalid_argument("synth: spreads must be >= 0");
    }
};

struct SynthResult {
    FeedbackMatrix matrix;
    std::vector<Cdf> population_cdf;  // exact per-unit CDF, workers integrated out
};

namespace detail {

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// P(latent center + b + sigma*eps <= x) integrated over the worker
/// population: b = +-bias with probability 1/2 each, sigma ~ U(0.5,
/// 1.5)*noise, eps ~ N(0,1). The sigma integral uses Gauss-Legendre; the
/// integrand is smooth, so the result is exact to machine precision for
/// practical purposes.
class WorkerMarginal {
public:
    WorkerMarginal(double bias_spread, double noise_spread) : bias_(bias_spread) {
        // 32-point Gauss-Legendre nodes on [-1, 1], folded to positive half.
        static constexpr int half = 16;
        static constexpr double x[half] = {
            0.0483076656877383162, 0.1444719615827964934, 0.2392873622521370745,
            0.3318686022821276497, 0.4213512761306353454, 0.5068999089322293900,
            0.5877157572407623290, 0.6630442669302152009, 0.7321821187402896804,
            0.7944837959679424069, 0.8493676137325699701, 0.8963211557660521240,
            0.9349060759377396891, 0.9647622555875064308, 0.9856115115452683354,
            0.9972638618494815635};
        static constexpr double w[half] = {
            0.0965400885147278006, 0.0956387200792748594, 0.0938443990808045654,
            0.0911738786957638847, 0.0876520930044038111, 0.0833119242269467552,
            0.0781938957870703065, 0.0723457941088485062, 0.0658222227763618468,
            0.0586840934785355471, 0.0509980592623761762, 0.0428358980222266807,
            0.0342738629130214331, 0.0253920653092620595, 0.0162743947309056706,
            0.0070186100094700966};
        if (noise_spread == 0.0) {
            sigmas_.push_back(0.0);
            weights_.push_back(1.0);
            return;
        }
        const double lo = 0.5 * noise_spread;
        const double hi = 1.5 * noise_spread;
        const double mid = 0.5 * (lo + hi);
        const double rad = 0.5 * (hi - lo);
        for (int i = 0; i < half; ++i) {
            sigmas_.push_back(mid - rad * x[i]);
            weights_.push_back(0.5 * w[i]);
            sigmas_.push_back(mid + rad * x[i]);
            weights_.push_back(0.5 * w[i]);
        }
    }

    double cdf(double x, double center) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < sigmas_.size(); ++i) {
            const double s = sigmas_[i];
            for (double b : {-bias_, bias_}) {
                const double d = x - center - b;
                const double z = s > 0.0 ? d / s : (d >= 0.0 ? 1e30 : -1e30);
                acc += 0.5 * weights_[i] * std_normal_cdf(z);
            }
        }
        return acc;
    }

private:
    double bias_;
    std::vector<double> sigmas_;
    std::vector<double> weights_;
};

/// Nearest scale point in raw units; cutoffs are adjacent-label midpoints.
inline int discretize(double z, const OrdinalScale& scale) {
    const auto& raw = scale.raw_labels();
    for (std::size_t i = 0; i + 1 < raw.size(); ++i) {
        const double cutoff = 0.5 * (raw[i] + raw[i + 1]);
        if (z <= cutoff) return raw[i];
    }
    return raw.back();
}

}  // namespace detail

inline SynthResult synth_generate(const SynthConfig& config) {
    config.validate();
    const std::size_t T = static_cast<std::size_t>(config.num_units);
    const std::size_t W = static_cast<std::size_t>(config.num_workers);
    const auto& raw = config.scale.raw_labels();
    const double lo_extreme = raw.front();
    const double hi_extreme = raw.back();

    // Unit latents.
    std::vector<double> mu(T), pi(T);
    const double pi_cap = std::min(1.0, config.unit_polarization_spread);
    for (std::size_t t = 0; t < T; ++t) {
        Rng rng(derive_seed(config.seed, "synth_unit", {t}));
        mu[t] = config.unit_location_spread * rng.normal();
        pi[t] = pi_cap * rng.uniform();
    }

    // Worker latents.
    std::vector<double> bias(W), sigma(W);
    for (std::size_t w = 0; w < W; ++w) {
        Rng rng(derive_seed(config.seed, "synth_worker", {w}));
        bias[w] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * config.worker_bias_spread;
        sigma[w] = (0.5 + rng.uniform()) * config.worker_noise_spread;
    }

    std::vector<int> scores(T * W);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t w = 0; w < W; ++w) {
            Rng rng(derive_seed(config.seed, "synth_score", {t, w}));
            const double u = rng.uniform();
            double center = mu[t];
            if (u < pi[t]) center = (u < 0.5 * pi[t]) ? lo_extreme : hi_extreme;
            const double z = center + bias[w] + sigma[w] * rng.normal();
            scores[t * W + w] = detail::discretize(z, config.scale);
        }
    }

    // Exact population CDFs: P_t(y_i) = P(score <= y_i) with the worker
    // randomness (component, bias, sigma, noise) integrated out.
    detail::WorkerMarginal marginal(config.worker_bias_spread, config.worker_noise_spread);
    std::vector<Cdf> truth;
    truth.reserve(T);
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> c(raw.size());
        for (std::size_t i = 0; i + 1 < raw.size(); ++i) {
            const double cutoff = 0.5 * (raw[i] + raw[i + 1]);
            c[i] = (1.0 - pi[t]) * marginal.cdf(cutoff, mu[t]) +
                   0.5 * pi[t] * marginal.cdf(cutoff, lo_extreme) +
                   0.5 * pi[t] * marginal.cdf(cutoff, hi_extreme);
        }
        c.back() = 1.0;
        truth.push_back(Cdf(std::move(c)));
    }

    std::vector<std::string> unit_ids, worker_ids;
    unit_ids.reserve(T);
    worker_ids.reserve(W);
    const int uw = static_cast<int>(std::to_string(T - 1).size());
    const int ww = static_cast<int>(std::to_string(W - 1).size());
    auto pad = [](std::size_t v, int width) {
        std::string s = std::to_string(v);
        return std::string(static_cast<std::size_t>(width) - std::min(s.size(), static_cast<std::size_t>(width)), '0') + s;
    };
    for (std::size_t t = 0; t < T; ++t) unit_ids.push_back("u" + pad(t, uw));
    for (std::size_t w = 0; w < W; ++w) worker_ids.push_back("w" + pad(w, ww));

    return SynthResult{FeedbackMatrix(std::move(scores), T, W, config.scale, std::move(unit_ids),
                                      std::move(worker_ids)),
                       std::move(truth)};
}

}  // namespace ordagg
