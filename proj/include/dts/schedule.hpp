#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dts/error.hpp"

namespace dts {

/// Precomputed diffusion-time tables. Two sigma conventions coexist on
/// purpose: `ancestral_sigma` is the reverse-chain noise scale
/// sigma_t^2 = (1 - abar_{t-1})/(1 - abar_t) * beta_t, while the fast solver
/// works with solver_alpha(t) = sqrt(abar_t) and solver_sigma(t) =
/// sqrt(1 - abar_t), whose log-ratio is the log-SNR lambda_t.
/// abar_0 = 1 is stored explicitly so t=1 formulas need no special case;
/// ancestral_sigma(1) falls back to sqrt(beta_1) because the posterior
/// variance formula degenerates to zero there.
struct NoiseSchedule {
    std::size_t steps = 0;                 // T
    std::vector<double> betas;             // index t-1, t in [1, T]
    std::vector<double> alphas;            // 1 - beta
    std::vector<double> alpha_bars;        // index t, t in [0, T]; alpha_bars[0] = 1
    std::vector<double> ancestral_sigmas;  // index t-1

    double beta(std::size_t t) const { return betas[check_step(t) - 1]; }
    double alpha(std::size_t t) const { return alphas[check_step(t) - 1]; }
    double alpha_bar(std::size_t t) const {
        if (t > steps) throw ArgumentError("alpha_bar: step " + std::to_string(t) +
                                           " out of range [0," + std::to_string(steps) + "]");
        return alpha_bars[t];
    }
    double ancestral_sigma(std::size_t t) const { return ancestral_sigmas[check_step(t) - 1]; }

    double solver_alpha(std::size_t t) const { return std::sqrt(alpha_bar(check_step(t))); }
    double solver_sigma(std::size_t t) const { return std::sqrt(1.0 - alpha_bar(check_step(t))); }

    /// lambda_t = log(alpha_t / sigma_t) in the solver convention.
    double log_snr(std::size_t t) const {
        check_step(t);
        return std::log(solver_alpha(t) / solver_sigma(t));
    }

    std::size_t check_step(std::size_t t) const {
        if (t < 1 || t > steps)
            throw ArgumentError("schedule step " + std::to_string(t) + " out of range [1," +
                                std::to_string(steps) + "]");
        return t;
    }
};

/// Linearly spaced betas, inclusive of both ends, with all derived tables.
inline NoiseSchedule linear_schedule(std::size_t steps, double beta_start, double beta_end) {
    if (steps < 2) throw ConfigError("linear_schedule: need at least 2 steps");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
        throw ConfigError("linear_schedule: need 0 < beta_start <= beta_end < 1, got [" +
                          std::to_string(beta_start) + ", " + std::to_string(beta_end) + "]");
    NoiseSchedule s;
    s.steps = steps;
    s.betas.resize(steps);
    s.alphas.resize(steps);
    s.alpha_bars.resize(steps + 1);
    s.ancestral_sigmas.resize(steps);
    s.alpha_bars[0] = 1.0;
    for (std::size_t i = 0; i < steps; ++i) {
        s.betas[i] = beta_start + (beta_end - beta_start) * static_cast<double>(i) /
                                      static_cast<double>(steps - 1);
        s.alphas[i] = 1.0 - s.betas[i];
        s.alpha_bars[i + 1] = s.alpha_bars[i] * s.alphas[i];
    }
    for (std::size_t i = 0; i < steps; ++i) {
        const std::size_t t = i + 1;
        if (t == 1) {
            s.ancestral_sigmas[i] = std::sqrt(s.betas[i]);
        } else {
            s.ancestral_sigmas[i] = std::sqrt((1.0 - s.alpha_bars[t - 1]) /
                                              (1.0 - s.alpha_bars[t]) * s.betas[i]);
        }
    }
    if (!(s.alpha_bars[steps] > 0.0 && s.alpha_bars[steps] < 1.0))
        throw ConfigError("linear_schedule: terminal alpha_bar left (0,1)");
    return s;
}

} // namespace dts
