#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "dts/cdpm.hpp"
#include "dts/matrix.hpp"
#include "dts/schedule.hpp"

namespace dts::testing {

/// Central finite differences d f / d p_i for every entry of `param`,
/// independent of any reverse-mode path.
inline std::vector<double> central_differences(std::span<double> param,
                                               const std::function<double()>& f,
                                               double h = 1e-5) {
    std::vector<double> grad(param.size());
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double saved = param[i];
        param[i] = saved + h;
        const double hi = f();
        param[i] = saved - h;
        const double lo = f();
        param[i] = saved;
        grad[i] = (hi - lo) / (2.0 * h);
    }
    return grad;
}

inline double max_relative_error(std::span<const double> got, std::span<const double> expected,
                                 double floor = 1e-6) {
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double denom = std::max(std::abs(expected[i]), floor);
        worst = std::max(worst, std::abs(got[i] - expected[i]) / denom);
    }
    return worst;
}

inline std::vector<double> column_means(const DenseMatrix& m) {
    std::vector<double> mu(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) mu[j] += m(i, j);
    for (double& v : mu) v /= static_cast<double>(m.rows);
    return mu;
}

inline std::vector<double> column_variances(const DenseMatrix& m) {
    const auto mu = column_means(m);
    std::vector<double> var(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) {
            const double c = m(i, j) - mu[j];
            var[j] += c * c;
        }
    for (double& v : var) v /= static_cast<double>(m.rows);
    return var;
}

/// Exact posterior-mean noise predictor for x0 ~ N(mu, s^2 I):
/// eps*(x_t, t) = (x_t - sqrt(abar_t) mu) sqrt(1 - abar_t) / (abar_t s^2 + 1 - abar_t),
/// derived from the Gaussian conditional E[eps | x_t]. Used as the
/// analytic-score oracle that samplers must reproduce.
class GaussianEpsOracle final : public EpsModel {
public:
    GaussianEpsOracle(const NoiseSchedule& sched, std::vector<double> mean, double stddev)
        : sched_(sched), mean_(std::move(mean)), var_(stddev * stddev) {}

    std::size_t data_dim() const override { return mean_.size(); }

    DenseMatrix predict_eps(const DenseMatrix& x_t, std::span<const int> /*labels*/,
                            std::span<const int> ts) const override {
        DenseMatrix out(x_t.rows, x_t.cols);
        for (std::size_t i = 0; i < x_t.rows; ++i) {
            const double abar = sched_.alpha_bar(static_cast<std::size_t>(ts[i]));
            const double coef = std::sqrt(1.0 - abar) / (abar * var_ + 1.0 - abar);
            for (std::size_t j = 0; j < x_t.cols; ++j)
                out(i, j) = (x_t(i, j) - std::sqrt(abar) * mean_[j]) * coef;
        }
        return out;
    }

private:
    const NoiseSchedule& sched_;
    std::vector<double> mean_;
    double var_;
};

/// A zero-variance oracle recovers the true noise exactly:
/// eps = (x_t - sqrt(abar) x0) / sqrt(1 - abar), i.e. a perfect denoiser for
/// the point mass at x0.
inline GaussianEpsOracle perfect_denoiser_for(const NoiseSchedule& sched,
                                              const DenseMatrix& x0_row) {
    std::vector<double> mean(x0_row.data.begin(), x0_row.data.end());
    return {sched, std::move(mean), 0.0};
}

} // namespace dts::testing
