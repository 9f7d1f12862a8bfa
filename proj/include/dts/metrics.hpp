#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dts/dataset.hpp"
#include "dts/matrix.hpp"
#include "dts/optimizer.hpp"
#include "dts/rng.hpp"
#include "dts/uda.hpp"

namespace dts {

/// Proxy A-distance 2(1 - 2 nu): nu is the balanced held-out error of a
/// linear logistic domain discriminator. Training weights are balanced by
/// class so unequal sample counts cannot collapse the discriminator, and the
/// train/test split is stratified per side. Fixed budget (500 full-batch
/// steps, lr 0.1) keeps values comparable across calls.
inline double a_distance(const DenseMatrix& a, const DenseMatrix& b, Rng& rng) {
    if (a.cols != b.cols)
        throw DimensionError("a_distance: " + a.shape_string() + " vs " + b.shape_string());
    if (a.rows < 4 || b.rows < 4)
        throw EstimatorError("a_distance: need at least 4 rows per side");

    const auto perm_a = rng.permutation(a.rows);
    const auto perm_b = rng.permutation(b.rows);
    const std::size_t train_a = a.rows / 2, train_b = b.rows / 2;

    const std::size_t d = a.cols;
    std::vector<double> w(d, 0.0);
    double bias = 0.0;
    SgdMomentum opt(0.1, 0.9);
    std::vector<double> grad_w(d, 0.0);
    double grad_b = 0.0;
    const double weight_a = 0.5 / static_cast<double>(train_a);
    const double weight_b = 0.5 / static_cast<double>(train_b);

    for (int step = 0; step < 500; ++step) {
        std::fill(grad_w.begin(), grad_w.end(), 0.0);
        grad_b = 0.0;
        auto accumulate = [&](const DenseMatrix& x, std::size_t row, double label, double wt) {
            double z = bias;
            for (std::size_t j = 0; j < d; ++j) z += w[j] * x(row, j);
            const double p = 1.0 / (1.0 + std::exp(-z));
            const double g = (p - label) * wt;
            for (std::size_t j = 0; j < d; ++j) grad_w[j] += g * x(row, j);
            grad_b += g;
        };
        for (std::size_t i = 0; i < train_a; ++i) accumulate(a, perm_a[i], 1.0, weight_a);
        for (std::size_t i = 0; i < train_b; ++i) accumulate(b, perm_b[i], 0.0, weight_b);
        std::span<double> params[] = {std::span<double>(w), std::span<double>(&bias, 1)};
        std::span<const double> grads[] = {std::span<const double>(grad_w),
                                           std::span<const double>(&grad_b, 1)};
        opt.step(params, grads);
    }

    auto held_out_error = [&](const DenseMatrix& x, std::span<const std::size_t> perm,
                              std::size_t from, double label) {
        std::size_t wrong = 0, count = 0;
        for (std::size_t i = from; i < perm.size(); ++i) {
            double z = bias;
            for (std::size_t j = 0; j < d; ++j) z += w[j] * x(perm[i], j);
            const double predicted = z > 0.0 ? 1.0 : 0.0;
            wrong += predicted != label;
            ++count;
        }
        return static_cast<double>(wrong) / static_cast<double>(count);
    };
    const double nu =
        0.5 * (held_out_error(a, perm_a, train_a, 1.0) + held_out_error(b, perm_b, train_b, 0.0));
    return std::clamp(2.0 * (1.0 - 2.0 * nu), 0.0, 2.0);
}

namespace detail {

/// 1-D Wasserstein-1 between empirical distributions given sorted samples;
/// handles unequal sizes through the quantile-function integral.
inline double wasserstein1_sorted(std::span<const double> a, std::span<const double> b) {
    const std::size_t m = a.size(), n = b.size();
    double total = 0.0, u = 0.0;
    std::size_t ia = 0, ib = 0;
    while (ia < m && ib < n) {
        const double next_a = static_cast<double>(ia + 1) / static_cast<double>(m);
        const double next_b = static_cast<double>(ib + 1) / static_cast<double>(n);
        const double next = std::min(next_a, next_b);
        total += std::abs(a[ia] - b[ib]) * (next - u);
        u = next;
        if (next_a <= next) ++ia;
        if (next_b <= next) ++ib;
    }
    return total;
}

} // namespace detail

/// Sliced Wasserstein distance: mean 1-D W1 over random unit projections.
inline double sliced_wasserstein(const DenseMatrix& a, const DenseMatrix& b,
                                 std::size_t projections, Rng& rng) {
    if (a.cols != b.cols)
        throw DimensionError("sliced_wasserstein: " + a.shape_string() + " vs " +
                             b.shape_string());
    if (a.rows == 0 || b.rows == 0)
        throw ArgumentError("sliced_wasserstein: empty sample set");
    if (projections == 0) throw ArgumentError("sliced_wasserstein: need >= 1 projection");
    const std::size_t d = a.cols;
    std::vector<double> theta(d), pa(a.rows), pb(b.rows);
    double total = 0.0;
    for (std::size_t p = 0; p < projections; ++p) {
        double norm = 0.0;
        do {
            norm = 0.0;
            for (auto& t : theta) {
                t = rng.normal();
                norm += t * t;
            }
        } while (norm == 0.0);
        norm = std::sqrt(norm);
        for (auto& t : theta) t /= norm;
        for (std::size_t i = 0; i < a.rows; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += a(i, j) * theta[j];
            pa[i] = acc;
        }
        for (std::size_t i = 0; i < b.rows; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += b(i, j) * theta[j];
            pb[i] = acc;
        }
        std::sort(pa.begin(), pa.end());
        std::sort(pb.begin(), pb.end());
        total += detail::wasserstein1_sorted(pa, pb);
    }
    return total / static_cast<double>(projections);
}

/// Empirical pieces of the generalization-bound chain: risks of one
/// hypothesis on the source, generated and augmented sets, the three proxy
/// distances to the target, and the mixing fraction. The bound's additive
/// constant is not estimated. `premise_holds` records whether the generated
/// domain really is closer to the target than the source is.
struct BoundReport {
    double source_risk = 0.0;
    double generated_risk = 0.0;
    double augmented_risk = 0.0;
    double dist_source_target = 0.0;
    double dist_generated_target = 0.0;
    double dist_augmented_target = 0.0;
    double mixing_alpha = 0.0; // N_s / N_s_hat
    bool premise_holds = false;
};

inline BoundReport bound_report(const DomainPair& pair, const LabeledDataset& generated,
                                const LabeledDataset& augmented, const UDAModel& model,
                                Rng& rng) {
    BoundReport r;
    r.source_risk = 1.0 - accuracy(model, pair.source);
    r.generated_risk = 1.0 - accuracy(model, generated);
    r.augmented_risk = 1.0 - accuracy(model, augmented);
    r.dist_source_target = a_distance(pair.source.features, pair.target.features, rng);
    r.dist_generated_target = a_distance(generated.features, pair.target.features, rng);
    r.dist_augmented_target = a_distance(augmented.features, pair.target.features, rng);
    r.mixing_alpha = static_cast<double>(pair.source.size()) /
                     static_cast<double>(augmented.size());
    r.premise_holds = r.dist_generated_target < r.dist_source_target;
    return r;
}

} // namespace dts
