#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "dts/dataset.hpp"
#include "dts/rng.hpp"

namespace dts {

enum class ShiftFamily { two_moons_rotation, gaussian_mixture_affine };

inline const char* shift_family_name(ShiftFamily f) {
    return f == ShiftFamily::two_moons_rotation ? "two_moons_rotation" : "gaussian_mixture_affine";
}

inline ShiftFamily shift_family_from_name(const std::string& s) {
    if (s == "two_moons_rotation") return ShiftFamily::two_moons_rotation;
    if (s == "gaussian_mixture_affine") return ShiftFamily::gaussian_mixture_affine;
    throw ConfigError("unknown shift family: " + s);
}

/// Synthetic domain-shift task with known ground truth. The target is the
/// source distribution pushed through the family's shift map; target labels
/// are generated but kept out of the training view.
struct ShiftSpec {
    ShiftFamily family = ShiftFamily::two_moons_rotation;
    double rotation_deg = 30.0;              // two_moons_rotation
    std::vector<std::vector<double>> class_means; // gaussian_mixture_affine
    std::vector<double> class_scales;             // gaussian_mixture_affine
    std::vector<std::vector<double>> affine_a;    // gaussian_mixture_affine: A (d x d)
    std::vector<double> affine_b;                 // gaussian_mixture_affine: b
    double noise = 0.15;
    std::size_t n_source = 2000;
    std::size_t n_target = 100;
    std::size_t n_eval = 2000; // held-out labeled target draw; 0 disables
    std::uint64_t seed = 0;

    std::size_t class_count() const {
        return family == ShiftFamily::two_moons_rotation ? 2 : class_means.size();
    }

    void validate() const {
        if (n_source == 0 || n_target == 0)
            throw ConfigError("ShiftSpec: n_source and n_target must be positive");
        if (family == ShiftFamily::two_moons_rotation) {
            if (rotation_deg < 0.0 || rotation_deg > 90.0)
                throw ConfigError("ShiftSpec: rotation must be in [0,90] degrees");
            if (!(noise >= 0.0)) throw ConfigError("ShiftSpec: noise must be >= 0");
        } else {
            if (class_means.size() < 2) throw ConfigError("ShiftSpec: need >= 2 mixture classes");
            const std::size_t d = class_means.front().size();
            for (const auto& m : class_means)
                if (m.size() != d) throw ConfigError("ShiftSpec: ragged class means");
            if (class_scales.size() != class_means.size())
                throw ConfigError("ShiftSpec: one scale per class required");
            for (double s : class_scales)
                if (!(s > 0.0)) throw ConfigError("ShiftSpec: mixture scales must be positive");
            if (affine_a.size() != d) throw ConfigError("ShiftSpec: affine A must be d x d");
            for (const auto& r : affine_a)
                if (r.size() != d) throw ConfigError("ShiftSpec: affine A must be d x d");
            if (affine_b.size() != d) throw ConfigError("ShiftSpec: affine b must have length d");
        }
    }
};

namespace detail {

// Balanced two-moons draw in canonical coordinates, before noise.
inline void draw_two_moons(std::size_t n, double noise, Rng& rng, DenseMatrix& x,
                           std::vector<int>& y) {
    x = DenseMatrix(n, 2);
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        const double angle = rng.uniform(0.0, std::numbers::pi);
        double px, py;
        if (label == 0) {
            px = std::cos(angle);
            py = std::sin(angle);
        } else {
            px = 1.0 - std::cos(angle);
            py = 0.5 - std::sin(angle);
        }
        x(i, 0) = px + noise * rng.normal();
        x(i, 1) = py + noise * rng.normal();
        y[i] = label;
    }
}

inline void rotate_rows(DenseMatrix& x, double degrees) {
    const double a = degrees * std::numbers::pi / 180.0;
    const double c = std::cos(a), s = std::sin(a);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double px = x(i, 0), py = x(i, 1);
        x(i, 0) = c * px - s * py;
        x(i, 1) = s * px + c * py;
    }
}

inline void draw_mixture(const ShiftSpec& spec, std::size_t n, Rng& rng, DenseMatrix& x,
                         std::vector<int>& y) {
    const std::size_t d = spec.class_means.front().size();
    const std::size_t c = spec.class_means.size();
    x = DenseMatrix(n, d);
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto label = i % c;
        for (std::size_t j = 0; j < d; ++j)
            x(i, j) = spec.class_means[label][j] + spec.class_scales[label] * rng.normal();
        y[i] = static_cast<int>(label);
    }
}

inline void apply_affine(const ShiftSpec& spec, DenseMatrix& x) {
    const std::size_t d = x.cols;
    std::vector<double> tmp(d);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t r = 0; r < d; ++r) {
            double acc = spec.affine_b[r];
            for (std::size_t c = 0; c < d; ++c) acc += spec.affine_a[r][c] * x(i, c);
            tmp[r] = acc;
        }
        for (std::size_t r = 0; r < d; ++r) x(i, r) = tmp[r];
    }
}

inline void draw_domain(const ShiftSpec& spec, std::size_t n, bool shifted, Rng& rng,
                        DenseMatrix& x, std::vector<int>& y) {
    if (spec.family == ShiftFamily::two_moons_rotation) {
        draw_two_moons(n, spec.noise, rng, x, y);
        if (shifted) rotate_rows(x, spec.rotation_deg);
    } else {
        draw_mixture(spec, n, rng, x, y);
        if (shifted) apply_affine(spec, x);
    }
}

} // namespace detail

/// Samples a labeled source, an unlabeled target from the shifted
/// distribution (ground truth kept aside for evaluation), and an optional
/// held-out labeled target draw. Deterministic per seed.
inline DomainPair generate_pair(const ShiftSpec& spec) {
    spec.validate();
    DomainPair pair;
    pair.class_count = static_cast<int>(spec.class_count());

    Rng src_rng(spec.seed, "data-source");
    pair.source.domain = DomainTag::source;
    detail::draw_domain(spec, spec.n_source, false, src_rng, pair.source.features,
                        pair.source.labels);

    Rng tgt_rng(spec.seed, "data-target");
    pair.target.domain = DomainTag::target;
    detail::draw_domain(spec, spec.n_target, true, tgt_rng, pair.target.features,
                        pair.target_eval_labels);
    pair.target.labels.clear();

    if (spec.n_eval > 0) {
        Rng eval_rng(spec.seed, "data-eval");
        pair.eval.domain = DomainTag::target;
        detail::draw_domain(spec, spec.n_eval, true, eval_rng, pair.eval.features,
                            pair.eval.labels);
    }
    return pair;
}

} // namespace dts
