#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

#include "dts/matrix.hpp"

namespace dts {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

} // namespace detail

/// Deterministic stream-splittable RNG (xoshiro256++ core, splitmix64 seeding).
/// The same (seed, stream, call sequence) yields the same outputs on every
/// platform; named streams keep independent uses (init, noise, shuffling,
/// sampling chains) from perturbing each other.
class Rng {
public:
    Rng(std::uint64_t seed, std::string_view stream)
        : Rng(seed, detail::fnv1a64(stream)) {}

    Rng(std::uint64_t seed, std::uint64_t stream_hash) {
        std::uint64_t sm = seed ^ detail::rotl(stream_hash, 17) ^ 0x6a09e667f3bcc908ULL;
        for (auto& s : state_) s = detail::splitmix64(sm);
    }

    /// Independent child stream, e.g. one per sampling chain.
    Rng fork(std::uint64_t index) const {
        std::uint64_t sm = state_[0] ^ detail::rotl(state_[2], 29) ^ (index + 1) * 0x9e3779b97f4a7c15ULL;
        Rng child(0, std::uint64_t{0});
        for (auto& s : child.state_) s = detail::splitmix64(sm);
        child.has_cached_normal_ = false;
        return child;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), Lemire's unbiased method.
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0) throw ArgumentError("uniform_below: n must be positive");
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                m = static_cast<unsigned __int128>(next_u64()) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Uniform integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(uniform_below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    /// Standard normal via Box-Muller (pairs cached).
    double normal() {
        if (has_cached_normal_) {
            has_cached_normal_ = false;
            return cached_normal_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        cached_normal_ = r * std::sin(a);
        has_cached_normal_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    void fill_normal(DenseMatrix& m) {
        for (double& v : m.data) v = normal();
    }

    DenseMatrix normal_matrix(std::size_t rows, std::size_t cols) {
        DenseMatrix m(rows, cols);
        fill_normal(m);
        return m;
    }

    /// Fisher-Yates permutation of {0, ..., n-1}.
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = uniform_below(i);
            std::swap(p[i - 1], p[j]);
        }
        return p;
    }

    /// `count` indices drawn uniformly with replacement from [0, n).
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count) {
        std::vector<std::size_t> idx(count);
        for (auto& v : idx) v = uniform_below(n);
        return idx;
    }

private:
    std::uint64_t state_[4] = {};
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

} // namespace dts
