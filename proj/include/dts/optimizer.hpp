#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dts/error.hpp"

namespace dts {

/// SGD with classical momentum: v <- m*v + g, p <- p - lr*v.
/// Velocity buffers are sized on first use and must shape-match thereafter.
class SgdMomentum {
public:
    double learning_rate = 0.1;
    double momentum = 0.9;

    SgdMomentum() = default;
    SgdMomentum(double lr, double mom) : learning_rate(lr), momentum(mom) {
        if (!(lr > 0.0)) throw ConfigError("SgdMomentum: learning rate must be positive");
        if (!(mom >= 0.0 && mom < 1.0)) throw ConfigError("SgdMomentum: momentum must be in [0,1)");
    }

    void step(std::span<std::span<double>> params, std::span<std::span<const double>> grads) {
        step(params, grads, learning_rate);
    }

    void step(std::span<std::span<double>> params, std::span<std::span<const double>> grads,
              double lr) {
        if (params.size() != grads.size())
            throw DimensionError("SgdMomentum: " + std::to_string(params.size()) +
                                 " parameter tensors vs " + std::to_string(grads.size()) +
                                 " gradient tensors");
        if (velocity_.empty()) {
            velocity_.resize(params.size());
            for (std::size_t k = 0; k < params.size(); ++k)
                velocity_[k].assign(params[k].size(), 0.0);
        }
        if (velocity_.size() != params.size())
            throw DimensionError("SgdMomentum: optimizer bound to a different parameter set");
        ++step_count_;
        for (std::size_t k = 0; k < params.size(); ++k) {
            auto p = params[k];
            auto g = grads[k];
            auto& v = velocity_[k];
            if (p.size() != g.size() || p.size() != v.size())
                throw DimensionError("SgdMomentum: tensor " + std::to_string(k) +
                                     " size mismatch");
            for (std::size_t i = 0; i < p.size(); ++i) {
                if (!std::isfinite(g[i]))
                    throw TrainingDivergedError(step_count_, "non-finite gradient in tensor " +
                                                                 std::to_string(k));
                v[i] = momentum * v[i] + g[i];
                p[i] -= lr * v[i];
            }
        }
    }

    std::size_t step_count() const { return step_count_; }

private:
    std::vector<std::vector<double>> velocity_;
    std::size_t step_count_ = 0;
};

/// Learning-rate annealing lr_p = lr0 / (1 + a*p)^b with the DANN-lineage
/// constants a=10, b=0.75; p is training progress in [0,1].
inline double annealed_lr(double lr0, double progress, double a = 10.0, double b = 0.75) {
    return lr0 / std::pow(1.0 + a * progress, b);
}

/// Warmup ramp 2/(1+exp(-10 p)) - 1 used to phase in the transfer regularizer.
inline double warmup_ramp(double progress) {
    return 2.0 / (1.0 + std::exp(-10.0 * progress)) - 1.0;
}

} // namespace dts
