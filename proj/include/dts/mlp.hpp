#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dts/matrix.hpp"
#include "dts/rng.hpp"

namespace dts {

enum class Activation { identity, relu, tanh };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
    }
    return "?";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "identity") return Activation::identity;
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    throw ConfigError("unknown activation: " + s);
}

struct MlpLayer {
    DenseMatrix weight;       // in x out
    std::vector<double> bias; // out
    Activation activation = Activation::identity;
};

/// Fixed-topology feed-forward network: affine layers with an elementwise
/// activation on every layer except the last, which stays linear.
struct Mlp {
    std::vector<MlpLayer> layers;

    std::size_t input_width() const { return layers.front().weight.rows; }
    std::size_t output_width() const { return layers.back().weight.cols; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.weight.size() + l.bias.size();
        return n;
    }

    /// Glorot-uniform weights, zero biases, hidden activation on all but the
    /// last layer. Widths list input first, output last.
    static Mlp make(std::span<const std::size_t> widths, Activation hidden, Rng& rng) {
        if (widths.size() < 2) throw ConfigError("Mlp: need at least input and output widths");
        Mlp net;
        for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
            MlpLayer layer;
            layer.weight = glorot_uniform(widths[k], widths[k + 1], rng);
            layer.bias.assign(widths[k + 1], 0.0);
            layer.activation = (k + 2 < widths.size()) ? hidden : Activation::identity;
            net.layers.push_back(std::move(layer));
        }
        return net;
    }

    static DenseMatrix glorot_uniform(std::size_t in, std::size_t out, Rng& rng) {
        DenseMatrix w(in, out);
        const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
        for (double& v : w.data) v = rng.uniform(-bound, bound);
        return w;
    }
};

/// Cached intermediates of one forward pass; consumed by mlp_backward.
struct MlpTrace {
    std::vector<DenseMatrix> inputs; // inputs[k] feeds layer k; inputs[0] is the batch
    std::vector<DenseMatrix> pre;    // pre-activation of layer k
};

struct MlpGrads {
    std::vector<DenseMatrix> weight;
    std::vector<std::vector<double>> bias;
    DenseMatrix input; // gradient w.r.t. the batch

    MlpGrads& operator+=(const MlpGrads& o) {
        for (std::size_t k = 0; k < weight.size(); ++k) {
            weight[k] += o.weight[k];
            for (std::size_t j = 0; j < bias[k].size(); ++j) bias[k][j] += o.bias[k][j];
        }
        return *this;
    }
};

namespace detail {

inline void apply_activation(DenseMatrix& m, Activation act) {
    switch (act) {
        case Activation::identity: break;
        case Activation::relu:
            for (double& v : m.data) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::tanh:
            for (double& v : m.data) v = std::tanh(v);
            break;
    }
}

// Multiplies `g` by the activation derivative, given pre-activation `z`.
inline void apply_activation_grad(DenseMatrix& g, const DenseMatrix& z, Activation act) {
    switch (act) {
        case Activation::identity: break;
        case Activation::relu:
            for (std::size_t i = 0; i < g.data.size(); ++i)
                if (z.data[i] <= 0.0) g.data[i] = 0.0;
            break;
        case Activation::tanh:
            for (std::size_t i = 0; i < g.data.size(); ++i) {
                const double t = std::tanh(z.data[i]);
                g.data[i] *= 1.0 - t * t;
            }
            break;
    }
}

} // namespace detail

/// Forward pass. `injected`, when given, holds one matrix per layer added to
/// that layer's pre-activation (empty matrices are skipped); conditioning
/// signals enter the network this way.
inline DenseMatrix mlp_forward(const Mlp& net, const DenseMatrix& batch,
                               MlpTrace* trace = nullptr,
                               const std::vector<DenseMatrix>* injected = nullptr) {
    if (batch.cols != net.input_width())
        throw DimensionError("mlp_forward: batch " + batch.shape_string() + " vs input width " +
                             std::to_string(net.input_width()));
    if (injected && injected->size() != net.layers.size())
        throw DimensionError("mlp_forward: " + std::to_string(injected->size()) +
                             " injections for " + std::to_string(net.layers.size()) + " layers");
    if (trace) {
        trace->inputs.clear();
        trace->pre.clear();
    }
    DenseMatrix h = batch;
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        const MlpLayer& layer = net.layers[k];
        if (trace) trace->inputs.push_back(h);
        DenseMatrix z = matmul(h, layer.weight);
        add_row_vector(z, layer.bias);
        if (injected && !(*injected)[k].empty()) z += (*injected)[k];
        if (trace) trace->pre.push_back(z);
        detail::apply_activation(z, layer.activation);
        h = std::move(z);
    }
    return h;
}

/// Exact reverse-mode gradients for one traced forward pass. When
/// `injected_grads` is non-null it receives d(loss)/d(injection) per layer.
inline MlpGrads mlp_backward(const Mlp& net, const MlpTrace& trace, const DenseMatrix& upstream,
                             std::vector<DenseMatrix>* injected_grads = nullptr) {
    const std::size_t n_layers = net.layers.size();
    if (trace.pre.size() != n_layers)
        throw ArgumentError("mlp_backward: trace does not match network depth");
    if (upstream.rows != trace.pre.back().rows || upstream.cols != net.output_width())
        throw DimensionError("mlp_backward: upstream " + upstream.shape_string() +
                             " vs output " + trace.pre.back().shape_string());
    MlpGrads grads;
    grads.weight.resize(n_layers);
    grads.bias.resize(n_layers);
    if (injected_grads) injected_grads->assign(n_layers, DenseMatrix{});

    DenseMatrix g = upstream;
    for (std::size_t k = n_layers; k-- > 0;) {
        const MlpLayer& layer = net.layers[k];
        detail::apply_activation_grad(g, trace.pre[k], layer.activation);
        if (injected_grads) (*injected_grads)[k] = g;
        grads.weight[k] = matmul_tn(trace.inputs[k], g);
        grads.bias[k] = column_sums(g);
        g = matmul_nt(g, layer.weight);
    }
    grads.input = std::move(g);
    return grads;
}

/// Parameter tensors in a fixed order (weights and bias per layer); the
/// matching gradient order is produced by mlp_grad_views.
inline std::vector<std::span<double>> mlp_param_views(Mlp& net) {
    std::vector<std::span<double>> views;
    for (auto& l : net.layers) {
        views.emplace_back(l.weight.data);
        views.emplace_back(l.bias);
    }
    return views;
}

inline std::vector<std::span<const double>> mlp_grad_views(const MlpGrads& grads) {
    std::vector<std::span<const double>> views;
    for (std::size_t k = 0; k < grads.weight.size(); ++k) {
        views.emplace_back(grads.weight[k].data);
        views.emplace_back(grads.bias[k]);
    }
    return views;
}

} // namespace dts
