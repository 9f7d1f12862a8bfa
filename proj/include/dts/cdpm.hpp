#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "dts/matrix.hpp"
#include "dts/mlp.hpp"
#include "dts/rng.hpp"
#include "dts/schedule.hpp"

namespace dts {

/// Per-feature standardization attached to a trained model so generated
/// samples come back in the units of the training data. Empty vectors mean
/// identity.
struct DataScaler {
    std::vector<double> shift;
    std::vector<double> scale;

    bool identity() const { return shift.empty(); }

    static DataScaler fit(const DenseMatrix& x) {
        DataScaler s;
        s.shift.assign(x.cols, 0.0);
        s.scale.assign(x.cols, 0.0);
        for (std::size_t i = 0; i < x.rows; ++i)
            for (std::size_t j = 0; j < x.cols; ++j) s.shift[j] += x(i, j);
        for (double& v : s.shift) v /= static_cast<double>(x.rows);
        for (std::size_t i = 0; i < x.rows; ++i)
            for (std::size_t j = 0; j < x.cols; ++j) {
                const double c = x(i, j) - s.shift[j];
                s.scale[j] += c * c;
            }
        for (double& v : s.scale) v = std::max(std::sqrt(v / static_cast<double>(x.rows)), 1e-12);
        return s;
    }

    DenseMatrix apply(const DenseMatrix& x) const {
        if (identity()) return x;
        DenseMatrix out = x;
        for (std::size_t i = 0; i < out.rows; ++i)
            for (std::size_t j = 0; j < out.cols; ++j)
                out(i, j) = (out(i, j) - shift[j]) / scale[j];
        return out;
    }

    void restore_in_place(DenseMatrix& x) const {
        if (identity()) return;
        for (std::size_t i = 0; i < x.rows; ++i)
            for (std::size_t j = 0; j < x.cols; ++j) x(i, j) = x(i, j) * scale[j] + shift[j];
    }
};

/// Anything that predicts the noise component of x_t given class label and
/// timestep. Samplers and the bound diagnostics only need this surface, which
/// lets analytic stand-ins drive them in tests.
class EpsModel {
public:
    virtual ~EpsModel() = default;
    virtual std::size_t data_dim() const = 0;
    virtual DenseMatrix predict_eps(const DenseMatrix& x_t, std::span<const int> labels,
                                    std::span<const int> ts) const = 0;
    virtual const DataScaler* output_scaler() const { return nullptr; }

    /// Constant-(label, t) convenience used by the samplers.
    DenseMatrix predict_eps_const(const DenseMatrix& x_t, int label, int t) const {
        std::vector<int> labels(x_t.rows, label), ts(x_t.rows, t);
        return predict_eps(x_t, labels, ts);
    }
};

/// MLP noise predictor conditioned on timestep and class label. The
/// conditioning embedding is the sum of a sinusoidal time embedding and a
/// learned label embedding; it is concatenated to x_t at the input and also
/// added (through a learned projection) to every hidden pre-activation.
struct ConditionalDenoiser final : EpsModel {
    std::size_t input_dim = 0;   // d
    std::size_t embed_dim = 0;   // d_e
    std::size_t class_count = 0; // C
    std::vector<double> time_frequencies; // d_e / 2 entries
    Mlp backbone;                          // (d + d_e) -> hidden -> d
    std::vector<DenseMatrix> hidden_projections; // per layer, empty on the last
    DenseMatrix label_embedding;                 // C x d_e
    DataScaler scaler;

    static ConditionalDenoiser make(std::size_t data_dim, std::size_t embed_dim,
                                    std::span<const std::size_t> hidden, std::size_t classes,
                                    Rng& rng, Activation activation = Activation::relu) {
        if (embed_dim < 2 || embed_dim % 2 != 0)
            throw ConfigError("ConditionalDenoiser: embed_dim must be even and >= 2");
        if (classes == 0) throw ConfigError("ConditionalDenoiser: need at least one class");
        ConditionalDenoiser m;
        m.input_dim = data_dim;
        m.embed_dim = embed_dim;
        m.class_count = classes;
        const std::size_t half = embed_dim / 2;
        m.time_frequencies.resize(half);
        for (std::size_t j = 0; j < half; ++j)
            m.time_frequencies[j] =
                half == 1 ? 1.0
                          : std::exp(-std::log(1e4) * static_cast<double>(j) /
                                     static_cast<double>(half - 1));
        std::vector<std::size_t> widths;
        widths.push_back(data_dim + embed_dim);
        widths.insert(widths.end(), hidden.begin(), hidden.end());
        widths.push_back(data_dim);
        m.backbone = Mlp::make(widths, activation, rng);
        m.hidden_projections.resize(m.backbone.layers.size());
        for (std::size_t k = 0; k + 1 < m.backbone.layers.size(); ++k)
            m.hidden_projections[k] =
                Mlp::glorot_uniform(embed_dim, m.backbone.layers[k].weight.cols, rng);
        m.label_embedding = Mlp::glorot_uniform(classes, embed_dim, rng);
        return m;
    }

    std::size_t data_dim() const override { return input_dim; }
    const DataScaler* output_scaler() const override { return &scaler; }

    DenseMatrix time_embedding(std::span<const int> ts) const {
        const std::size_t half = embed_dim / 2;
        DenseMatrix e(ts.size(), embed_dim);
        for (std::size_t i = 0; i < ts.size(); ++i)
            for (std::size_t j = 0; j < half; ++j) {
                const double a = static_cast<double>(ts[i]) * time_frequencies[j];
                e(i, j) = std::sin(a);
                e(i, half + j) = std::cos(a);
            }
        return e;
    }

    void check_labels(std::span<const int> labels) const {
        for (int l : labels)
            if (l < 0 || static_cast<std::size_t>(l) >= class_count)
                throw LabelError("label " + std::to_string(l) + " outside [0, " +
                                 std::to_string(class_count) + ")");
    }

    /// Time embedding plus label embedding, one row per sample.
    DenseMatrix combined_embedding(std::span<const int> labels, std::span<const int> ts) const {
        check_labels(labels);
        DenseMatrix e = time_embedding(ts);
        for (std::size_t i = 0; i < e.rows; ++i) {
            const auto l = static_cast<std::size_t>(labels[i]);
            for (std::size_t j = 0; j < embed_dim; ++j) e(i, j) += label_embedding(l, j);
        }
        return e;
    }

    struct Trace {
        MlpTrace backbone;
        DenseMatrix embedding;
        std::vector<DenseMatrix> injections;
    };

    DenseMatrix forward(const DenseMatrix& x_t, std::span<const int> labels,
                        std::span<const int> ts, Trace* trace = nullptr) const {
        if (x_t.cols != input_dim)
            throw DimensionError("denoiser: batch " + x_t.shape_string() + " vs data dim " +
                                 std::to_string(input_dim));
        if (labels.size() != x_t.rows || ts.size() != x_t.rows)
            throw DimensionError("denoiser: need one label and timestep per row");
        DenseMatrix emb = combined_embedding(labels, ts);
        std::vector<DenseMatrix> injections(backbone.layers.size());
        for (std::size_t k = 0; k + 1 < backbone.layers.size(); ++k)
            injections[k] = matmul(emb, hidden_projections[k]);
        DenseMatrix input = hcat(x_t, emb);
        if (trace) {
            trace->embedding = std::move(emb);
            trace->injections = injections;
            return mlp_forward(backbone, input, &trace->backbone, &trace->injections);
        }
        return mlp_forward(backbone, input, nullptr, &injections);
    }

    DenseMatrix predict_eps(const DenseMatrix& x_t, std::span<const int> labels,
                            std::span<const int> ts) const override {
        return forward(x_t, labels, ts, nullptr);
    }

    struct Grads {
        MlpGrads backbone;
        std::vector<DenseMatrix> hidden_projections;
        DenseMatrix label_embedding;
    };

    /// Exact gradients for every parameter tensor, including the label
    /// embedding rows used by the batch.
    Grads backward(const Trace& trace, std::span<const int> labels,
                   const DenseMatrix& upstream) const {
        Grads g;
        std::vector<DenseMatrix> injection_grads;
        g.backbone = mlp_backward(backbone, trace.backbone, upstream, &injection_grads);

        // Embedding gradient: through the input concatenation...
        DenseMatrix emb_grad = slice_cols(g.backbone.input, input_dim, input_dim + embed_dim);
        // ...and through every hidden projection.
        g.hidden_projections.resize(backbone.layers.size());
        for (std::size_t k = 0; k + 1 < backbone.layers.size(); ++k) {
            g.hidden_projections[k] = matmul_tn(trace.embedding, injection_grads[k]);
            emb_grad += matmul_nt(injection_grads[k], hidden_projections[k]);
        }
        g.label_embedding = DenseMatrix(class_count, embed_dim);
        for (std::size_t i = 0; i < emb_grad.rows; ++i) {
            const auto l = static_cast<std::size_t>(labels[i]);
            for (std::size_t j = 0; j < embed_dim; ++j)
                g.label_embedding(l, j) += emb_grad(i, j);
        }
        return g;
    }

    std::vector<std::span<double>> param_views() {
        auto views = mlp_param_views(backbone);
        for (auto& p : hidden_projections)
            if (!p.empty()) views.emplace_back(p.data);
        views.emplace_back(label_embedding.data);
        return views;
    }

    std::vector<std::span<const double>> grad_views(const Grads& g) const {
        auto views = mlp_grad_views(g.backbone);
        for (const auto& p : g.hidden_projections)
            if (!p.empty()) views.emplace_back(p.data);
        views.emplace_back(g.label_embedding.data);
        return views;
    }
};

/// Closed-form forward noising: x_t = sqrt(abar_t) x0 + sqrt(1-abar_t) eps.
inline DenseMatrix q_sample(const NoiseSchedule& sched, const DenseMatrix& x0, std::size_t t,
                            const DenseMatrix& eps) {
    x0.check_same_shape(eps, "q_sample");
    const double a = std::sqrt(sched.alpha_bar(sched.check_step(t)));
    const double s = std::sqrt(1.0 - sched.alpha_bar(t));
    DenseMatrix out(x0.rows, x0.cols);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = a * x0.data[i] + s * eps.data[i];
    return out;
}

namespace detail {

/// Shared draw for the training loss paths: one uniform timestep and one
/// standard-normal noise row per sample, in a fixed consumption order.
struct DdpmDraw {
    std::vector<int> ts;
    DenseMatrix eps;
    DenseMatrix x_t;
};

inline DdpmDraw ddpm_draw(const NoiseSchedule& sched, const DenseMatrix& x0, Rng& rng) {
    DdpmDraw d;
    d.ts.resize(x0.rows);
    for (auto& t : d.ts) t = rng.uniform_int(1, static_cast<int>(sched.steps));
    d.eps = rng.normal_matrix(x0.rows, x0.cols);
    d.x_t = DenseMatrix(x0.rows, x0.cols);
    for (std::size_t i = 0; i < x0.rows; ++i) {
        const auto t = static_cast<std::size_t>(d.ts[i]);
        const double a = std::sqrt(sched.alpha_bar(t));
        const double s = std::sqrt(1.0 - sched.alpha_bar(t));
        for (std::size_t j = 0; j < x0.cols; ++j)
            d.x_t(i, j) = a * x0(i, j) + s * d.eps(i, j);
    }
    return d;
}

inline double mean_sq_row_norm(const DenseMatrix& a, const DenseMatrix& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double diff = a.data[i] - b.data[i];
        acc += diff * diff;
    }
    return acc / static_cast<double>(a.rows);
}

} // namespace detail

struct DdpmLossResult {
    double loss = 0.0;
    ConditionalDenoiser::Grads grads;
};

/// Conditional noise-prediction loss: per row, t ~ Uniform{1..T} and
/// eps ~ N(0, I); the loss is the batch mean of |eps - eps_theta(x_t, y, t)|^2
/// with exact gradients for all model parameters.
inline DdpmLossResult ddpm_loss(const NoiseSchedule& sched, const ConditionalDenoiser& model,
                                const DenseMatrix& x0, std::span<const int> labels, Rng& rng) {
    if (x0.rows == 0) throw ArgumentError("ddpm_loss: empty batch");
    if (labels.size() != x0.rows) throw DimensionError("ddpm_loss: one label per row required");
    model.check_labels(labels);
    auto draw = detail::ddpm_draw(sched, x0, rng);
    ConditionalDenoiser::Trace trace;
    DenseMatrix pred = model.forward(draw.x_t, labels, draw.ts, &trace);
    DdpmLossResult result;
    result.loss = detail::mean_sq_row_norm(pred, draw.eps);
    DenseMatrix upstream = pred;
    upstream -= draw.eps;
    upstream *= 2.0 / static_cast<double>(x0.rows);
    result.grads = model.backward(trace, labels, upstream);
    return result;
}

/// Loss-only variant with a pluggable predictor, used to pin expectations:
/// the hook sees (x_t, true eps, labels, ts) and returns the prediction.
using EpsHook = std::function<DenseMatrix(const DenseMatrix& x_t, const DenseMatrix& eps,
                                          std::span<const int> labels, std::span<const int> ts)>;

inline double ddpm_loss_value(const NoiseSchedule& sched, const EpsHook& hook,
                              const DenseMatrix& x0, std::span<const int> labels, Rng& rng) {
    if (x0.rows == 0) throw ArgumentError("ddpm_loss_value: empty batch");
    auto draw = detail::ddpm_draw(sched, x0, rng);
    DenseMatrix pred = hook(draw.x_t, draw.eps, labels, draw.ts);
    return detail::mean_sq_row_norm(pred, draw.eps);
}

/// Variational-bound decomposition in nats: prior term L_T, per-step
/// KL terms L_{t-1} for t = 2..T, and the reconstruction term L_0.
struct VlbReport {
    double prior_term = 0.0;             // L_T
    std::vector<double> step_terms;      // index 0 holds L_1 (t = 2)
    double recon_term = 0.0;             // L_0

    double total() const {
        double acc = prior_term + recon_term;
        for (double v : step_terms) acc += v;
        return acc;
    }
};

/// Monte-Carlo estimate of the bound for a single data row. L_T and the
/// Gaussian KLs are closed-form given each x_t draw; p_theta shares the
/// ancestral variance with the true posterior so each KL reduces to a scaled
/// mean-squared difference of means.
inline VlbReport vlb(const NoiseSchedule& sched, const EpsModel& model, const DenseMatrix& x0,
                     int label, Rng& rng, std::size_t mc_samples) {
    if (x0.rows != 1) throw ArgumentError("vlb: expects a single row");
    if (mc_samples < 1) throw ArgumentError("vlb: mc_samples must be >= 1");
    const auto d = static_cast<double>(x0.cols);
    const std::size_t T = sched.steps;
    VlbReport report;

    // L_T = KL( N(sqrt(abar_T) x0, (1-abar_T) I) || N(0, I) )
    {
        const double abar = sched.alpha_bar(T);
        double mu_sq = 0.0;
        for (double v : x0.data) mu_sq += abar * v * v;
        const double var = 1.0 - abar;
        report.prior_term = 0.5 * (d * var + mu_sq - d - d * std::log(var));
    }

    report.step_terms.assign(T - 1, 0.0);
    std::vector<int> labels(mc_samples, label);
    for (std::size_t t = 2; t <= T; ++t) {
        const double abar_t = sched.alpha_bar(t);
        const double abar_prev = sched.alpha_bar(t - 1);
        const double beta = sched.beta(t);
        const double alpha = sched.alpha(t);
        const double post_var = (1.0 - abar_prev) / (1.0 - abar_t) * beta;
        const double c0 = std::sqrt(abar_prev) * beta / (1.0 - abar_t);
        const double ct = std::sqrt(alpha) * (1.0 - abar_prev) / (1.0 - abar_t);

        DenseMatrix eps = rng.normal_matrix(mc_samples, x0.cols);
        DenseMatrix x_t(mc_samples, x0.cols);
        const double a = std::sqrt(abar_t), s = std::sqrt(1.0 - abar_t);
        for (std::size_t i = 0; i < mc_samples; ++i)
            for (std::size_t j = 0; j < x0.cols; ++j)
                x_t(i, j) = a * x0(0, j) + s * eps(i, j);

        std::vector<int> ts(mc_samples, static_cast<int>(t));
        DenseMatrix pred = model.predict_eps(x_t, labels, ts);

        double acc = 0.0;
        for (std::size_t i = 0; i < mc_samples; ++i)
            for (std::size_t j = 0; j < x0.cols; ++j) {
                const double post_mean = c0 * x0(0, j) + ct * x_t(i, j);
                const double model_mean =
                    (x_t(i, j) - beta / std::sqrt(1.0 - abar_t) * pred(i, j)) / std::sqrt(alpha);
                const double diff = post_mean - model_mean;
                acc += diff * diff;
            }
        report.step_terms[t - 2] = acc / (2.0 * post_var * static_cast<double>(mc_samples));
    }

    // L_0: Gaussian negative log-density of x0 under p_theta(x0 | x1).
    {
        const double abar1 = sched.alpha_bar(1);
        const double beta1 = sched.beta(1);
        const double alpha1 = sched.alpha(1);
        const double var = sched.ancestral_sigma(1) * sched.ancestral_sigma(1);
        DenseMatrix eps = rng.normal_matrix(mc_samples, x0.cols);
        const double a = std::sqrt(abar1), s = std::sqrt(1.0 - abar1);
        std::vector<int> ts(mc_samples, 1);
        DenseMatrix x1(mc_samples, x0.cols);
        for (std::size_t i = 0; i < mc_samples; ++i)
            for (std::size_t j = 0; j < x0.cols; ++j)
                x1(i, j) = a * x0(0, j) + s * eps(i, j);
        DenseMatrix pred = model.predict_eps(x1, labels, ts);
        double acc = 0.0;
        for (std::size_t i = 0; i < mc_samples; ++i)
            for (std::size_t j = 0; j < x0.cols; ++j) {
                const double model_mean =
                    (x1(i, j) - beta1 / std::sqrt(1.0 - abar1) * pred(i, j)) / std::sqrt(alpha1);
                const double diff = x0(0, j) - model_mean;
                acc += diff * diff;
            }
        report.recon_term = 0.5 * d * std::log(2.0 * std::numbers::pi * var) +
                            acc / (2.0 * var * static_cast<double>(mc_samples));
    }
    return report;
}

/// T-step stochastic reverse chain from pure noise:
/// x_{t-1} = (x_t - (1-alpha_t)/sqrt(1-abar_t) * eps_theta) / sqrt(alpha_t)
///            + sigma_t z, with z = 0 at the final step.
inline DenseMatrix ancestral_sample(const NoiseSchedule& sched, const EpsModel& model, int label,
                                    std::size_t n, Rng& rng) {
    if (n < 1) throw ArgumentError("ancestral_sample: n must be >= 1");
    DenseMatrix x = rng.normal_matrix(n, model.data_dim());
    for (std::size_t t = sched.steps; t >= 1; --t) {
        DenseMatrix eps_hat = model.predict_eps_const(x, label, static_cast<int>(t));
        const double alpha = sched.alpha(t);
        const double abar = sched.alpha_bar(t);
        const double coef = (1.0 - alpha) / std::sqrt(1.0 - abar);
        const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
        for (std::size_t i = 0; i < x.data.size(); ++i)
            x.data[i] = (x.data[i] - coef * eps_hat.data[i]) * inv_sqrt_alpha;
        if (t > 1) {
            const double sigma = sched.ancestral_sigma(t);
            for (double& v : x.data) v += sigma * rng.normal();
        }
        if (!x.all_finite())
            throw SamplingDivergedError(t, "ancestral sampling produced non-finite values");
    }
    if (const DataScaler* s = model.output_scaler()) s->restore_in_place(x);
    return x;
}

} // namespace dts
