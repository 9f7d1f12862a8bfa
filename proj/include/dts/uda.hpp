#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dts/dataset.hpp"
#include "dts/matrix.hpp"
#include "dts/mlp.hpp"
#include "dts/optimizer.hpp"
#include "dts/rng.hpp"

namespace dts {

enum class RegularizerKind { mmd, adversarial };

inline const char* regularizer_name(RegularizerKind k) {
    return k == RegularizerKind::mmd ? "mmd" : "adversarial";
}

inline RegularizerKind regularizer_from_name(const std::string& s) {
    if (s == "mmd") return RegularizerKind::mmd;
    if (s == "adversarial") return RegularizerKind::adversarial;
    throw ConfigError("unknown regularizer: " + s);
}

/// Feature transform + classifier head, with an optional domain discriminator
/// when the transfer regularizer is adversarial.
struct UDAModel {
    Mlp transform;                    // d -> d_f
    Mlp head;                         // d_f -> C logits
    std::optional<Mlp> discriminator; // d_f -> 1 logit
    RegularizerKind regularizer = RegularizerKind::mmd;
    double tradeoff = 1.0; // lambda >= 0

    std::size_t class_count() const { return head.output_width(); }
    std::size_t feature_dim() const { return transform.output_width(); }

    DenseMatrix features(const DenseMatrix& x) const { return mlp_forward(transform, x); }
    DenseMatrix logits(const DenseMatrix& x) const {
        return mlp_forward(head, features(x));
    }

    std::vector<int> predict(const DenseMatrix& x) const {
        DenseMatrix l = logits(x);
        std::vector<int> out(l.rows);
        for (std::size_t i = 0; i < l.rows; ++i) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < l.cols; ++j)
                if (l(i, j) > l(i, best)) best = j;
            out[i] = static_cast<int>(best);
        }
        return out;
    }
};

struct UdaModelConfig {
    std::vector<std::size_t> transform_hidden = {32};
    std::size_t feature_dim = 16;
    std::vector<std::size_t> discriminator_hidden = {8};
    RegularizerKind regularizer = RegularizerKind::mmd;
    double tradeoff = 1.0;
    Activation activation = Activation::relu;
};

inline UDAModel make_uda_model(std::size_t input_dim, std::size_t classes,
                               const UdaModelConfig& cfg, Rng& rng) {
    if (classes < 2) throw ConfigError("make_uda_model: need at least 2 classes");
    if (cfg.tradeoff < 0.0) throw ConfigError("make_uda_model: tradeoff must be >= 0");
    UDAModel m;
    m.regularizer = cfg.regularizer;
    m.tradeoff = cfg.tradeoff;
    std::vector<std::size_t> tw;
    tw.push_back(input_dim);
    tw.insert(tw.end(), cfg.transform_hidden.begin(), cfg.transform_hidden.end());
    tw.push_back(cfg.feature_dim);
    m.transform = Mlp::make(tw, cfg.activation, rng);
    const std::size_t head_widths[] = {cfg.feature_dim, classes};
    m.head = Mlp::make(head_widths, cfg.activation, rng);
    if (cfg.regularizer == RegularizerKind::adversarial) {
        std::vector<std::size_t> dw;
        dw.push_back(cfg.feature_dim);
        dw.insert(dw.end(), cfg.discriminator_hidden.begin(), cfg.discriminator_hidden.end());
        dw.push_back(1);
        m.discriminator = Mlp::make(dw, cfg.activation, rng);
    }
    return m;
}

struct CrossEntropyResult {
    double loss = 0.0;
    DenseMatrix logit_grad;
};

/// Mean negative log-softmax of the true class, with exact logit gradients.
inline CrossEntropyResult cross_entropy(const DenseMatrix& logits, std::span<const int> labels) {
    if (logits.rows == 0) throw ArgumentError("cross_entropy: empty batch");
    if (labels.size() != logits.rows)
        throw DimensionError("cross_entropy: one label per row required");
    CrossEntropyResult r;
    r.logit_grad = DenseMatrix(logits.rows, logits.cols);
    const double inv_n = 1.0 / static_cast<double>(logits.rows);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= logits.cols)
            throw LabelError("label " + std::to_string(label) + " outside [0, " +
                             std::to_string(logits.cols) + ")");
        double mx = logits(i, 0);
        for (std::size_t j = 1; j < logits.cols; ++j) mx = std::max(mx, logits(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) sum += std::exp(logits(i, j) - mx);
        const double log_sum = std::log(sum) + mx;
        r.loss += (log_sum - logits(i, static_cast<std::size_t>(label))) * inv_n;
        for (std::size_t j = 0; j < logits.cols; ++j) {
            const double p = std::exp(logits(i, j) - log_sum);
            r.logit_grad(i, j) = (p - (static_cast<std::size_t>(label) == j ? 1.0 : 0.0)) * inv_n;
        }
    }
    return r;
}

enum class MmdEstimator { unbiased, biased };

struct MmdResult {
    double estimate = 0.0; // unclipped, feeds gradients
    DenseMatrix grad_a;
    DenseMatrix grad_b;

    double reported() const { return std::max(0.0, estimate); }
};

/// Median-heuristic bandwidth ladder gamma0 * 2^k, k in {-2..2}, for the
/// multi-kernel RBF MMD. gamma0^2 = median(squared pairwise distance)/2.
inline std::vector<double> mmd_bandwidths(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix z = vcat(a, b);
    std::vector<double> d2;
    d2.reserve(z.rows * (z.rows - 1) / 2);
    for (std::size_t i = 0; i < z.rows; ++i)
        for (std::size_t j = i + 1; j < z.rows; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < z.cols; ++k) {
                const double diff = z(i, k) - z(j, k);
                acc += diff * diff;
            }
            if (acc > 0.0) d2.push_back(acc);
        }
    double med = 1.0;
    if (!d2.empty()) {
        const auto mid = d2.begin() + static_cast<std::ptrdiff_t>(d2.size() / 2);
        std::nth_element(d2.begin(), mid, d2.end());
        med = *mid;
    }
    const double gamma0 = std::sqrt(std::max(med, 1e-12) / 2.0);
    std::vector<double> out;
    for (int k = -2; k <= 2; ++k) out.push_back(gamma0 * std::pow(2.0, k));
    return out;
}

/// Multi-kernel RBF MMD^2 with gradients w.r.t. both sample sets. The
/// unbiased estimator drops diagonal terms and needs at least two rows per
/// side; the biased one keeps them.
inline MmdResult mmd(const DenseMatrix& a, const DenseMatrix& b,
                     std::span<const double> bandwidths,
                     MmdEstimator estimator = MmdEstimator::unbiased) {
    if (a.rows == 0 || b.rows == 0) throw ArgumentError("mmd: empty sample set");
    if (a.cols != b.cols)
        throw DimensionError("mmd: " + a.shape_string() + " vs " + b.shape_string());
    if (bandwidths.empty()) throw ArgumentError("mmd: need at least one bandwidth");
    const std::size_t m = a.rows, n = b.rows;
    if (estimator == MmdEstimator::unbiased && (m < 2 || n < 2))
        throw EstimatorError("mmd: unbiased estimator needs >= 2 rows per side");

    DenseMatrix z = vcat(a, b);
    const std::size_t total = z.rows;
    // Pairwise squared distances.
    DenseMatrix d2(total, total);
    for (std::size_t i = 0; i < total; ++i)
        for (std::size_t j = i + 1; j < total; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < z.cols; ++k) {
                const double diff = z(i, k) - z(j, k);
                acc += diff * diff;
            }
            d2(i, j) = acc;
            d2(j, i) = acc;
        }

    const double waa = estimator == MmdEstimator::unbiased
                           ? 1.0 / static_cast<double>(m * (m - 1))
                           : 1.0 / static_cast<double>(m * m);
    const double wbb = estimator == MmdEstimator::unbiased
                           ? 1.0 / static_cast<double>(n * (n - 1))
                           : 1.0 / static_cast<double>(n * n);
    const double wab = -1.0 / static_cast<double>(m * n);
    const bool keep_diag = estimator == MmdEstimator::biased;

    MmdResult r;
    DenseMatrix grad_z(total, z.cols);
    const double inv_k = 1.0 / static_cast<double>(bandwidths.size());
    for (double gamma : bandwidths) {
        const double inv_g2 = 1.0 / (gamma * gamma);
        double value = 0.0;
        for (std::size_t i = 0; i < total; ++i) {
            for (std::size_t j = 0; j < total; ++j) {
                if (i == j && !keep_diag) continue;
                const bool ia = i < m, ja = j < m;
                const double w = (ia && ja) ? waa : (!ia && !ja) ? wbb : wab;
                const double kij = std::exp(-0.5 * d2(i, j) * inv_g2);
                value += w * kij;
                if (i == j) continue;
                // Both symmetric kernel entries touching z_i land here.
                const double coef = -2.0 * w * kij * inv_g2 * inv_k;
                for (std::size_t kcol = 0; kcol < z.cols; ++kcol)
                    grad_z(i, kcol) += coef * (z(i, kcol) - z(j, kcol));
            }
        }
        r.estimate += value * inv_k;
    }
    r.grad_a = DenseMatrix(m, z.cols);
    r.grad_b = DenseMatrix(n, z.cols);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < z.cols; ++k) r.grad_a(i, k) = grad_z(i, k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < z.cols; ++k) r.grad_b(i, k) = grad_z(m + i, k);
    return r;
}

struct AdversarialResult {
    double loss = 0.0;             // domain-classification BCE
    MlpGrads discriminator_grads;  // descent direction for the discriminator
    DenseMatrix source_feature_grad; // already sign-reversed for the transform
    DenseMatrix target_feature_grad; // already sign-reversed for the transform
};

/// Domain-adversarial regularizer: the discriminator reads features (source
/// labelled 1, target 0) and its BCE gradients descend, while the feature
/// gradients handed back to the transform are sign-reversed (gradient
/// reversal), so a single joint descent step plays the minimax game.
inline AdversarialResult adversarial_reg(const UDAModel& model, const DenseMatrix& src_feats,
                                         const DenseMatrix& tgt_feats) {
    if (!model.discriminator)
        throw ConfigError("adversarial_reg: model has no domain discriminator");
    const Mlp& disc = *model.discriminator;
    const double inv_n = 1.0 / static_cast<double>(src_feats.rows + tgt_feats.rows);

    auto half = [&](const DenseMatrix& feats, double domain_label, MlpGrads& acc_grads,
                    DenseMatrix& feat_grad, bool first) {
        MlpTrace trace;
        DenseMatrix z = mlp_forward(disc, feats, &trace);
        double loss = 0.0;
        DenseMatrix gz(z.rows, 1);
        for (std::size_t i = 0; i < z.rows; ++i) {
            const double zi = z(i, 0);
            // softplus(z) - y z, computed stably
            loss += std::max(zi, 0.0) + std::log1p(std::exp(-std::abs(zi))) - domain_label * zi;
            const double p = 1.0 / (1.0 + std::exp(-zi));
            gz(i, 0) = (p - domain_label) * inv_n;
        }
        MlpGrads g = mlp_backward(disc, trace, gz);
        feat_grad = g.input;
        if (first)
            acc_grads = std::move(g);
        else
            acc_grads += g;
        return loss * inv_n;
    };

    AdversarialResult r;
    DenseMatrix src_grad, tgt_grad;
    r.loss = half(src_feats, 1.0, r.discriminator_grads, src_grad, true);
    r.loss += half(tgt_feats, 0.0, r.discriminator_grads, tgt_grad, false);
    src_grad *= -1.0;
    tgt_grad *= -1.0;
    r.source_feature_grad = std::move(src_grad);
    r.target_feature_grad = std::move(tgt_grad);
    return r;
}

struct UdaTrainConfig {
    std::size_t steps = 2000;
    std::size_t batch = 64;
    double learning_rate = 0.05;
    double momentum = 0.9;
};

struct LossTraceRow {
    std::size_t step = 0;
    double task_loss = 0.0;
    double reg_loss = 0.0;
    double tradeoff_effective = 0.0;
};

struct UdaTrainResult {
    UDAModel model;
    std::vector<LossTraceRow> trace;
};

namespace detail {

inline std::vector<std::span<double>> uda_param_views(UDAModel& m) {
    auto views = mlp_param_views(m.transform);
    auto head = mlp_param_views(m.head);
    views.insert(views.end(), head.begin(), head.end());
    if (m.discriminator) {
        auto disc = mlp_param_views(*m.discriminator);
        views.insert(views.end(), disc.begin(), disc.end());
    }
    return views;
}

} // namespace detail

/// Minibatch SGD-momentum on (1/N) sum L_c + lambda * R(T(source), T(target))
/// with annealed learning rate and the warmup ramp on lambda. With a zero
/// trade-off the target stream is never touched and the run is exactly a
/// source-only trainer.
inline UdaTrainResult train_uda(const DomainPair& pair, UDAModel model,
                                const UdaTrainConfig& cfg, Rng& rng) {
    if (!pair.source.labeled()) throw ArgumentError("train_uda: source must be labeled");
    if (pair.source.size() == 0 || pair.target.size() == 0)
        throw ArgumentError("train_uda: empty domain");
    if (cfg.steps == 0) throw ConfigError("train_uda: steps must be positive");
    const bool use_reg = model.tradeoff > 0.0;
    if (use_reg && model.regularizer == RegularizerKind::adversarial && !model.discriminator)
        throw ConfigError("train_uda: adversarial regularizer needs a discriminator");

    SgdMomentum opt(cfg.learning_rate, cfg.momentum);
    UdaTrainResult result;
    result.trace.reserve(cfg.steps);

    for (std::size_t step = 0; step < cfg.steps; ++step) {
        const double progress = static_cast<double>(step) / static_cast<double>(cfg.steps);
        const double lr = annealed_lr(cfg.learning_rate, progress);
        const double lambda_eff = use_reg ? model.tradeoff * warmup_ramp(progress) : 0.0;

        const auto src_idx = rng.sample_indices(pair.source.size(), cfg.batch);
        DenseMatrix xs = take_rows(pair.source.features, src_idx);
        std::vector<int> ys(cfg.batch);
        for (std::size_t i = 0; i < cfg.batch; ++i) ys[i] = pair.source.labels[src_idx[i]];

        MlpTrace src_trace;
        DenseMatrix src_feats = mlp_forward(model.transform, xs, &src_trace);
        MlpTrace head_trace;
        DenseMatrix logits = mlp_forward(model.head, src_feats, &head_trace);
        CrossEntropyResult ce = cross_entropy(logits, ys);
        if (!std::isfinite(ce.loss))
            throw TrainingDivergedError(step, "task loss became non-finite");
        MlpGrads head_grads = mlp_backward(model.head, head_trace, ce.logit_grad);

        double reg_loss = 0.0;
        MlpGrads transform_grads;
        std::optional<MlpGrads> disc_grads;
        if (use_reg) {
            const auto tgt_idx = rng.sample_indices(pair.target.size(), cfg.batch);
            DenseMatrix xt = take_rows(pair.target.features, tgt_idx);
            MlpTrace tgt_trace;
            DenseMatrix tgt_feats = mlp_forward(model.transform, xt, &tgt_trace);

            DenseMatrix src_upstream = head_grads.input;
            DenseMatrix tgt_upstream;
            if (model.regularizer == RegularizerKind::mmd) {
                const auto bw = mmd_bandwidths(src_feats, tgt_feats);
                MmdResult mm = mmd(src_feats, tgt_feats, bw, MmdEstimator::unbiased);
                reg_loss = mm.reported();
                mm.grad_a *= lambda_eff;
                mm.grad_b *= lambda_eff;
                src_upstream += mm.grad_a;
                tgt_upstream = std::move(mm.grad_b);
            } else {
                AdversarialResult adv = adversarial_reg(model, src_feats, tgt_feats);
                reg_loss = adv.loss;
                adv.source_feature_grad *= lambda_eff;
                adv.target_feature_grad *= lambda_eff;
                src_upstream += adv.source_feature_grad;
                tgt_upstream = std::move(adv.target_feature_grad);
                disc_grads = std::move(adv.discriminator_grads);
            }
            transform_grads = mlp_backward(model.transform, src_trace, src_upstream);
            transform_grads += mlp_backward(model.transform, tgt_trace, tgt_upstream);
        } else {
            transform_grads = mlp_backward(model.transform, src_trace, head_grads.input);
        }

        auto params = detail::uda_param_views(model);
        auto grad_views = mlp_grad_views(transform_grads);
        auto head_views = mlp_grad_views(head_grads);
        grad_views.insert(grad_views.end(), head_views.begin(), head_views.end());
        if (model.discriminator) {
            if (!disc_grads) { // regularizer off this run; keep tensor lists aligned
                disc_grads = MlpGrads{};
                for (const auto& layer : model.discriminator->layers) {
                    disc_grads->weight.emplace_back(layer.weight.rows, layer.weight.cols);
                    disc_grads->bias.emplace_back(layer.bias.size(), 0.0);
                }
            }
            auto disc_views = mlp_grad_views(*disc_grads);
            grad_views.insert(grad_views.end(), disc_views.begin(), disc_views.end());
        }
        opt.step(params, grad_views, lr);

        result.trace.push_back({step, ce.loss, reg_loss, lambda_eff});
    }
    result.model = std::move(model);
    return result;
}

/// Labels every target row with the argmax class of the classifier head.
inline LabeledDataset pseudo_label(const UDAModel& model, const LabeledDataset& target) {
    LabeledDataset out;
    out.features = target.features;
    out.domain = target.domain;
    out.labels = model.predict(target.features);
    return out;
}

/// Fraction of rows whose argmax prediction matches the label.
inline double accuracy(const UDAModel& model, const LabeledDataset& data) {
    if (data.size() == 0) throw ArgumentError("accuracy: empty dataset");
    if (!data.labeled()) throw ArgumentError("accuracy: dataset has no labels");
    const auto pred = model.predict(data.features);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == data.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(pred.size());
}

} // namespace dts
