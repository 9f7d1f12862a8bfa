#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dts/cdpm.hpp"
#include "dts/dataset.hpp"
#include "dts/metrics.hpp"
#include "dts/schedule.hpp"
#include "dts/solver.hpp"
#include "dts/uda.hpp"

namespace dts {

enum class SamplerKind { ancestral, dpm_solver_pp };
enum class RetrainMode { from_scratch, finetune_pretrained };
enum class AblationMode { full, no_generation, no_original_source };

inline const char* sampler_kind_name(SamplerKind s) {
    return s == SamplerKind::ancestral ? "ancestral" : "dpm_solver_pp";
}
inline SamplerKind sampler_kind_from_name(const std::string& s) {
    if (s == "ancestral") return SamplerKind::ancestral;
    if (s == "dpm_solver_pp") return SamplerKind::dpm_solver_pp;
    throw ConfigError("unknown sampler: " + s);
}
inline const char* retrain_mode_name(RetrainMode m) {
    return m == RetrainMode::from_scratch ? "from_scratch" : "finetune_pretrained";
}
inline RetrainMode retrain_mode_from_name(const std::string& s) {
    if (s == "from_scratch") return RetrainMode::from_scratch;
    if (s == "finetune_pretrained") return RetrainMode::finetune_pretrained;
    throw ConfigError("unknown retrain mode: " + s);
}
inline const char* ablation_mode_name(AblationMode m) {
    switch (m) {
        case AblationMode::full: return "full";
        case AblationMode::no_generation: return "no_generation";
        case AblationMode::no_original_source: return "no_original_source";
    }
    return "?";
}
inline AblationMode ablation_mode_from_name(const std::string& s) {
    if (s == "full") return AblationMode::full;
    if (s == "no_generation") return AblationMode::no_generation;
    if (s == "no_original_source") return AblationMode::no_original_source;
    throw ConfigError("unknown ablation: " + s);
}

struct ScheduleConfig {
    std::size_t steps = 200;
    double beta_start = 1e-4;
    double beta_end = 0.05;

    NoiseSchedule build() const { return linear_schedule(steps, beta_start, beta_end); }
};

struct CdpmTrainConfig {
    std::size_t embed_dim = 16;
    std::vector<std::size_t> hidden = {64, 64};
    Activation activation = Activation::relu;
    std::size_t max_steps = 8000;
    std::size_t min_steps = 3000;
    std::size_t batch = 64;
    double learning_rate = 2e-3;
    double momentum = 0.9;
    std::size_t patience_window = 500;  // steps per moving-average block
    double min_improvement = 1e-3;      // relative; stop below this
    bool standardize = true;
};

/// Every knob of one end-to-end run.
struct DtsConfig {
    std::size_t n_generated_per_class = 200;
    SamplerKind sampler = SamplerKind::dpm_solver_pp;
    std::size_t solver_steps = 10;
    SolverForm solver_form = SolverForm::data_prediction;
    RetrainMode retrain = RetrainMode::from_scratch;
    AblationMode ablation = AblationMode::full;
    ScheduleConfig schedule;
    UdaModelConfig uda_model;
    UdaTrainConfig uda_train;
    CdpmTrainConfig cdpm;
    std::size_t metric_projections = 50;
    std::uint64_t seed = 0;

    void validate() const {
        if (sampler == SamplerKind::dpm_solver_pp &&
            (solver_steps < 2 || solver_steps > schedule.steps))
            throw ConfigError("DtsConfig: solver_steps must be in [2, schedule.steps]");
        if (cdpm.patience_window == 0) throw ConfigError("DtsConfig: patience window must be > 0");
        if (cdpm.batch == 0 || uda_train.batch == 0)
            throw ConfigError("DtsConfig: batch sizes must be positive");
    }
};

struct CdpmTrainResult {
    ConditionalDenoiser model;
    std::vector<double> loss_trace; // one entry per step
    std::size_t steps_run = 0;
};

/// Trains the conditional denoiser on a labeled dataset until the noise loss
/// converges: fixed budget, early stop when the moving-average loss improves
/// by less than `min_improvement` between consecutive windows.
inline CdpmTrainResult train_cdpm(const NoiseSchedule& sched, const LabeledDataset& data,
                                  std::size_t class_count, const CdpmTrainConfig& cfg, Rng& rng) {
    if (!data.labeled()) throw ArgumentError("train_cdpm: dataset must carry labels");
    if (data.size() == 0) throw ArgumentError("train_cdpm: empty dataset");
    CdpmTrainResult result;
    result.model = ConditionalDenoiser::make(data.dim(), cfg.embed_dim, cfg.hidden, class_count,
                                             rng, cfg.activation);
    if (cfg.standardize) result.model.scaler = DataScaler::fit(data.features);
    const DenseMatrix scaled = result.model.scaler.apply(data.features);

    SgdMomentum opt(cfg.learning_rate, cfg.momentum);
    double prev_window = -1.0;
    double window_acc = 0.0;
    const std::size_t batch = std::min(cfg.batch, data.size());
    for (std::size_t step = 0; step < cfg.max_steps; ++step) {
        const double progress = static_cast<double>(step) / static_cast<double>(cfg.max_steps);
        const auto idx = rng.sample_indices(data.size(), batch);
        DenseMatrix x0 = take_rows(scaled, idx);
        std::vector<int> labels(batch);
        for (std::size_t i = 0; i < batch; ++i) labels[i] = data.labels[idx[i]];

        DdpmLossResult loss = ddpm_loss(sched, result.model, x0, labels, rng);
        if (!std::isfinite(loss.loss))
            throw TrainingDivergedError(step, "noise-prediction loss became non-finite");
        auto params = result.model.param_views();
        auto grads = result.model.grad_views(loss.grads);
        opt.step(params, grads, annealed_lr(cfg.learning_rate, progress));
        result.loss_trace.push_back(loss.loss);
        result.steps_run = step + 1;

        window_acc += loss.loss;
        if ((step + 1) % cfg.patience_window == 0) {
            const double window = window_acc / static_cast<double>(cfg.patience_window);
            window_acc = 0.0;
            if (prev_window > 0.0 && step + 1 >= cfg.min_steps) {
                const double improvement = (prev_window - window) / prev_window;
                if (improvement < cfg.min_improvement) break;
            }
            prev_window = window;
        }
    }
    return result;
}

/// Class-balanced conditional generation: n_per_class rows for every class,
/// labels carried from the conditioning signal. Chains for class c draw from
/// an independent fork of `rng`, so class order cannot perturb results.
inline LabeledDataset generate_labeled(const NoiseSchedule& sched, const EpsModel& model,
                                       std::size_t class_count, std::size_t n_per_class,
                                       SamplerKind sampler, std::size_t solver_steps,
                                       SolverForm form, Rng& rng) {
    LabeledDataset out;
    out.domain = DomainTag::generated;
    if (n_per_class == 0) return out;
    for (std::size_t c = 0; c < class_count; ++c) {
        Rng chain_rng = rng.fork(c);
        DenseMatrix rows;
        if (sampler == SamplerKind::ancestral) {
            rows = ancestral_sample(sched, model, static_cast<int>(c), n_per_class, chain_rng);
        } else {
            SamplerPlan plan = make_plan(sched, solver_steps, static_cast<int>(c));
            rows = multistep_sample(sched, model, plan, n_per_class, chain_rng, form);
        }
        out.features = vcat(out.features, rows);
        out.labels.insert(out.labels.end(), n_per_class, static_cast<int>(c));
    }
    return out;
}

/// Row-wise concatenation of the original source and the generated set;
/// an empty generated set returns the source unchanged.
inline LabeledDataset augment_source(const LabeledDataset& src, const LabeledDataset& generated) {
    if (!src.labeled()) throw ArgumentError("augment_source: source must be labeled");
    if (generated.size() == 0) return src;
    if (!generated.labeled()) throw ArgumentError("augment_source: generated set must be labeled");
    if (src.dim() != generated.dim())
        throw ArgumentError("augment_source: dimension mismatch " + std::to_string(src.dim()) +
                            " vs " + std::to_string(generated.dim()));
    LabeledDataset out;
    out.domain = DomainTag::augmented;
    out.features = vcat(src.features, generated.features);
    out.labels = src.labels;
    out.labels.insert(out.labels.end(), generated.labels.begin(), generated.labels.end());
    return out;
}

/// Final training stage on the augmented source: fresh parameters or the
/// pretrained classifier as the starting point.
inline UdaTrainResult retrain_final(const LabeledDataset& augmented, const LabeledDataset& target,
                                    const DtsConfig& cfg, const UDAModel* pretrained,
                                    Rng& init_rng, Rng& train_rng) {
    DomainPair pair;
    pair.source = augmented;
    pair.source.domain = DomainTag::augmented;
    pair.target.features = target.features;
    pair.target.domain = DomainTag::target;
    int classes = 0;
    for (int l : augmented.labels) classes = std::max(classes, l + 1);
    if (pretrained) classes = std::max<int>(classes, static_cast<int>(pretrained->class_count()));
    pair.class_count = classes;
    UDAModel model;
    if (cfg.retrain == RetrainMode::finetune_pretrained) {
        if (!pretrained)
            throw ConfigError("retrain_final: finetune mode requires a pretrained model");
        model = *pretrained;
        if (cfg.uda_train.steps == 0) return {model, {}};
    } else {
        model = make_uda_model(augmented.dim(), static_cast<std::size_t>(classes), cfg.uda_model,
                               init_rng);
    }
    return train_uda(pair, std::move(model), cfg.uda_train, train_rng);
}

struct RunReport {
    // Step 1
    double baseline_target_accuracy = 0.0;      // held-out when available
    double baseline_transductive_accuracy = 0.0;
    double pseudo_label_accuracy = 0.0;
    // Step 2
    std::size_t cdpm_steps_run = 0;
    double cdpm_final_loss = 0.0;
    // Step 3
    std::size_t generated_count = 0;
    double final_target_accuracy = 0.0;
    double final_transductive_accuracy = 0.0;
    std::optional<BoundReport> bound;
    bool degenerate_baseline = false; // count 0, full ablation: report is step 1

    std::vector<LossTraceRow> pretrain_trace;
    std::vector<double> cdpm_trace;
    std::vector<LossTraceRow> retrain_trace;
};

struct DtsRunResult {
    UDAModel pretrained;
    UDAModel final_model;
    std::optional<ConditionalDenoiser> cdpm;
    LabeledDataset pseudo_labeled;
    LabeledDataset generated;
    LabeledDataset augmented;
    RunReport report;
};

/// The three-step procedure: pretrain on (source, target), pseudo-label the
/// target and fit the conditional diffusion model on it, then sample a
/// class-balanced generated set, augment the source and retrain. Ablations
/// reroute step 3's training set; a zero generation count with the full
/// ablation degenerates to the step-1 baseline. Every stage derives its RNG
/// stream from cfg.seed, so reports are a pure function of (pair, cfg).
inline DtsRunResult run_dts(const DomainPair& pair, const DtsConfig& cfg) {
    cfg.validate();
    NoiseSchedule sched = cfg.schedule.build();
    DtsRunResult result;
    RunReport& report = result.report;

    // Step 1: pretrain the target classifier.
    {
        Rng rng(cfg.seed, "uda-pretrain");
        UDAModel model = make_uda_model(pair.source.dim(),
                                        static_cast<std::size_t>(pair.class_count),
                                        cfg.uda_model, rng);
        UdaTrainResult trained = train_uda(pair, std::move(model), cfg.uda_train, rng);
        result.pretrained = std::move(trained.model);
        report.pretrain_trace = std::move(trained.trace);
    }
    report.baseline_transductive_accuracy = accuracy(result.pretrained, pair.target_for_eval());
    report.baseline_target_accuracy = pair.has_eval()
                                          ? accuracy(result.pretrained, pair.eval)
                                          : report.baseline_transductive_accuracy;

    result.pseudo_labeled = pseudo_label(result.pretrained, pair.target);
    {
        const auto& truth = pair.target_eval_labels;
        std::size_t correct = 0;
        for (std::size_t i = 0; i < truth.size(); ++i)
            correct += result.pseudo_labeled.labels[i] == truth[i];
        report.pseudo_label_accuracy =
            truth.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truth.size());
    }

    // Degenerate pipeline: nothing to generate, nothing to retrain.
    if (cfg.ablation == AblationMode::full && cfg.n_generated_per_class == 0) {
        result.final_model = result.pretrained;
        report.final_target_accuracy = report.baseline_target_accuracy;
        report.final_transductive_accuracy = report.baseline_transductive_accuracy;
        report.degenerate_baseline = true;
        return result;
    }

    // Step 2: fit the conditional diffusion model on the pseudo-labeled target.
    if (cfg.ablation != AblationMode::no_generation) {
        Rng rng(cfg.seed, "cdpm-train");
        CdpmTrainResult trained =
            train_cdpm(sched, result.pseudo_labeled,
                       static_cast<std::size_t>(pair.class_count), cfg.cdpm, rng);
        report.cdpm_steps_run = trained.steps_run;
        report.cdpm_final_loss = trained.loss_trace.back();
        report.cdpm_trace = std::move(trained.loss_trace);
        result.cdpm = std::move(trained.model);

        Rng gen_rng(cfg.seed, "generate");
        result.generated = generate_labeled(sched, *result.cdpm,
                                            static_cast<std::size_t>(pair.class_count),
                                            cfg.n_generated_per_class, cfg.sampler,
                                            cfg.solver_steps, cfg.solver_form, gen_rng);
        report.generated_count = result.generated.size();
    }

    // Step 3: build the augmented source and train the final classifier.
    switch (cfg.ablation) {
        case AblationMode::full:
            result.augmented = augment_source(pair.source, result.generated);
            break;
        case AblationMode::no_generation: {
            LabeledDataset pseudo = result.pseudo_labeled;
            result.augmented = augment_source(pair.source, pseudo);
            break;
        }
        case AblationMode::no_original_source:
            result.augmented = result.generated;
            result.augmented.domain = DomainTag::generated;
            break;
    }

    {
        Rng init_rng(cfg.seed, "uda-retrain-init");
        Rng train_rng(cfg.seed, "uda-retrain");
        UdaTrainResult trained = retrain_final(result.augmented, pair.target, cfg,
                                               &result.pretrained, init_rng, train_rng);
        result.final_model = std::move(trained.model);
        report.retrain_trace = std::move(trained.trace);
    }
    report.final_transductive_accuracy = accuracy(result.final_model, pair.target_for_eval());
    report.final_target_accuracy = pair.has_eval() ? accuracy(result.final_model, pair.eval)
                                                   : report.final_transductive_accuracy;

    if (result.generated.size() >= 4) {
        Rng rng(cfg.seed, "metrics");
        report.bound = bound_report(pair, result.generated, result.augmented, result.final_model,
                                    rng);
    }
    return result;
}

} // namespace dts
