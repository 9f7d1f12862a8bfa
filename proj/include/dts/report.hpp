#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "dts/metrics.hpp"
#include "dts/pipeline.hpp"
#include "dts/schedule.hpp"

namespace dts {

/// Fixed 6-significant-digit formatting for every number that lands in a
/// report, so equal runs produce byte-equal files.
inline std::string format_metric(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

inline constexpr const char* kRunReportHeader = "dts-run-report v1";

inline void write_run_report(const RunReport& report, std::ostream& out) {
    out << kRunReportHeader << '\n';
    out << "baseline_target_accuracy = " << format_metric(report.baseline_target_accuracy) << '\n';
    out << "baseline_transductive_accuracy = "
        << format_metric(report.baseline_transductive_accuracy) << '\n';
    out << "pseudo_label_accuracy = " << format_metric(report.pseudo_label_accuracy) << '\n';
    out << "cdpm_steps_run = " << report.cdpm_steps_run << '\n';
    out << "cdpm_final_loss = " << format_metric(report.cdpm_final_loss) << '\n';
    out << "generated_count = " << report.generated_count << '\n';
    out << "final_target_accuracy = " << format_metric(report.final_target_accuracy) << '\n';
    out << "final_transductive_accuracy = "
        << format_metric(report.final_transductive_accuracy) << '\n';
    out << "degenerate_baseline = " << (report.degenerate_baseline ? 1 : 0) << '\n';
    if (report.bound) {
        const BoundReport& b = *report.bound;
        out << "bound.source_risk = " << format_metric(b.source_risk) << '\n';
        out << "bound.generated_risk = " << format_metric(b.generated_risk) << '\n';
        out << "bound.augmented_risk = " << format_metric(b.augmented_risk) << '\n';
        out << "bound.dist_source_target = " << format_metric(b.dist_source_target) << '\n';
        out << "bound.dist_generated_target = " << format_metric(b.dist_generated_target) << '\n';
        out << "bound.dist_augmented_target = " << format_metric(b.dist_augmented_target) << '\n';
        out << "bound.mixing_alpha = " << format_metric(b.mixing_alpha) << '\n';
        out << "bound.premise_holds = " << (b.premise_holds ? 1 : 0) << '\n';
        out << "bound.constant_C = not-estimated\n";
    }
}

inline void write_run_report(const RunReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report " + path.string());
    write_run_report(report, out);
    if (!out) throw IoError("write failed for " + path.string());
}

/// Loss trace as delimited text: step, task_loss, reg_loss, lambda_effective.
inline void write_loss_trace(const std::vector<LossTraceRow>& trace,
                             const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write trace " + path.string());
    out << "step,task_loss,reg_loss,lambda_effective\n";
    for (const auto& row : trace)
        out << row.step << ',' << format_metric(row.task_loss) << ','
            << format_metric(row.reg_loss) << ',' << format_metric(row.tradeoff_effective)
            << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

inline void write_cdpm_trace(const std::vector<double>& trace,
                             const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write trace " + path.string());
    out << "step,loss\n";
    for (std::size_t i = 0; i < trace.size(); ++i)
        out << i << ',' << format_metric(trace[i]) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

/// Schedule table: t, beta, alpha, alpha_bar, ancestral sigma, log-SNR.
inline void write_schedule_dump(const NoiseSchedule& sched, std::ostream& out) {
    out << "t,beta,alpha,alpha_bar,sigma_ancestral,log_snr\n";
    for (std::size_t t = 1; t <= sched.steps; ++t)
        out << t << ',' << format_metric(sched.beta(t)) << ',' << format_metric(sched.alpha(t))
            << ',' << format_metric(sched.alpha_bar(t)) << ','
            << format_metric(sched.ancestral_sigma(t)) << ',' << format_metric(sched.log_snr(t))
            << '\n';
}

} // namespace dts
