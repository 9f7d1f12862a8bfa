#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dts/cdpm.hpp"
#include "dts/schedule.hpp"

namespace dts {

/// Discrete time grid for the multistep solver: t_0 = T (noisiest) down to
/// t_M = 1, strictly decreasing, chosen uniform in log-SNR and snapped to the
/// schedule's steps.
struct SamplerPlan {
    std::vector<int> times;
    std::vector<double> log_snrs; // lambda at each grid time, strictly increasing
    int label = 0;

    std::size_t step_count() const { return times.empty() ? 0 : times.size() - 1; }

    /// h_i = lambda_{t_i} - lambda_{t_{i-1}} for i in [1, M].
    double step_size(std::size_t i) const { return log_snrs[i] - log_snrs[i - 1]; }
};

/// Grid points uniform in lambda between lambda_T and lambda_1, mapped to the
/// nearest discrete step and deduplicated while keeping t strictly
/// decreasing. The achieved step count can shrink below the request when
/// neighbouring targets snap to the same step.
inline SamplerPlan make_plan(const NoiseSchedule& sched, std::size_t steps, int label) {
    if (steps < 2) throw PlanError("make_plan: the second-order method needs at least 2 steps");
    if (steps > sched.steps)
        throw PlanError("make_plan: " + std::to_string(steps) + " steps exceed schedule T=" +
                        std::to_string(sched.steps));
    std::vector<double> table(sched.steps); // table[t-1] = lambda_t
    for (std::size_t t = 1; t <= sched.steps; ++t) table[t - 1] = sched.log_snr(t);

    const double lo = table[sched.steps - 1]; // lambda_T
    const double hi = table[0];               // lambda_1
    SamplerPlan plan;
    plan.label = label;
    for (std::size_t k = 0; k <= steps; ++k) {
        const double target =
            lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(steps);
        std::size_t best = 1;
        double best_dist = std::abs(table[0] - target);
        for (std::size_t t = 2; t <= sched.steps; ++t) {
            const double dist = std::abs(table[t - 1] - target);
            if (dist < best_dist) {
                best_dist = dist;
                best = t;
            }
        }
        const int t = static_cast<int>(best);
        if (!plan.times.empty() && t >= plan.times.back()) continue; // dedup, keep decreasing
        plan.times.push_back(t);
        plan.log_snrs.push_back(table[best - 1]);
    }
    if (plan.times.size() < 3)
        throw PlanError("make_plan: grid collapsed to fewer than two transitions");
    return plan;
}

/// Extrapolation weights (1 + 1/(2 r_i), h_i/(2 h_{i-1})) with
/// r_i = h_{i-1}/h_i; they always differ by exactly one.
inline std::pair<double, double> multistep_coefficients(double h_cur, double h_prev) {
    const double ratio = h_cur / (2.0 * h_prev);
    return {1.0 + ratio, ratio};
}

/// Which quantity the two-point extrapolation is applied to. The update is
/// only a consistent integrator when the noise prediction is first converted
/// to a data prediction; the literal epsilon form is kept for comparison and
/// contracts the output distribution.
enum class SolverForm { data_prediction, epsilon_literal };

inline const char* solver_form_name(SolverForm f) {
    return f == SolverForm::data_prediction ? "data-prediction" : "as-printed";
}

inline SolverForm solver_form_from_name(const std::string& s) {
    if (s == "data-prediction") return SolverForm::data_prediction;
    if (s == "as-printed") return SolverForm::epsilon_literal;
    throw ConfigError("unknown solver form: " + s);
}

/// Multistep second-order solver: starting from x_{t_0} ~ N(0, I),
///   W_i <- (1 + 1/(2 r_i)) m(x_{t_{i-1}}) - h_i/(2 h_{i-1}) m(x_{t_{i-2}})
///   x_{t_i} <- (sigma_{t_i}/sigma_{t_{i-1}}) x_{t_{i-1}}
///              - alpha_{t_i} (e^{-h_i} - 1) W_i
/// with alpha, sigma in the solver convention, a first-order bootstrap at
/// i = 1, and deterministic evolution after the initial draw. m(.) is the
/// data prediction (x_t - sigma_t eps_theta)/alpha_t or, in the literal form,
/// eps_theta itself.
inline DenseMatrix multistep_sample(const NoiseSchedule& sched, const EpsModel& model,
                                    const SamplerPlan& plan, std::size_t n, Rng& rng,
                                    SolverForm form = SolverForm::data_prediction) {
    if (n < 1) throw ArgumentError("multistep_sample: n must be >= 1");
    if (plan.times.size() < 3) throw PlanError("multistep_sample: plan has too few grid points");

    DenseMatrix x = rng.normal_matrix(n, model.data_dim());
    DenseMatrix prev_eval; // m(.) at the previous grid point
    for (std::size_t i = 1; i < plan.times.size(); ++i) {
        const auto t_prev = static_cast<std::size_t>(plan.times[i - 1]);
        const auto t_cur = static_cast<std::size_t>(plan.times[i]);
        const double h = plan.step_size(i);

        DenseMatrix eval = model.predict_eps_const(x, plan.label, static_cast<int>(t_prev));
        if (form == SolverForm::data_prediction) {
            const double a_prev = sched.solver_alpha(t_prev);
            const double s_prev = sched.solver_sigma(t_prev);
            for (std::size_t k = 0; k < eval.data.size(); ++k)
                eval.data[k] = (x.data[k] - s_prev * eval.data[k]) / a_prev;
        }

        DenseMatrix combined;
        if (i == 1) {
            combined = eval; // first-order bootstrap
        } else {
            const double h_prev = plan.step_size(i - 1);
            const auto [c_cur, c_prev] = multistep_coefficients(h, h_prev);
            if (std::abs((c_cur - c_prev) - 1.0) > 1e-9)
                throw PlanError("multistep_sample: extrapolation weights lost consistency");
            combined = DenseMatrix(eval.rows, eval.cols);
            for (std::size_t k = 0; k < eval.data.size(); ++k)
                combined.data[k] = c_cur * eval.data[k] - c_prev * prev_eval.data[k];
        }

        const double sigma_ratio = sched.solver_sigma(t_cur) / sched.solver_sigma(t_prev);
        const double step_coef = sched.solver_alpha(t_cur) * (std::exp(-h) - 1.0);
        for (std::size_t k = 0; k < x.data.size(); ++k)
            x.data[k] = sigma_ratio * x.data[k] - step_coef * combined.data[k];
        if (!x.all_finite())
            throw SamplingDivergedError(i, "solver state non-finite at grid index " +
                                               std::to_string(i));
        prev_eval = std::move(eval);
    }
    if (const DataScaler* s = model.output_scaler()) s->restore_in_place(x);
    return x;
}

} // namespace dts
