#pragma once

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dts/pipeline.hpp"
#include "dts/synthetic.hpp"

namespace dts {

/// Flat dotted-key configuration. Values come from (lowest to highest
/// precedence) built-in defaults, a key=value config file, DTSKIT_ environment
/// variables, and command-line overrides. Unknown keys are rejected and every
/// value is range-checked when the typed views are built. The seed has no
/// default on purpose: reproducibility is a product requirement.
class RunConfig {
public:
    RunConfig() {
        for (const auto& [key, value] : defaults()) values_[key] = value;
    }

    static const std::vector<std::pair<std::string, std::string>>& defaults() {
        static const std::vector<std::pair<std::string, std::string>> kDefaults = {
            {"data.family", "two_moons_rotation"},
            {"data.rotation_deg", "30"},
            {"data.noise", "0.15"},
            {"data.n_source", "2000"},
            {"data.n_target", "100"},
            {"data.n_eval", "2000"},
            {"data.gm_means", "0,0;3,3"},
            {"data.gm_scales", "1,1"},
            {"data.gm_affine_a", "1,0;0,1"},
            {"data.gm_affine_b", "1,0"},
            {"schedule.T", "200"},
            {"schedule.beta_start", "0.0001"},
            {"schedule.beta_end", "0.05"},
            {"uda.regularizer", "mmd"},
            {"uda.tradeoff", "1"},
            {"uda.feature_dim", "16"},
            {"uda.transform_hidden", "32"},
            {"uda.disc_hidden", "8"},
            {"uda.steps", "2000"},
            {"uda.batch", "64"},
            {"uda.lr", "0.05"},
            {"uda.momentum", "0.9"},
            {"cdpm.embed_dim", "16"},
            {"cdpm.hidden", "64,64"},
            {"cdpm.max_steps", "8000"},
            {"cdpm.min_steps", "3000"},
            {"cdpm.batch", "64"},
            {"cdpm.lr", "0.002"},
            {"cdpm.momentum", "0.9"},
            {"cdpm.patience_window", "500"},
            {"cdpm.min_improvement", "0.001"},
            {"cdpm.standardize", "1"},
            {"dts.n_generated_per_class", "200"},
            {"dts.sampler", "dpm_solver_pp"},
            {"dts.solver_steps", "10"},
            {"dts.retrain", "from_scratch"},
            {"dts.ablation", "full"},
            {"solver.model_form", "data-prediction"},
            {"metrics.projections", "50"},
            {"sweep.counts", "0,10,25,50,100"},
            {"sweep.seeds", "0,1,2,3,4,5,6,7,8,9"},
        };
        return kDefaults;
    }

    static bool known_key(const std::string& key) {
        if (key == "seed" || key == "data.seed") return true;
        for (const auto& [k, v] : defaults())
            if (k == key) return true;
        return false;
    }

    void set(const std::string& key, const std::string& value) {
        if (!known_key(key)) throw ConfigError("unknown config key: " + key);
        values_[key] = value;
    }

    /// `key = value` lines; '#' starts a comment; blank lines skipped.
    void load_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config " + path.string());
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ParseError(line_no, "expected key = value, got '" + line + "'");
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                const auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) throw ParseError(line_no, "empty key");
            try {
                set(key, value);
            } catch (const ConfigError& e) {
                throw ParseError(line_no, e.what());
            }
        }
    }

    /// DTSKIT_ environment overrides; `__` in the variable name maps to `.`.
    void load_environment() {
        auto candidates = defaults();
        candidates.emplace_back("seed", "");
        candidates.emplace_back("data.seed", "");
        for (const auto& [key, unused] : candidates) {
            std::string env_name = "DTSKIT_";
            for (char c : key)
                env_name += c == '.' ? std::string("__")
                                     : std::string(1, static_cast<char>(std::toupper(c)));
            if (const char* v = std::getenv(env_name.c_str())) values_[key] = v;
        }
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    const std::string& get_raw(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("missing config key: " + key);
        return it->second;
    }

    std::uint64_t get_u64(const std::string& key) const {
        const auto& s = get_raw(key);
        std::uint64_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
            throw ConfigError(key + ": expected a non-negative integer, got '" + s + "'");
        return v;
    }

    double get_double(const std::string& key) const {
        const auto& s = get_raw(key);
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
            throw ConfigError(key + ": expected a number, got '" + s + "'");
        return v;
    }

    bool get_bool(const std::string& key) const {
        const auto& s = get_raw(key);
        if (s == "0" || s == "false") return false;
        if (s == "1" || s == "true") return true;
        throw ConfigError(key + ": expected 0/1, got '" + s + "'");
    }

    std::vector<std::size_t> get_count_list(const std::string& key) const {
        std::vector<std::size_t> out;
        std::stringstream ss(get_raw(key));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            std::size_t v = 0;
            const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
                throw ConfigError(key + ": bad list entry '" + tok + "'");
            out.push_back(v);
        }
        if (out.empty()) throw ConfigError(key + ": empty list");
        return out;
    }

    std::vector<double> get_double_list(const std::string& key, char sep = ',') const {
        std::vector<double> out;
        std::stringstream ss(get_raw(key));
        std::string tok;
        while (std::getline(ss, tok, sep)) {
            double v = 0.0;
            const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
                throw ConfigError(key + ": bad list entry '" + tok + "'");
            out.push_back(v);
        }
        return out;
    }

    std::uint64_t seed() const {
        if (!has("seed"))
            throw ConfigError("seed is required (reproducibility has no wall-clock default)");
        return get_u64("seed");
    }

    std::uint64_t data_seed() const { return has("data.seed") ? get_u64("data.seed") : seed(); }

    ShiftSpec to_shift_spec() const {
        ShiftSpec spec;
        spec.family = shift_family_from_name(get_raw("data.family"));
        spec.rotation_deg = get_double("data.rotation_deg");
        spec.noise = get_double("data.noise");
        spec.n_source = get_u64("data.n_source");
        spec.n_target = get_u64("data.n_target");
        spec.n_eval = get_u64("data.n_eval");
        spec.seed = data_seed();
        if (spec.family == ShiftFamily::gaussian_mixture_affine) {
            auto parse_rows = [&](const std::string& key) {
                std::vector<std::vector<double>> rows;
                std::stringstream ss(get_raw(key));
                std::string row;
                while (std::getline(ss, row, ';')) {
                    std::vector<double> vals;
                    std::stringstream rs(row);
                    std::string tok;
                    while (std::getline(rs, tok, ',')) {
                        double v = 0.0;
                        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
                        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
                            throw ConfigError(key + ": bad entry '" + tok + "'");
                        vals.push_back(v);
                    }
                    rows.push_back(std::move(vals));
                }
                return rows;
            };
            spec.class_means = parse_rows("data.gm_means");
            spec.class_scales = get_double_list("data.gm_scales");
            spec.affine_a = parse_rows("data.gm_affine_a");
            spec.affine_b = get_double_list("data.gm_affine_b");
        }
        spec.validate();
        return spec;
    }

    DtsConfig to_dts_config() const {
        DtsConfig cfg;
        cfg.seed = seed();
        cfg.n_generated_per_class = get_u64("dts.n_generated_per_class");
        cfg.sampler = sampler_kind_from_name(get_raw("dts.sampler"));
        cfg.solver_steps = get_u64("dts.solver_steps");
        cfg.solver_form = solver_form_from_name(get_raw("solver.model_form"));
        cfg.retrain = retrain_mode_from_name(get_raw("dts.retrain"));
        cfg.ablation = ablation_mode_from_name(get_raw("dts.ablation"));
        cfg.schedule.steps = get_u64("schedule.T");
        cfg.schedule.beta_start = get_double("schedule.beta_start");
        cfg.schedule.beta_end = get_double("schedule.beta_end");
        cfg.uda_model.regularizer = regularizer_from_name(get_raw("uda.regularizer"));
        cfg.uda_model.tradeoff = get_double("uda.tradeoff");
        cfg.uda_model.feature_dim = get_u64("uda.feature_dim");
        cfg.uda_model.transform_hidden = to_width_list(get_count_list("uda.transform_hidden"));
        cfg.uda_model.discriminator_hidden = to_width_list(get_count_list("uda.disc_hidden"));
        cfg.uda_train.steps = get_u64("uda.steps");
        cfg.uda_train.batch = get_u64("uda.batch");
        cfg.uda_train.learning_rate = positive(get_double("uda.lr"), "uda.lr");
        cfg.uda_train.momentum = fraction(get_double("uda.momentum"), "uda.momentum");
        cfg.cdpm.embed_dim = get_u64("cdpm.embed_dim");
        cfg.cdpm.hidden = to_width_list(get_count_list("cdpm.hidden"));
        cfg.cdpm.max_steps = get_u64("cdpm.max_steps");
        cfg.cdpm.min_steps = get_u64("cdpm.min_steps");
        cfg.cdpm.batch = get_u64("cdpm.batch");
        cfg.cdpm.learning_rate = positive(get_double("cdpm.lr"), "cdpm.lr");
        cfg.cdpm.momentum = fraction(get_double("cdpm.momentum"), "cdpm.momentum");
        cfg.cdpm.patience_window = get_u64("cdpm.patience_window");
        cfg.cdpm.min_improvement = get_double("cdpm.min_improvement");
        cfg.cdpm.standardize = get_bool("cdpm.standardize");
        cfg.metric_projections = get_u64("metrics.projections");
        cfg.validate();
        // Eagerly validate the schedule range too.
        (void)cfg.schedule.build();
        return cfg;
    }

    /// Sorted `key = value` lines; re-parsing reproduces this configuration.
    void dump(std::ostream& out) const {
        for (const auto& [key, value] : values_) out << key << " = " << value << '\n';
    }

    bool operator==(const RunConfig& other) const { return values_ == other.values_; }

private:
    static std::vector<std::size_t> to_width_list(std::vector<std::size_t> v) {
        for (std::size_t w : v)
            if (w == 0) throw ConfigError("layer widths must be positive");
        return v;
    }
    static double positive(double v, const char* key) {
        if (!(v > 0.0)) throw ConfigError(std::string(key) + " must be positive");
        return v;
    }
    static double fraction(double v, const char* key) {
        if (!(v >= 0.0 && v < 1.0)) throw ConfigError(std::string(key) + " must be in [0,1)");
        return v;
    }

    std::map<std::string, std::string> values_;
};

} // namespace dts
