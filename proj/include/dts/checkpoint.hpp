#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dts/cdpm.hpp"
#include "dts/pipeline.hpp"
#include "dts/uda.hpp"

namespace dts {

namespace detail {

inline void write_value_line(std::ofstream& out, std::span<const double> values) {
    char buf[40];
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out << ' ';
        std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
        out << buf;
    }
    out << '\n';
}

class LineReader {
public:
    explicit LineReader(const std::filesystem::path& path) : in_(path) {
        if (!in_) throw IoError("cannot open " + path.string());
    }

    std::string next() {
        std::string line;
        if (!std::getline(in_, line)) throw ParseError(line_no_ + 1, "unexpected end of file");
        ++line_no_;
        return line;
    }

    std::size_t line_no() const { return line_no_; }

    std::vector<double> next_values(std::size_t expected) {
        std::stringstream ss(next());
        std::vector<double> out;
        std::string tok;
        while (ss >> tok) {
            double v = 0.0;
            const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
                throw ParseError(line_no_, "bad number '" + tok + "'");
            out.push_back(v);
        }
        if (out.size() != expected)
            throw ParseError(line_no_, "expected " + std::to_string(expected) + " values, got " +
                                           std::to_string(out.size()));
        return out;
    }

    /// Splits the next line into whitespace tokens and checks the first one.
    std::vector<std::string> next_tokens(const std::string& expected_head) {
        std::stringstream ss(next());
        std::vector<std::string> toks;
        std::string t;
        while (ss >> t) toks.push_back(t);
        if (toks.empty() || toks[0] != expected_head)
            throw ParseError(line_no_, "expected '" + expected_head + "' record");
        return toks;
    }

private:
    std::ifstream in_;
    std::size_t line_no_ = 0;
};

inline std::size_t to_count(const std::string& s, std::size_t line) {
    std::size_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError(line, "bad count '" + s + "'");
    return v;
}

inline double to_double(const std::string& s, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError(line, "bad number '" + s + "'");
    return v;
}

inline void write_mlp(std::ofstream& out, const std::string& name, const Mlp& net) {
    out << "mlp " << name << ' ' << net.layers.size() << '\n';
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        const MlpLayer& layer = net.layers[k];
        out << "layer " << k << ' ' << layer.weight.rows << ' ' << layer.weight.cols << ' '
            << activation_name(layer.activation) << '\n';
        for (std::size_t i = 0; i < layer.weight.rows; ++i)
            write_value_line(out, layer.weight.row(i));
        write_value_line(out, layer.bias);
    }
}

inline Mlp read_mlp(LineReader& reader, const std::string& name) {
    auto head = reader.next_tokens("mlp");
    if (head.size() != 3 || head[1] != name)
        throw ParseError(reader.line_no(), "expected mlp record for '" + name + "'");
    const std::size_t n_layers = to_count(head[2], reader.line_no());
    Mlp net;
    for (std::size_t k = 0; k < n_layers; ++k) {
        auto lt = reader.next_tokens("layer");
        if (lt.size() != 5) throw ParseError(reader.line_no(), "malformed layer record");
        const std::size_t rows = to_count(lt[2], reader.line_no());
        const std::size_t cols = to_count(lt[3], reader.line_no());
        MlpLayer layer;
        layer.activation = activation_from_name(lt[4]);
        layer.weight = DenseMatrix(rows, cols);
        for (std::size_t i = 0; i < rows; ++i) {
            const auto vals = reader.next_values(cols);
            std::copy(vals.begin(), vals.end(), layer.weight.row(i).begin());
        }
        layer.bias = reader.next_values(cols);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

} // namespace detail

inline constexpr const char* kCdpmCheckpointHeader = "dts-cdpm-checkpoint v1";
inline constexpr const char* kUdaCheckpointHeader = "dts-uda-checkpoint v1";

/// Saves the denoiser together with the schedule it was trained against.
inline void save_cdpm_checkpoint(const std::filesystem::path& path,
                                 const ConditionalDenoiser& model,
                                 const ScheduleConfig& schedule) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out << kCdpmCheckpointHeader << '\n';
    out << "schedule " << schedule.steps << ' ';
    {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g %.17g", schedule.beta_start, schedule.beta_end);
        out << buf << '\n';
    }
    out << "dims " << model.input_dim << ' ' << model.embed_dim << ' ' << model.class_count
        << '\n';
    out << "scaler " << (model.scaler.identity() ? 0 : 1) << '\n';
    if (!model.scaler.identity()) {
        detail::write_value_line(out, model.scaler.shift);
        detail::write_value_line(out, model.scaler.scale);
    }
    out << "tensor label_embedding " << model.label_embedding.rows << ' '
        << model.label_embedding.cols << '\n';
    for (std::size_t i = 0; i < model.label_embedding.rows; ++i)
        detail::write_value_line(out, model.label_embedding.row(i));
    detail::write_mlp(out, "backbone", model.backbone);
    std::size_t n_proj = 0;
    for (const auto& p : model.hidden_projections)
        if (!p.empty()) ++n_proj;
    out << "projections " << n_proj << '\n';
    for (std::size_t k = 0; k < model.hidden_projections.size(); ++k) {
        const auto& p = model.hidden_projections[k];
        if (p.empty()) continue;
        out << "tensor projection." << k << ' ' << p.rows << ' ' << p.cols << '\n';
        for (std::size_t i = 0; i < p.rows; ++i) detail::write_value_line(out, p.row(i));
    }
    if (!out) throw IoError("write failed for " + path.string());
}

struct CdpmCheckpoint {
    ConditionalDenoiser model;
    ScheduleConfig schedule;
};

inline CdpmCheckpoint load_cdpm_checkpoint(const std::filesystem::path& path) {
    detail::LineReader reader(path);
    if (reader.next() != kCdpmCheckpointHeader)
        throw ParseError(1, std::string("not a '") + kCdpmCheckpointHeader + "' document");
    CdpmCheckpoint ckpt;
    {
        auto t = reader.next_tokens("schedule");
        if (t.size() != 4) throw ParseError(reader.line_no(), "malformed schedule record");
        ckpt.schedule.steps = detail::to_count(t[1], reader.line_no());
        ckpt.schedule.beta_start = detail::to_double(t[2], reader.line_no());
        ckpt.schedule.beta_end = detail::to_double(t[3], reader.line_no());
    }
    ConditionalDenoiser& m = ckpt.model;
    {
        auto t = reader.next_tokens("dims");
        if (t.size() != 4) throw ParseError(reader.line_no(), "malformed dims record");
        m.input_dim = detail::to_count(t[1], reader.line_no());
        m.embed_dim = detail::to_count(t[2], reader.line_no());
        m.class_count = detail::to_count(t[3], reader.line_no());
        if (m.embed_dim < 2 || m.embed_dim % 2 != 0)
            throw ParseError(reader.line_no(), "embed_dim must be even");
        const std::size_t half = m.embed_dim / 2;
        m.time_frequencies.resize(half);
        for (std::size_t j = 0; j < half; ++j)
            m.time_frequencies[j] =
                half == 1 ? 1.0
                          : std::exp(-std::log(1e4) * static_cast<double>(j) /
                                     static_cast<double>(half - 1));
    }
    {
        auto t = reader.next_tokens("scaler");
        if (t.size() != 2) throw ParseError(reader.line_no(), "malformed scaler record");
        if (t[1] == "1") {
            m.scaler.shift = reader.next_values(m.input_dim);
            m.scaler.scale = reader.next_values(m.input_dim);
        }
    }
    {
        auto t = reader.next_tokens("tensor");
        if (t.size() != 4 || t[1] != "label_embedding")
            throw ParseError(reader.line_no(), "expected label_embedding tensor");
        const std::size_t rows = detail::to_count(t[2], reader.line_no());
        const std::size_t cols = detail::to_count(t[3], reader.line_no());
        if (rows != m.class_count || cols != m.embed_dim)
            throw ParseError(reader.line_no(), "label_embedding shape mismatch");
        m.label_embedding = DenseMatrix(rows, cols);
        for (std::size_t i = 0; i < rows; ++i) {
            const auto vals = reader.next_values(cols);
            std::copy(vals.begin(), vals.end(), m.label_embedding.row(i).begin());
        }
    }
    m.backbone = detail::read_mlp(reader, "backbone");
    {
        auto t = reader.next_tokens("projections");
        const std::size_t n_proj = detail::to_count(t[1], reader.line_no());
        m.hidden_projections.assign(m.backbone.layers.size(), DenseMatrix{});
        for (std::size_t p = 0; p < n_proj; ++p) {
            auto tt = reader.next_tokens("tensor");
            if (tt.size() != 4) throw ParseError(reader.line_no(), "malformed tensor record");
            const auto dot = tt[1].find('.');
            if (dot == std::string::npos || tt[1].substr(0, dot) != "projection")
                throw ParseError(reader.line_no(), "expected projection tensor");
            const std::size_t k = detail::to_count(tt[1].substr(dot + 1), reader.line_no());
            const std::size_t rows = detail::to_count(tt[2], reader.line_no());
            const std::size_t cols = detail::to_count(tt[3], reader.line_no());
            DenseMatrix proj(rows, cols);
            for (std::size_t i = 0; i < rows; ++i) {
                const auto vals = reader.next_values(cols);
                std::copy(vals.begin(), vals.end(), proj.row(i).begin());
            }
            if (k >= m.hidden_projections.size())
                throw ParseError(reader.line_no(), "projection index out of range");
            m.hidden_projections[k] = std::move(proj);
        }
    }
    return ckpt;
}

inline void save_uda_checkpoint(const std::filesystem::path& path, const UDAModel& model) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out << kUdaCheckpointHeader << '\n';
    out << "regularizer " << regularizer_name(model.regularizer) << '\n';
    {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", model.tradeoff);
        out << "tradeoff " << buf << '\n';
    }
    out << "discriminator " << (model.discriminator ? 1 : 0) << '\n';
    detail::write_mlp(out, "transform", model.transform);
    detail::write_mlp(out, "head", model.head);
    if (model.discriminator) detail::write_mlp(out, "discriminator", *model.discriminator);
    if (!out) throw IoError("write failed for " + path.string());
}

inline UDAModel load_uda_checkpoint(const std::filesystem::path& path) {
    detail::LineReader reader(path);
    if (reader.next() != kUdaCheckpointHeader)
        throw ParseError(1, std::string("not a '") + kUdaCheckpointHeader + "' document");
    UDAModel m;
    {
        auto t = reader.next_tokens("regularizer");
        if (t.size() != 2) throw ParseError(reader.line_no(), "malformed regularizer record");
        m.regularizer = regularizer_from_name(t[1]);
    }
    {
        auto t = reader.next_tokens("tradeoff");
        if (t.size() != 2) throw ParseError(reader.line_no(), "malformed tradeoff record");
        m.tradeoff = detail::to_double(t[1], reader.line_no());
    }
    bool has_disc = false;
    {
        auto t = reader.next_tokens("discriminator");
        if (t.size() != 2) throw ParseError(reader.line_no(), "malformed discriminator record");
        has_disc = t[1] == "1";
    }
    m.transform = detail::read_mlp(reader, "transform");
    m.head = detail::read_mlp(reader, "head");
    if (has_disc) m.discriminator = detail::read_mlp(reader, "discriminator");
    return m;
}

} // namespace dts
