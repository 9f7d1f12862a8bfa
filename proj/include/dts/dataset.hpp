#pragma once

#include <charconv>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dts/matrix.hpp"

namespace dts {

enum class DomainTag { source, target, generated, augmented };

inline const char* domain_tag_name(DomainTag t) {
    switch (t) {
        case DomainTag::source: return "source";
        case DomainTag::target: return "target";
        case DomainTag::generated: return "generated";
        case DomainTag::augmented: return "augmented";
    }
    return "?";
}

inline DomainTag domain_tag_from_name(const std::string& s) {
    if (s == "source") return DomainTag::source;
    if (s == "target") return DomainTag::target;
    if (s == "generated") return DomainTag::generated;
    if (s == "augmented") return DomainTag::augmented;
    throw ConfigError("unknown domain tag: " + s);
}

/// Feature rows with optional integer class labels and a domain tag.
/// An empty label vector means the dataset is unlabeled.
struct LabeledDataset {
    DenseMatrix features;
    std::vector<int> labels; // empty, or one label per row
    DomainTag domain = DomainTag::source;

    std::size_t size() const { return features.rows; }
    std::size_t dim() const { return features.cols; }
    bool labeled() const { return !labels.empty(); }

    void validate() const {
        if (labeled() && labels.size() != features.rows)
            throw DimensionError("dataset: " + std::to_string(labels.size()) + " labels for " +
                                 std::to_string(features.rows) + " rows");
    }
};

/// A source/target bundle. Target ground truth never rides along with the
/// unlabeled target view; it lives in `target_eval_labels` and is only
/// reachable through target_for_eval(), keeping training paths label-free.
/// `eval`, when non-empty, is a held-out labeled draw from the target
/// distribution used for reporting generalization accuracy.
struct DomainPair {
    LabeledDataset source;            // labeled
    LabeledDataset target;            // unlabeled view
    std::vector<int> target_eval_labels;
    LabeledDataset eval;              // optional held-out labeled target sample
    int class_count = 0;

    LabeledDataset target_for_eval() const {
        LabeledDataset d;
        d.features = target.features;
        d.labels = target_eval_labels;
        d.domain = DomainTag::target;
        return d;
    }

    bool has_eval() const { return eval.size() > 0; }
};

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

/// Delimited-text dataset format: first line `d=<dim>;labeled=<0|1>;domain=<tag>`,
/// then one comma-separated row per sample, label in the final column when
/// labeled=1. Feature values round-trip exactly.
inline void write_dataset(const LabeledDataset& ds, const std::filesystem::path& path) {
    ds.validate();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset to " + path.string());
    out << "d=" << ds.dim() << ";labeled=" << (ds.labeled() ? 1 : 0)
        << ";domain=" << domain_tag_name(ds.domain) << "\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            if (j) out << ",";
            out << detail::format_double(ds.features(i, j));
        }
        if (ds.labeled()) out << "," << ds.labels[i];
        out << "\n";
    }
    if (!out) throw IoError("write failed for " + path.string());
}

inline LabeledDataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(1, "empty file");

    std::size_t dim = 0;
    bool labeled = false;
    DomainTag tag = DomainTag::source;
    {
        std::size_t n_fields = 0;
        std::stringstream hs(line);
        std::string field;
        while (std::getline(hs, field, ';')) {
            const auto eq = field.find('=');
            if (eq == std::string::npos) throw ParseError(1, "malformed header field '" + field + "'");
            const std::string key = field.substr(0, eq);
            const std::string value = field.substr(eq + 1);
            if (key == "d") {
                const auto res = std::from_chars(value.data(), value.data() + value.size(), dim);
                if (res.ec != std::errc{} || res.ptr != value.data() + value.size() || dim == 0)
                    throw ParseError(1, "bad dimension '" + value + "'");
            } else if (key == "labeled") {
                if (value != "0" && value != "1") throw ParseError(1, "bad labeled flag '" + value + "'");
                labeled = value == "1";
            } else if (key == "domain") {
                try {
                    tag = domain_tag_from_name(value);
                } catch (const ConfigError&) {
                    throw ParseError(1, "unknown domain tag '" + value + "'");
                }
            } else {
                throw ParseError(1, "unknown header key '" + key + "'");
            }
            ++n_fields;
        }
        if (n_fields != 3) throw ParseError(1, "header needs d=, labeled=, domain=");
    }

    LabeledDataset ds;
    ds.domain = tag;
    std::vector<double> values;
    std::size_t line_no = 1;
    const std::size_t expected = dim + (labeled ? 1 : 0);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ls, cell, ',')) {
            if (col >= expected)
                throw ParseError(line_no, "row has more than " + std::to_string(expected) + " fields");
            if (labeled && col == dim) {
                int label = 0;
                const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), label);
                if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
                    throw ParseError(line_no, "bad label '" + cell + "'");
                ds.labels.push_back(label);
            } else {
                double v = 0.0;
                const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
                if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
                    throw ParseError(line_no, "non-numeric cell '" + cell + "'");
                values.push_back(v);
            }
            ++col;
        }
        if (col != expected)
            throw ParseError(line_no, "row has " + std::to_string(col) + " fields, expected " +
                                          std::to_string(expected));
    }
    ds.features.rows = values.size() / dim;
    ds.features.cols = dim;
    ds.features.data = std::move(values);
    ds.validate();
    return ds;
}

} // namespace dts
