#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "dts/error.hpp"

namespace dts {

/// Row-major dense matrix of doubles. The workhorse carrier for batches of
/// samples, activations, gradients and noise throughout the library.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    DenseMatrix(std::size_t r, std::size_t c, std::initializer_list<double> values)
        : rows(r), cols(c), data(values) {
        if (data.size() != r * c)
            throw DimensionError("initializer of size " + std::to_string(data.size()) +
                                 " does not fill " + shape_string());
    }

    bool empty() const { return rows == 0 || cols == 0; }
    std::size_t size() const { return data.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

    std::string shape_string() const {
        return std::to_string(rows) + "x" + std::to_string(cols);
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    DenseMatrix& operator+=(const DenseMatrix& o) {
        check_same_shape(o, "operator+=");
        for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
        return *this;
    }
    DenseMatrix& operator-=(const DenseMatrix& o) {
        check_same_shape(o, "operator-=");
        for (std::size_t i = 0; i < data.size(); ++i) data[i] -= o.data[i];
        return *this;
    }
    DenseMatrix& operator*=(double s) {
        for (double& v : data) v *= s;
        return *this;
    }

    void check_same_shape(const DenseMatrix& o, const char* op) const {
        if (rows != o.rows || cols != o.cols)
            throw DimensionError(std::string(op) + ": shape " + shape_string() +
                                 " vs " + o.shape_string());
    }
};

inline DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
inline DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
inline DenseMatrix operator*(DenseMatrix a, double s) { return a *= s; }
inline DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

/// C = A * B
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows)
        throw DimensionError("matmul: " + a.shape_string() + " * " + b.shape_string());
    DenseMatrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + i * a.cols;
        double* crow = c.data.data() + i * c.cols;
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.data.data() + k * b.cols;
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

/// C = A^T * B  (A: k x m, B: k x n -> m x n)
inline DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows != b.rows)
        throw DimensionError("matmul_tn: " + a.shape_string() + "^T * " + b.shape_string());
    DenseMatrix c(a.cols, b.cols);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* arow = a.data.data() + k * a.cols;
        const double* brow = b.data.data() + k * b.cols;
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            double* crow = c.data.data() + i * c.cols;
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

/// C = A * B^T  (A: m x k, B: n x k -> m x n)
inline DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.cols)
        throw DimensionError("matmul_nt: " + a.shape_string() + " * " + b.shape_string() + "^T");
    DenseMatrix c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + i * a.cols;
        double* crow = c.data.data() + i * c.cols;
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.data.data() + j * b.cols;
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            crow[j] = acc;
        }
    }
    return c;
}

/// Adds a row vector to every row.
inline void add_row_vector(DenseMatrix& m, std::span<const double> v) {
    if (v.size() != m.cols)
        throw DimensionError("add_row_vector: vector of size " + std::to_string(v.size()) +
                             " vs matrix " + m.shape_string());
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* row = m.data.data() + i * m.cols;
        for (std::size_t j = 0; j < m.cols; ++j) row[j] += v[j];
    }
}

inline std::vector<double> column_sums(const DenseMatrix& m) {
    std::vector<double> s(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) s[j] += m(i, j);
    return s;
}

/// Rows of `m` selected by `idx`, in order (repeats allowed).
inline DenseMatrix take_rows(const DenseMatrix& m, std::span<const std::size_t> idx) {
    DenseMatrix out(idx.size(), m.cols);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= m.rows)
            throw ArgumentError("take_rows: index " + std::to_string(idx[i]) +
                                " out of range for " + m.shape_string());
        std::copy_n(m.data.data() + idx[i] * m.cols, m.cols, out.data.data() + i * m.cols);
    }
    return out;
}

/// Vertical concatenation.
inline DenseMatrix vcat(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    if (a.cols != b.cols)
        throw DimensionError("vcat: " + a.shape_string() + " atop " + b.shape_string());
    DenseMatrix c(a.rows + b.rows, a.cols);
    std::copy(a.data.begin(), a.data.end(), c.data.begin());
    std::copy(b.data.begin(), b.data.end(), c.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
    return c;
}

/// Horizontal concatenation.
inline DenseMatrix hcat(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows != b.rows)
        throw DimensionError("hcat: " + a.shape_string() + " beside " + b.shape_string());
    DenseMatrix c(a.rows, a.cols + b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        std::copy_n(a.data.data() + i * a.cols, a.cols, c.data.data() + i * c.cols);
        std::copy_n(b.data.data() + i * b.cols, b.cols, c.data.data() + i * c.cols + a.cols);
    }
    return c;
}

/// Columns [c0, c1) as a new matrix.
inline DenseMatrix slice_cols(const DenseMatrix& m, std::size_t c0, std::size_t c1) {
    if (c0 > c1 || c1 > m.cols)
        throw DimensionError("slice_cols: [" + std::to_string(c0) + "," + std::to_string(c1) +
                             ") of " + m.shape_string());
    DenseMatrix out(m.rows, c1 - c0);
    for (std::size_t i = 0; i < m.rows; ++i)
        std::copy_n(m.data.data() + i * m.cols + c0, c1 - c0, out.data.data() + i * out.cols);
    return out;
}

inline void require_finite(const DenseMatrix& m, const char* context) {
    if (!m.all_finite()) throw ArgumentError(std::string(context) + ": non-finite values present");
}

} // namespace dts
