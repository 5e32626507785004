#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "csl/error.hpp"

namespace csl {

using Vector = std::vector<double>;

/**
 * Dense row-major matrix of finite doubles.
 *
 * Constructors that take caller data reject NaN/Inf. Element access through
 * operator() is unchecked; operations that can create non-finite values
 * (division by a vanishing norm) guard themselves.
 */
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
        : rows_(rows), cols_(cols), data_(std::move(entries)) {
        require(data_.size() == rows_ * cols_, ErrorCode::BadDims,
                "entries length " + std::to_string(data_.size()) + " != " + std::to_string(rows_) + "x" +
                    std::to_string(cols_));
        check_finite();
    }

    Matrix(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            require(r.size() == cols_, ErrorCode::BadDims, "ragged initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
        check_finite();
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(std::span<const double> d) {
        Matrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    /// Builds a matrix whose columns are the given vectors.
    static Matrix from_columns(const std::vector<Vector>& columns) {
        if (columns.empty()) return {};
        Matrix m(columns.front().size(), columns.size());
        for (std::size_t j = 0; j < columns.size(); ++j) {
            require(columns[j].size() == m.rows(), ErrorCode::BadDims, "ragged columns");
            m.set_col(j, columns[j]);
        }
        m.check_finite();
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

    Vector col(std::size_t j) const {
        Vector c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

    void set_col(std::size_t j, std::span<const double> values) {
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = values[i];
    }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    Matrix transposed() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    /// Columns [first, first + count).
    Matrix col_block(std::size_t first, std::size_t count) const {
        Matrix b(rows_, count);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < count; ++j) b(i, j) = (*this)(i, first + j);
        return b;
    }

    double frobenius_norm() const noexcept {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return std::sqrt(s);
    }

    double max_abs() const noexcept {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    Matrix& operator+=(const Matrix& o) {
        require(o.rows_ == rows_ && o.cols_ == cols_, ErrorCode::DimMismatch, "matrix +=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }

    Matrix& operator-=(const Matrix& o) {
        require(o.rows_ == rows_ && o.cols_ == cols_, ErrorCode::DimMismatch, "matrix -=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }

    Matrix& operator*=(double s) noexcept {
        for (double& v : data_) v *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    void check_finite() const {
        require(all_finite(), ErrorCode::NonFinite, "matrix entries must be finite");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix operator*(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.rows(), ErrorCode::DimMismatch,
            "matmul " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " * " +
                std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ci = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            auto bk = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

/// a^T * b without forming the transpose.
inline Matrix transpose_times(const Matrix& a, const Matrix& b) {
    require(a.rows() == b.rows(), ErrorCode::DimMismatch, "transpose_times row mismatch");
    Matrix c(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        auto ak = a.row(k);
        auto bk = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = ak[i];
            if (aki == 0.0) continue;
            auto ci = c.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
        }
    }
    return c;
}

inline Vector operator*(const Matrix& a, std::span<const double> x) {
    require(a.cols() == x.size(), ErrorCode::DimMismatch, "matvec");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ai = a.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < ai.size(); ++j) s += ai[j] * x[j];
        y[i] = s;
    }
    return y;
}

/// a^T * x.
inline Vector transpose_times(const Matrix& a, std::span<const double> x) {
    require(a.rows() == x.size(), ErrorCode::DimMismatch, "transpose matvec");
    Vector y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ai = a.row(i);
        const double xi = x[i];
        for (std::size_t j = 0; j < ai.size(); ++j) y[j] += ai[j] * xi;
    }
    return y;
}

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

inline bool all_finite(std::span<const double> a) noexcept {
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace csl
