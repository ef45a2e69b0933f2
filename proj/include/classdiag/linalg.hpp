#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace classdiag {

/// Dense row-major matrix of doubles. Feature tables stay in the tens of
/// columns here, so everything downstream is O(p^3)-friendly.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double frobenius_norm(const Matrix& a);

/// Largest relative off-symmetry |a_ij - a_ji| / max(1, |a_ij|).
double symmetry_gap(const Matrix& a);

struct CholeskyOptions {
    /// After a plain factorization attempt fails, retry with ridge
    /// delta_k = 10^(k-8) * scale on the diagonal for k = 0..6, where
    /// scale = trace/p. Disabled -> first failure throws.
    bool allow_ridge = true;
    /// Replacement for trace/p when that is not positive (degenerate
    /// matrices such as pooled covariances of constant features).
    /// 0 disables the fallback, so an all-zero matrix stays an error.
    double fallback_scale = 0.0;
};

/// Lower-triangular factor of an SPD matrix, possibly after a recorded
/// diagonal ridge. rcond is a cheap reciprocal-condition estimate from the
/// factor diagonal: (min L_ii / max L_ii)^2.
struct Cholesky {
    Matrix lower;
    double ridge = 0.0;
    double rcond = 0.0;

    std::vector<double> solve(std::span<const double> b) const;
    /// L z = b (forward substitution only).
    std::vector<double> solve_lower(std::span<const double> b) const;
};

/// Factor a (ridge-escalated when allowed). Throws NumericError with kind
/// singular_matrix when no attempt succeeds; `label` names the matrix in
/// the message.
Cholesky cholesky_factor(const Matrix& a, const CholeskyOptions& options = {},
                         const std::string& label = "matrix");

/// True iff a factors without any ridge (the SPD verification used by
/// generator specs).
bool is_spd(const Matrix& a);

} // namespace classdiag
