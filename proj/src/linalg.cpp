#include "classdiag/linalg.hpp"

#include "classdiag/errors.hpp"
#include "classdiag/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace classdiag {

double frobenius_norm(const Matrix& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        acc += kernels::dot(a.row(i), a.row(i));
    }
    return std::sqrt(acc);
}

double symmetry_gap(const Matrix& a) {
    double gap = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j) {
            const double denom = std::max(1.0, std::abs(a(i, j)));
            gap = std::max(gap, std::abs(a(i, j) - a(j, i)) / denom);
        }
    return gap;
}

namespace {

// One factorization attempt; nullopt when a pivot collapses. A pivot is
// treated as failed when it drops below 1e-13 of the largest diagonal
// entry, so exactly-singular-in-theory matrices fail instead of producing
// garbage from rounding noise.
std::optional<Matrix> try_factor(const Matrix& a, double ridge) {
    const std::size_t p = a.rows();
    Matrix lower(p, p);
    double max_diag = 0.0;
    for (std::size_t i = 0; i < p; ++i) max_diag = std::max(max_diag, std::abs(a(i, i)) + ridge);
    const double floor = max_diag * 1e-13;

    for (std::size_t j = 0; j < p; ++j) {
        double d = a(j, j) + ridge - kernels::dot(lower.row(j).first(j), lower.row(j).first(j));
        if (!(d > floor)) return std::nullopt;
        const double ljj = std::sqrt(d);
        lower(j, j) = ljj;
        for (std::size_t i = j + 1; i < p; ++i) {
            const double s = a(i, j) - kernels::dot(lower.row(i).first(j), lower.row(j).first(j));
            lower(i, j) = s / ljj;
        }
    }
    return lower;
}

} // namespace

std::vector<double> Cholesky::solve_lower(std::span<const double> b) const {
    const std::size_t p = lower.rows();
    std::vector<double> z(p);
    for (std::size_t i = 0; i < p; ++i) {
        z[i] = (b[i] - kernels::dot(lower.row(i).first(i), std::span<const double>(z).first(i))) /
               lower(i, i);
    }
    return z;
}

std::vector<double> Cholesky::solve(std::span<const double> b) const {
    const std::size_t p = lower.rows();
    std::vector<double> z = solve_lower(b);
    std::vector<double> x(p);
    for (std::size_t ii = p; ii-- > 0;) {
        double s = z[ii];
        for (std::size_t k = ii + 1; k < p; ++k) s -= lower(k, ii) * x[k];
        x[ii] = s / lower(ii, ii);
    }
    return x;
}

Cholesky cholesky_factor(const Matrix& a, const CholeskyOptions& options, const std::string& label) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw ConfigError(ErrorKind::shape, "cholesky: " + label + " must be square and non-empty");
    }

    const std::size_t p = a.rows();
    double trace = 0.0;
    for (std::size_t i = 0; i < p; ++i) trace += a(i, i);
    double scale = trace / static_cast<double>(p);
    if (!(scale > 0.0)) scale = options.fallback_scale;

    auto finish = [&](Matrix lower, double ridge) {
        Cholesky result;
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            lo = std::min(lo, lower(i, i));
            hi = std::max(hi, lower(i, i));
        }
        result.rcond = hi > 0.0 ? (lo / hi) * (lo / hi) : 0.0;
        result.lower = std::move(lower);
        result.ridge = ridge;
        return result;
    };

    if (auto lower = try_factor(a, 0.0)) return finish(std::move(*lower), 0.0);

    if (options.allow_ridge && scale > 0.0) {
        for (int k = 0; k <= 6; ++k) {
            const double ridge = std::pow(10.0, k - 8) * scale;
            if (auto lower = try_factor(a, ridge)) return finish(std::move(*lower), ridge);
        }
    }

    throw NumericError(ErrorKind::singular_matrix,
                       "cholesky: " + label + " is singular" +
                           (options.allow_ridge ? " (ridge escalation exhausted)" : ""));
}

bool is_spd(const Matrix& a) {
    if (a.rows() != a.cols() || a.rows() == 0) return false;
    return try_factor(a, 0.0).has_value();
}

} // namespace classdiag
