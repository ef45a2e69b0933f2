#include "classdiag/numstats.hpp"

#include "classdiag/errors.hpp"
#include "classdiag/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace classdiag {

CovarianceMatrix estimate_covariance(const Matrix& x) {
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    if (n < 2) {
        throw DataError(ErrorKind::insufficient_sample,
                        "covariance estimation needs n >= 2 rows, got " + std::to_string(n));
    }

    // Centered columns are laid out contiguously so each entry is one dot.
    std::vector<double> centered(n * p);
    for (std::size_t j = 0; j < p; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) centered[j * n + i] = x(i, j) - mean;
    }

    CovarianceMatrix s;
    s.values = Matrix(p, p);
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < p; ++i) {
        const std::span<const double> ci(centered.data() + i * n, n);
        for (std::size_t j = i; j < p; ++j) {
            const std::span<const double> cj(centered.data() + j * n, n);
            const double v = kernels::dot(ci, cj) / denom;
            s.values(i, j) = v;
            s.values(j, i) = v;
        }
    }
    return s;
}

CovarianceMatrix to_correlation(const CovarianceMatrix& s) {
    if (s.kind != MomentKind::covariance) {
        throw ConfigError(ErrorKind::invalid_argument,
                          "to_correlation expects a covariance-kind matrix");
    }
    const std::size_t p = s.values.rows();
    CovarianceMatrix r;
    r.kind = MomentKind::correlation;
    r.values = Matrix(p, p);
    std::vector<double> sd(p);
    for (std::size_t i = 0; i < p; ++i) {
        const double v = s.values(i, i);
        sd[i] = v > 0.0 ? std::sqrt(v) : 0.0;
        if (sd[i] == 0.0) r.zero_variance.push_back(i);
    }
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            if (i == j) {
                r.values(i, j) = 1.0;
            } else if (sd[i] == 0.0 || sd[j] == 0.0) {
                r.values(i, j) = 0.0;
            } else {
                r.values(i, j) = std::clamp(s.values(i, j) / (sd[i] * sd[j]), -1.0, 1.0);
            }
        }
    }
    return r;
}

SpdSolve spd_solve(const CovarianceMatrix& s, std::span<const double> b,
                   double fallback_ridge_scale) {
    if (s.values.rows() != s.values.cols() || s.values.rows() != b.size()) {
        throw ConfigError(ErrorKind::shape, "spd_solve: dimension mismatch");
    }
    if (symmetry_gap(s.values) > 1e-12) {
        throw ConfigError(ErrorKind::invalid_argument, "spd_solve: matrix is not symmetric");
    }
    CholeskyOptions opts;
    opts.allow_ridge = true;
    opts.fallback_scale = fallback_ridge_scale;
    const Cholesky chol = cholesky_factor(s.values, opts, "covariance");
    SpdSolve out;
    out.x = chol.solve(b);
    out.ridge_applied = chol.ridge;
    out.rcond = chol.rcond;
    return out;
}

namespace {

// Phi via the complementary error function; the erfc route keeps absolute
// accuracy far below the 1e-12 contract across [-8, 8].
constexpr double kInvSqrt2 = 0.7071067811865475244008443621048490;

} // namespace

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * kInvSqrt2);
}

double bayes_error_from_separation(double d) {
    if (d < 0.0 || !std::isfinite(d)) {
        throw ConfigError(ErrorKind::invalid_argument,
                          "distance of separation must be finite and nonnegative");
    }
    return normal_cdf(-0.5 * std::sqrt(d));
}

SeparationResult separation_from_moments(std::span<const double> mu, const CovarianceMatrix& s) {
    if (mu.size() != s.values.rows()) {
        throw ConfigError(ErrorKind::shape, "separation: mu and covariance dimensions disagree");
    }
    // Moment matrices estimated from degenerate data may have zero trace;
    // the absolute fallback scale keeps the ridge schedule live there and
    // the applied ridge is surfaced in the result.
    const SpdSolve solve = spd_solve(s, mu, 1.0);
    double d = kernels::dot(mu, std::span<const double>(solve.x));
    if (d < 0.0) d = 0.0; // rounding guard; the quadratic form is nonnegative
    SeparationResult out;
    out.d = d;
    out.bayes_error = bayes_error_from_separation(d);
    out.mu_hat.assign(mu.begin(), mu.end());
    out.condition_estimate = solve.rcond;
    out.ridge_applied = solve.ridge_applied;
    return out;
}

namespace {

struct PooledMoments {
    std::vector<double> mu_hat;
    CovarianceMatrix sigma;
    std::size_t n_a = 0, n_b = 0;
};

PooledMoments pooled_moments(const Dataset& d, std::pair<int, int> pair, const FeatureSet& f) {
    if (pair.first == pair.second) {
        throw ConfigError(ErrorKind::invalid_argument, "class pair must name two distinct classes");
    }
    for (int c : {pair.first, pair.second}) {
        if (c < 0 || static_cast<std::size_t>(c) >= d.n_classes()) {
            throw ConfigError(ErrorKind::invalid_argument,
                              "class id " + std::to_string(c) + " out of range");
        }
    }
    validate_feature_set(f, d.n_features());

    auto rows_a = d.rows_of_class(pair.first);
    auto rows_b = d.rows_of_class(pair.second);
    if (rows_a.size() < 2 || rows_b.size() < 2) {
        throw DataError(ErrorKind::insufficient_sample,
                        "both classes need >= 2 rows for pooled moments");
    }

    const std::size_t k = f.columns.size();
    auto class_block = [&](const std::vector<std::size_t>& rows) {
        Matrix m(rows.size(), k);
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < k; ++j) m(i, j) = d.feature(rows[i], f.columns[j]);
        return m;
    };
    const Matrix xa = class_block(rows_a);
    const Matrix xb = class_block(rows_b);

    auto col_mean = [](const Matrix& m, std::size_t j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i) acc += m(i, j);
        return acc / static_cast<double>(m.rows());
    };

    PooledMoments out;
    out.n_a = rows_a.size();
    out.n_b = rows_b.size();
    out.mu_hat.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        out.mu_hat[j] = 0.5 * (col_mean(xa, j) - col_mean(xb, j));
    }

    const CovarianceMatrix sa = estimate_covariance(xa);
    const CovarianceMatrix sb = estimate_covariance(xb);
    const double wa = static_cast<double>(out.n_a - 1);
    const double wb = static_cast<double>(out.n_b - 1);
    const double denom = static_cast<double>(out.n_a + out.n_b - 2);
    out.sigma.values = Matrix(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            out.sigma.values(i, j) = (wa * sa.values(i, j) + wb * sb.values(i, j)) / denom;
    return out;
}

} // namespace

SeparationResult separation_from_data(const Dataset& d, std::pair<int, int> pair,
                                      const FeatureSet& f) {
    const PooledMoments m = pooled_moments(d, pair, f);
    // The quadratic form is taken over the full between-class mean
    // difference (twice the +/-mu center estimate), keeping estimated
    // distances on the same scale as the generating-model separation and
    // making Phi(-sqrt(d)/2) the matching error rate.
    std::vector<double> delta(m.mu_hat.size());
    for (std::size_t j = 0; j < delta.size(); ++j) delta[j] = 2.0 * m.mu_hat[j];
    SeparationResult out = separation_from_moments(delta, m.sigma);
    out.mu_hat = m.mu_hat;
    out.feature_set = f;
    out.pair = pair;
    out.wide_feature_warning = f.columns.size() >= m.n_a + m.n_b;
    return out;
}

double cross_block_frobenius(const CovarianceMatrix& r, const FeatureSet& f1,
                             const FeatureSet& f2) {
    if (r.kind != MomentKind::correlation) {
        throw ConfigError(ErrorKind::invalid_argument,
                          "cross_block_frobenius expects a correlation-kind matrix");
    }
    const std::size_t p = r.values.rows();
    validate_feature_set(f1, p);
    validate_feature_set(f2, p);
    for (std::size_t a : f1.columns) {
        for (std::size_t b : f2.columns) {
            if (a == b) {
                throw ConfigError(ErrorKind::invalid_argument,
                                  "feature sets overlap at column " + std::to_string(a));
            }
        }
    }
    double acc = 0.0;
    for (std::size_t a : f1.columns)
        for (std::size_t b : f2.columns) acc += r.values(a, b) * r.values(a, b);
    return std::sqrt(acc);
}

MarginalBenefitReport marginal_benefit(const Dataset& d, std::pair<int, int> pair,
                                       const FeatureSet& f1, const FeatureSet& f2,
                                       const MarginalBenefitOptions& options) {
    validate_feature_set(f1, d.n_features());
    validate_feature_set(f2, d.n_features());
    for (std::size_t a : f1.columns) {
        for (std::size_t b : f2.columns) {
            if (a == b) {
                throw ConfigError(ErrorKind::invalid_argument,
                                  "marginal_benefit: feature sets must be disjoint");
            }
        }
    }
    FeatureSet unioned;
    unioned.name = f1.name + "+" + f2.name;
    unioned.columns = f1.columns;
    unioned.columns.insert(unioned.columns.end(), f2.columns.begin(), f2.columns.end());

    MarginalBenefitReport report;
    report.d_f1 = separation_from_data(d, pair, f1);
    report.d_f2 = separation_from_data(d, pair, f2);
    report.d_union = separation_from_data(d, pair, unioned);

    // Cross-block norm in union coordinates, on the correlation scale.
    const PooledMoments m = pooled_moments(d, pair, unioned);
    const CovarianceMatrix r = to_correlation(m.sigma);
    FeatureSet left{"f1", {}};
    FeatureSet right{"f2", {}};
    for (std::size_t j = 0; j < f1.columns.size(); ++j) left.columns.push_back(j);
    for (std::size_t j = 0; j < f2.columns.size(); ++j) right.columns.push_back(f1.columns.size() + j);
    report.cross_norm = cross_block_frobenius(r, left, right);

    report.threshold_used = options.cross_norm_threshold;
    report.hypotheses_pass =
        report.cross_norm <= options.cross_norm_threshold &&
        std::min(report.d_f1.d, report.d_f2.d) > options.min_separation;
    return report;
}

PerturbationDecomposition perturbation_decomposition(std::span<const double> u,
                                                     const CovarianceMatrix& s,
                                                     std::size_t split_at) {
    const std::size_t p = s.values.rows();
    if (u.size() != p) {
        throw ConfigError(ErrorKind::shape, "perturbation: u and Sigma dimensions disagree");
    }
    if (split_at == 0 || split_at >= p) {
        throw ConfigError(ErrorKind::invalid_argument,
                          "split_at must lie strictly inside 0..p");
    }

    PerturbationDecomposition out;
    const SpdSolve full = spd_solve(s, u);
    out.exact = kernels::dot(u, std::span<const double>(full.x));

    auto block_term = [&](std::size_t lo, std::size_t hi, const char* label) {
        const std::size_t k = hi - lo;
        Matrix block(k, k);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) block(i, j) = s.values(lo + i, lo + j);
        std::vector<double> ub(u.begin() + static_cast<std::ptrdiff_t>(lo),
                               u.begin() + static_cast<std::ptrdiff_t>(hi));
        CholeskyOptions opts;
        opts.allow_ridge = false;
        const Cholesky chol = cholesky_factor(block, opts, label);
        const auto x = chol.solve(ub);
        return kernels::dot(std::span<const double>(ub), std::span<const double>(x));
    };

    out.block1_term = block_term(0, split_at, "A11");
    out.s1 = out.block1_term + block_term(split_at, p, "A22");

    double acc = 0.0;
    for (std::size_t i = 0; i < split_at; ++i)
        for (std::size_t j = split_at; j < p; ++j) acc += s.values(i, j) * s.values(i, j);
    out.cross_norm = std::sqrt(acc);
    out.residual = out.exact - out.s1;
    return out;
}

} // namespace classdiag
