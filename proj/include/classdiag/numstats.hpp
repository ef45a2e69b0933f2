#pragma once

#include "classdiag/dataset.hpp"
#include "classdiag/linalg.hpp"

#include <span>
#include <utility>
#include <vector>

namespace classdiag {

enum class MomentKind { covariance, correlation };

/// Second-moment estimate plus the diagnostics the report surfaces: any
/// ridge a solve had to apply and a reciprocal-condition estimate.
struct CovarianceMatrix {
    Matrix values;
    MomentKind kind = MomentKind::covariance;
    double ridge_applied = 0.0;
    double condition_estimate = 0.0;
    std::vector<std::size_t> zero_variance; // features with no spread (correlation kind)
};

/// Unbiased (n-1 denominator) sample covariance of the columns of x.
CovarianceMatrix estimate_covariance(const Matrix& x);

/// R_ij = S_ij / sqrt(S_ii S_jj); zero-variance features become a zero
/// row/column with unit diagonal and are listed in zero_variance.
CovarianceMatrix to_correlation(const CovarianceMatrix& s);

struct SpdSolve {
    std::vector<double> x;
    double ridge_applied = 0.0;
    double rcond = 0.0;
};

/// Cholesky solve S x = b with the escalating-ridge retry schedule
/// (delta_k = 10^(k-8) * trace/p for k = 0..6 after the plain attempt).
/// fallback_ridge_scale substitutes for trace/p when the trace vanishes;
/// the default 0 keeps an all-zero matrix a hard singular_matrix error.
SpdSolve spd_solve(const CovarianceMatrix& s, std::span<const double> b,
                   double fallback_ridge_scale = 0.0);

/// Standard normal CDF, absolute error <= 1e-12 on [-8, 8].
double normal_cdf(double x);

/// Phi(-sqrt(d)/2): the optimal error of the equal-prior two-component
/// Gaussian mixture at separation d. Throws on d < 0.
double bayes_error_from_separation(double d);

struct SeparationResult {
    double d = 0.0;
    double bayes_error = 0.5;
    std::vector<double> mu_hat; // half mean difference
    FeatureSet feature_set;     // empty when built from raw moments
    std::pair<int, int> pair{0, 1};
    double condition_estimate = 0.0; // rcond estimate of the factored matrix
    double ridge_applied = 0.0;
    bool wide_feature_warning = false; // |F| >= n_A + n_B
};

/// d = mu' S^-1 mu for the given between-class mean-difference vector.
/// Degenerate moment matrices are ridge-rescued (absolute scale 1) instead
/// of erroring, with the ridge recorded in the result.
SeparationResult separation_from_moments(std::span<const double> mu, const CovarianceMatrix& s);

/// Plug-in estimate from data: pooled within-class covariance, d over the
/// full class-mean difference (so estimates land on the same scale as the
/// generating-model separation); mu_hat reports the half difference, the
/// +/-mu centering convention.
SeparationResult separation_from_data(const Dataset& d, std::pair<int, int> pair,
                                      const FeatureSet& f);

/// Frobenius norm of the f1 x f2 block of a correlation matrix. The
/// correlation kind is required so thresholds stay scale-free.
double cross_block_frobenius(const CovarianceMatrix& r, const FeatureSet& f1,
                             const FeatureSet& f2);

struct MarginalBenefitOptions {
    double cross_norm_threshold = 0.1; // gate on ||A12||_F of the correlation matrix
    double min_separation = 0.1;       // operational floor for "positive" d
};

struct MarginalBenefitReport {
    SeparationResult d_f1;
    SeparationResult d_f2;
    SeparationResult d_union;
    double cross_norm = 0.0;
    bool hypotheses_pass = false;
    double threshold_used = 0.1;
};

MarginalBenefitReport marginal_benefit(const Dataset& d, std::pair<int, int> pair,
                                       const FeatureSet& f1, const FeatureSet& f2,
                                       const MarginalBenefitOptions& options = {});

/// Terms of the block expansion of u' Sigma^-1 u around the block-diagonal
/// part: exact quadratic form, the two decoupled block terms, the coupling
/// norm and what the coupling actually contributed.
struct PerturbationDecomposition {
    double exact = 0.0;       // u' Sigma^-1 u, direct solve
    double s1 = 0.0;          // u1' A11^-1 u1 + u2' A22^-1 u2
    double block1_term = 0.0; // u1' A11^-1 u1 alone
    double cross_norm = 0.0;  // ||A12||_F
    double residual = 0.0;    // exact - s1
};

PerturbationDecomposition perturbation_decomposition(std::span<const double> u,
                                                     const CovarianceMatrix& s,
                                                     std::size_t split_at);

} // namespace classdiag
