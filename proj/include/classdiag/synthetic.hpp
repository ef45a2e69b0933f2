#pragma once

#include "classdiag/dataset.hpp"
#include "classdiag/linalg.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace classdiag {

/// Two-component Gaussian mixture with centers +/-mu, shared covariance
/// and class-1 probability theta. Sigma is SPD-verified at construction
/// and the Cholesky factor is cached for sampling.
class GaussianMixtureSpec {
public:
    GaussianMixtureSpec(std::vector<double> mu, Matrix sigma, double theta = 0.5);

    std::size_t dim() const noexcept { return mu_.size(); }
    const std::vector<double>& mu() const noexcept { return mu_; }
    const Matrix& sigma() const noexcept { return sigma_; }
    double theta() const noexcept { return theta_; }
    const Matrix& cholesky_lower() const noexcept { return chol_lower_; }

    /// Distance of separation of the generating model: the quadratic form
    /// of the full between-component mean difference, (2mu)' Sigma^-1 (2mu),
    /// the scale on which the Bayes rate equals Phi(-sqrt(d)/2).
    double separation() const;

private:
    std::vector<double> mu_;
    Matrix sigma_;
    double theta_;
    Matrix chol_lower_;
};

/// n iid draws; class 1 (center +mu) with probability theta, class 0
/// (center -mu) otherwise. Classes are named "neg"/"pos", features
/// "x1".."xp". Each row uses its own derived seed, so chunking across
/// threads cannot change the sample.
Dataset sample_mixture(const GaussianMixtureSpec& spec, std::size_t n, std::uint64_t seed);

/// Exactly n_per_class rows of each class, alternating row labels.
Dataset sample_mixture_stratified(const GaussianMixtureSpec& spec, std::size_t n_per_class,
                                  std::uint64_t seed);

struct MonteCarloBayes {
    double rate = 0.0;
    double sd = 0.0; // sqrt(rate*(1-rate)/draws)
    std::size_t draws = 0;
};

/// Empirical error of the optimal linear rule sign(mu' Sigma^-1 x) on
/// fresh draws; the independent check for the closed-form Bayes rate.
/// Only theta = 1/2 is supported (the scope of that closed form).
MonteCarloBayes monte_carlo_bayes_error(const GaussianMixtureSpec& spec, std::size_t n_draws,
                                        std::uint64_t seed);

/// AR(1)-style matrix Sigma_ij = rho^|i-j|; requires |rho| < 1.
Matrix ar_covariance(std::size_t p, double rho);

/// Random SPD matrix with eigenvalues drawn uniformly in eig_range
/// (random orthogonal conjugation of a random diagonal).
Matrix random_spd_matrix(std::size_t p, std::pair<double, double> eig_range, std::uint64_t seed);

/// The 30-dimensional profiling example: mu = (0.20, 0.19, ..., 0.01,
/// 0 x 10), Sigma_ij = 0.1^|i-j|, theta = 1/2.
GaussianMixtureSpec importance_example_spec();

struct Theorem1Instance {
    std::vector<double> u;  // ||u|| <= 1, u2' A22^-1 u2 >= 0.1
    Matrix sigma;           // [A11 A12; A12' A22], SPD-verified
    std::size_t split;      // p1
    double cross_norm_target = 0.0;
    std::pair<double, double> eig_range{0.5, 2.0};
};

/// Random instance satisfying the marginal-benefit hypotheses: blocks with
/// eigenvalues drawn inside eig_range (random orthogonal conjugation of a
/// random diagonal), cross block scaled to the requested Frobenius norm.
/// Resamples on SPD or energy-floor failure; throws generation_failure
/// after bounded retries.
Theorem1Instance theorem1_instance(std::size_t p1, std::size_t p2, double cross_norm_target,
                                   std::pair<double, double> eig_range, std::uint64_t seed);

} // namespace classdiag
