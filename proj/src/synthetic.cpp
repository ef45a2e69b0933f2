#include "classdiag/synthetic.hpp"

#include "classdiag/errors.hpp"
#include "classdiag/kernels.hpp"
#include "classdiag/numstats.hpp"
#include "classdiag/rng.hpp"
#include "classdiag/threading.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace classdiag {

GaussianMixtureSpec::GaussianMixtureSpec(std::vector<double> mu, Matrix sigma, double theta)
    : mu_(std::move(mu)), sigma_(std::move(sigma)), theta_(theta) {
    if (mu_.empty() || sigma_.rows() != mu_.size() || sigma_.cols() != mu_.size()) {
        throw ConfigError(ErrorKind::shape, "mixture spec: mu and sigma dimensions disagree");
    }
    if (!(theta_ > 0.0) || !(theta_ < 1.0)) {
        throw ConfigError(ErrorKind::invalid_argument, "mixture spec: theta must lie in (0, 1)");
    }
    if (symmetry_gap(sigma_) > 1e-12) {
        throw ConfigError(ErrorKind::invalid_argument, "mixture spec: sigma must be symmetric");
    }
    CholeskyOptions opts;
    opts.allow_ridge = false;
    try {
        chol_lower_ = cholesky_factor(sigma_, opts, "sigma").lower;
    } catch (const NumericError&) {
        throw ConfigError(ErrorKind::invalid_argument,
                          "mixture spec: sigma is not positive definite");
    }
}

double GaussianMixtureSpec::separation() const {
    // Distance of separation of the mixture: the quadratic form of the
    // full between-component mean difference 2*mu, so that the Bayes rate
    // is exactly Phi(-sqrt(d)/2).
    CovarianceMatrix s;
    s.values = sigma_;
    const SpdSolve solve = spd_solve(s, mu_);
    return 4.0 * kernels::dot(std::span<const double>(mu_), std::span<const double>(solve.x));
}

namespace {

constexpr std::uint64_t kLabelStream = 0;
constexpr std::uint64_t kNoiseStream = 1;

// One mixture draw into `row`: x = sign * mu + L z with z standard normal.
void draw_features(const GaussianMixtureSpec& spec, Rng& rng, double sign,
                   std::span<double> row) {
    const std::size_t p = spec.dim();
    std::vector<double> z(p);
    for (std::size_t j = 0; j < p; ++j) z[j] = rng.next_normal();
    const Matrix& lower = spec.cholesky_lower();
    for (std::size_t j = 0; j < p; ++j) {
        row[j] = sign * spec.mu()[j] +
                 kernels::dot(lower.row(j).first(j + 1), std::span<const double>(z).first(j + 1));
    }
}

std::vector<std::string> mixture_feature_names(std::size_t p) {
    std::vector<std::string> names(p);
    for (std::size_t j = 0; j < p; ++j) names[j] = "x" + std::to_string(j + 1);
    return names;
}

} // namespace

Dataset sample_mixture(const GaussianMixtureSpec& spec, std::size_t n, std::uint64_t seed) {
    if (n == 0) {
        throw ConfigError(ErrorKind::invalid_argument, "sample_mixture: n must be >= 1");
    }
    const std::size_t p = spec.dim();
    Matrix features(n, p);
    std::vector<int> labels(n);
    parallel_for(n, [&](std::size_t i) {
        Rng label_rng(derive_seed(seed, {kLabelStream, i}));
        const int label = label_rng.next_double() < spec.theta() ? 1 : 0;
        Rng noise_rng(derive_seed(seed, {kNoiseStream, i}));
        draw_features(spec, noise_rng, label == 1 ? 1.0 : -1.0, features.row(i));
        labels[i] = label;
    });
    return Dataset(std::move(features), std::move(labels), mixture_feature_names(p),
                   {"neg", "pos"});
}

Dataset sample_mixture_stratified(const GaussianMixtureSpec& spec, std::size_t n_per_class,
                                  std::uint64_t seed) {
    if (n_per_class == 0) {
        throw ConfigError(ErrorKind::invalid_argument, "n_per_class must be >= 1");
    }
    const std::size_t n = 2 * n_per_class;
    const std::size_t p = spec.dim();
    Matrix features(n, p);
    std::vector<int> labels(n);
    parallel_for(n, [&](std::size_t i) {
        const int label = static_cast<int>(i % 2);
        Rng noise_rng(derive_seed(seed, {kNoiseStream, i}));
        draw_features(spec, noise_rng, label == 1 ? 1.0 : -1.0, features.row(i));
        labels[i] = label;
    });
    return Dataset(std::move(features), std::move(labels), mixture_feature_names(p),
                   {"neg", "pos"});
}

MonteCarloBayes monte_carlo_bayes_error(const GaussianMixtureSpec& spec, std::size_t n_draws,
                                        std::uint64_t seed) {
    if (spec.theta() != 0.5) {
        throw ConfigError(ErrorKind::unsupported_configuration,
                          "the Monte-Carlo optimal-rule check requires theta = 1/2");
    }
    if (n_draws < 1000) {
        throw ConfigError(ErrorKind::invalid_argument, "need at least 1000 draws");
    }

    CovarianceMatrix s;
    s.values = spec.sigma();
    const std::vector<double> w = spd_solve(s, spec.mu()).x;

    const std::size_t chunk = 4096;
    const std::size_t n_chunks = (n_draws + chunk - 1) / chunk;
    std::vector<std::size_t> wrong_per_chunk(n_chunks, 0);
    parallel_for(n_chunks, [&](std::size_t c) {
        const std::size_t lo = c * chunk;
        const std::size_t hi = std::min(n_draws, lo + chunk);
        std::vector<double> x(spec.dim());
        std::size_t wrong = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            Rng label_rng(derive_seed(seed, {kLabelStream, i}));
            const int label = label_rng.next_double() < 0.5 ? 1 : 0;
            Rng noise_rng(derive_seed(seed, {kNoiseStream, i}));
            draw_features(spec, noise_rng, label == 1 ? 1.0 : -1.0, x);
            const int predicted =
                kernels::dot(std::span<const double>(w), std::span<const double>(x)) > 0.0 ? 1 : 0;
            if (predicted != label) ++wrong;
        }
        wrong_per_chunk[c] = wrong;
    });

    const std::size_t wrong =
        std::accumulate(wrong_per_chunk.begin(), wrong_per_chunk.end(), std::size_t{0});
    MonteCarloBayes out;
    out.draws = n_draws;
    out.rate = static_cast<double>(wrong) / static_cast<double>(n_draws);
    out.sd = std::sqrt(out.rate * (1.0 - out.rate) / static_cast<double>(n_draws));
    return out;
}

Matrix ar_covariance(std::size_t p, double rho) {
    if (!(std::abs(rho) < 1.0)) {
        throw ConfigError(ErrorKind::invalid_argument, "ar_covariance requires |rho| < 1");
    }
    Matrix sigma(p, p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j)
            sigma(i, j) = std::pow(rho, std::abs(static_cast<double>(i) - static_cast<double>(j)));
    if (!is_spd(sigma)) {
        throw NumericError(ErrorKind::singular_matrix, "ar_covariance produced a non-SPD matrix");
    }
    return sigma;
}

GaussianMixtureSpec importance_example_spec() {
    std::vector<double> mu(30, 0.0);
    for (std::size_t k = 1; k <= 20; ++k) mu[k - 1] = 0.21 - 0.01 * static_cast<double>(k);
    return GaussianMixtureSpec(std::move(mu), ar_covariance(30, 0.1), 0.5);
}

namespace {

// Random orthogonal matrix: modified Gram-Schmidt on a Gaussian matrix.
Matrix random_orthogonal(Rng& rng, std::size_t p) {
    Matrix q(p, p);
    for (std::size_t j = 0; j < p; ++j) {
        std::vector<double> v(p);
        for (std::size_t i = 0; i < p; ++i) v[i] = rng.next_normal();
        for (std::size_t k = 0; k < j; ++k) {
            double proj = 0.0;
            for (std::size_t i = 0; i < p; ++i) proj += q(i, k) * v[i];
            for (std::size_t i = 0; i < p; ++i) v[i] -= proj * q(i, k);
        }
        double norm = std::sqrt(kernels::dot(std::span<const double>(v), std::span<const double>(v)));
        if (norm < 1e-12) {
            // Degenerate draw; fall back to a unit vector (measure-zero path).
            std::fill(v.begin(), v.end(), 0.0);
            v[j] = 1.0;
            norm = 1.0;
        }
        for (std::size_t i = 0; i < p; ++i) q(i, j) = v[i] / norm;
    }
    return q;
}

Matrix random_spd(Rng& rng, std::size_t p, std::pair<double, double> eig_range) {
    const Matrix q = random_orthogonal(rng, p);
    std::vector<double> eig(p);
    for (std::size_t i = 0; i < p; ++i) {
        eig[i] = eig_range.first + (eig_range.second - eig_range.first) * rng.next_double();
    }
    Matrix a(p, p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i; j < p; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < p; ++k) acc += q(i, k) * eig[k] * q(j, k);
            a(i, j) = acc;
            a(j, i) = acc;
        }
    return a;
}

} // namespace

Matrix random_spd_matrix(std::size_t p, std::pair<double, double> eig_range, std::uint64_t seed) {
    if (p == 0 || !(eig_range.first > 0.0) || !(eig_range.second >= eig_range.first)) {
        throw ConfigError(ErrorKind::invalid_argument, "random_spd_matrix: bad dimensions or range");
    }
    Rng rng(seed);
    return random_spd(rng, p, eig_range);
}

Theorem1Instance theorem1_instance(std::size_t p1, std::size_t p2, double cross_norm_target,
                                   std::pair<double, double> eig_range, std::uint64_t seed) {
    if (p1 == 0 || p2 == 0) {
        throw ConfigError(ErrorKind::invalid_argument, "block dimensions must be positive");
    }
    if (!(eig_range.first > 0.0) || !(eig_range.second >= eig_range.first)) {
        throw ConfigError(ErrorKind::invalid_argument, "eigenvalue range must satisfy 0 < lo <= hi");
    }
    if (cross_norm_target < 0.0) {
        throw ConfigError(ErrorKind::invalid_argument, "cross norm target must be nonnegative");
    }

    const std::size_t p = p1 + p2;
    constexpr int kMaxAttempts = 100;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(attempt)}));

        const Matrix a11 = random_spd(rng, p1, eig_range);
        const Matrix a22 = random_spd(rng, p2, eig_range);

        Matrix a12(p1, p2);
        if (cross_norm_target > 0.0) {
            for (std::size_t i = 0; i < p1; ++i)
                for (std::size_t j = 0; j < p2; ++j) a12(i, j) = rng.next_normal();
            const double norm = frobenius_norm(a12);
            if (norm < 1e-12) continue;
            for (std::size_t i = 0; i < p1; ++i)
                for (std::size_t j = 0; j < p2; ++j) a12(i, j) *= cross_norm_target / norm;
        }

        Matrix sigma(p, p);
        for (std::size_t i = 0; i < p1; ++i)
            for (std::size_t j = 0; j < p1; ++j) sigma(i, j) = a11(i, j);
        for (std::size_t i = 0; i < p2; ++i)
            for (std::size_t j = 0; j < p2; ++j) sigma(p1 + i, p1 + j) = a22(i, j);
        for (std::size_t i = 0; i < p1; ++i)
            for (std::size_t j = 0; j < p2; ++j) {
                sigma(i, p1 + j) = a12(i, j);
                sigma(p1 + j, i) = a12(i, j);
            }
        if (!is_spd(sigma)) continue;

        std::vector<double> u(p);
        for (std::size_t i = 0; i < p; ++i) u[i] = rng.next_normal();
        const double norm =
            std::sqrt(kernels::dot(std::span<const double>(u), std::span<const double>(u)));
        if (norm < 1e-12) continue;
        for (double& v : u) v /= norm;

        // u2-energy floor: u2' A22^-1 u2 >= 0.1 per the operationalized
        // "bounded away from zero" hypothesis.
        CholeskyOptions opts;
        opts.allow_ridge = false;
        const Cholesky chol22 = cholesky_factor(a22, opts, "A22");
        const std::vector<double> u2(u.begin() + static_cast<std::ptrdiff_t>(p1), u.end());
        const auto x2 = chol22.solve(u2);
        const double energy =
            kernels::dot(std::span<const double>(u2), std::span<const double>(x2));
        if (energy < 0.1) continue;

        Theorem1Instance out;
        out.u = std::move(u);
        out.sigma = std::move(sigma);
        out.split = p1;
        out.cross_norm_target = cross_norm_target;
        out.eig_range = eig_range;
        return out;
    }
    throw NumericError(ErrorKind::generation_failure,
                       "theorem1_instance: retries exhausted without a feasible instance");
}

} // namespace classdiag
