#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "classdiag/errors.hpp"
#include "classdiag/numstats.hpp"
#include "classdiag/rng.hpp"
#include "classdiag/synthetic.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <cmath>

using namespace classdiag;

namespace {

CovarianceMatrix cov_of(Matrix values) {
    CovarianceMatrix s;
    s.values = std::move(values);
    return s;
}

Matrix mat2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m(0, 0) = a;
    m(0, 1) = b;
    m(1, 0) = c;
    m(1, 1) = d;
    return m;
}

} // namespace

TEST_CASE("covariance estimator on hand-computed cases") {
    Matrix x(2, 2);
    x(0, 0) = 0.0;
    x(0, 1) = 0.0;
    x(1, 0) = 1.0;
    x(1, 1) = 1.0;
    const CovarianceMatrix s = estimate_covariance(x);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(s.values(i, j) == doctest::Approx(0.5));

    // constant column -> zero row and column
    Matrix y(3, 2);
    y(0, 0) = 1.0;
    y(1, 0) = 2.0;
    y(2, 0) = 4.0;
    for (std::size_t i = 0; i < 3; ++i) y(i, 1) = 7.0;
    const CovarianceMatrix sy = estimate_covariance(y);
    CHECK(sy.values(0, 1) == 0.0);
    CHECK(sy.values(1, 0) == 0.0);
    CHECK(sy.values(1, 1) == 0.0);

    // duplicated column: off-diagonal equals the variance
    Matrix z(4, 2);
    Rng rng(3);
    for (std::size_t i = 0; i < 4; ++i) {
        z(i, 0) = rng.next_double();
        z(i, 1) = z(i, 0);
    }
    const CovarianceMatrix sz = estimate_covariance(z);
    CHECK(sz.values(0, 1) == doctest::Approx(sz.values(0, 0)).epsilon(1e-14));

    Matrix one_row(1, 2);
    CHECK_THROWS_AS(estimate_covariance(one_row), DataError);
}

TEST_CASE("correlation normalization") {
    CovarianceMatrix eye = cov_of(Matrix::identity(3));
    const CovarianceMatrix r_eye = to_correlation(eye);
    CHECK(r_eye.values == Matrix::identity(3));

    const CovarianceMatrix r = to_correlation(cov_of(mat2(4, 2, 2, 4)));
    CHECK(r.values(0, 1) == doctest::Approx(0.5));
    CHECK(r.values(0, 0) == 1.0);
    CHECK(r.kind == MomentKind::correlation);
    CHECK_THROWS_AS(to_correlation(r), ConfigError); // already correlation

    // zero-variance feature flagged, row/column zeroed, entries stay in [-1,1]
    Matrix degenerate(3, 3);
    degenerate(0, 0) = 2.0;
    degenerate(0, 2) = 0.5;
    degenerate(2, 0) = 0.5;
    degenerate(2, 2) = 1.0;
    const CovarianceMatrix rd = to_correlation(cov_of(degenerate));
    CHECK(rd.zero_variance == std::vector<std::size_t>{1});
    CHECK(rd.values(1, 1) == 1.0);
    CHECK(rd.values(0, 1) == 0.0);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(rd.values(i, j) <= 1.0);
            CHECK(rd.values(i, j) >= -1.0);
        }
}

TEST_CASE("spd_solve identity, closed form, singular") {
    const std::vector<double> b{3.0, -2.0, 0.5};
    const SpdSolve id = spd_solve(cov_of(Matrix::identity(3)), b);
    for (std::size_t i = 0; i < 3; ++i) CHECK(id.x[i] == doctest::Approx(b[i]).epsilon(1e-14));
    CHECK(id.ridge_applied == 0.0);
    CHECK(id.rcond == doctest::Approx(1.0));

    const SpdSolve s = spd_solve(cov_of(mat2(1, 0.5, 0.5, 1)), std::vector<double>{1.0, 1.0});
    CHECK(s.x[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(s.x[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

    CHECK_THROWS_AS(spd_solve(cov_of(Matrix(2, 2)), std::vector<double>{1.0, 1.0}), NumericError);
    CHECK_THROWS_AS(spd_solve(cov_of(mat2(1, 0.9, 0.1, 1)), std::vector<double>{1.0, 1.0}),
                    ConfigError); // asymmetric
}

TEST_CASE("spd_solve ridge escalation is recorded and bounded") {
    // Exactly singular but nonzero: rank-1 matrix.
    Matrix rank1(2, 2);
    rank1(0, 0) = 1.0;
    rank1(0, 1) = 1.0;
    rank1(1, 0) = 1.0;
    rank1(1, 1) = 1.0;
    const SpdSolve s = spd_solve(cov_of(rank1), std::vector<double>{1.0, 0.0});
    CHECK(s.ridge_applied > 0.0);
    CHECK(s.ridge_applied <= 1e-2 * (rank1(0, 0) + rank1(1, 1)) / 2.0);
}

TEST_CASE("normal cdf meets the 1e-12 contract against quadrature") {
    for (double x = -8.0; x <= 8.0 + 1e-9; x += 0.125) {
        const double got = normal_cdf(x);
        const double want = static_cast<double>(oracles::phi_quadrature(x));
        CHECK(std::abs(got - want) <= 1e-12);
    }
}

TEST_CASE("bayes error from separation") {
    CHECK(bayes_error_from_separation(0.0) == 0.5);
    CHECK(bayes_error_from_separation(4.0) ==
          doctest::Approx(static_cast<double>(oracles::phi_quadrature(-1.0))).epsilon(1e-12));
    CHECK(bayes_error_from_separation(4.0) == doctest::Approx(0.158655).epsilon(1e-5));
    CHECK(bayes_error_from_separation(100.0) == doctest::Approx(2.87e-7).epsilon(0.01));
    CHECK_THROWS_AS(bayes_error_from_separation(-0.1), ConfigError);

    double previous = 1.0;
    for (double d = 0.0; d <= 30.0; d += 0.5) {
        const double e = bayes_error_from_separation(d);
        CHECK(e < previous);
        previous = e;
    }
}

TEST_CASE("separation from exact moments") {
    const SeparationResult zero =
        separation_from_moments(std::vector<double>{0.0, 0.0}, cov_of(Matrix::identity(2)));
    CHECK(zero.d == 0.0);
    CHECK(zero.bayes_error == 0.5);

    const SeparationResult unit =
        separation_from_moments(std::vector<double>{1.0, 0.0}, cov_of(Matrix::identity(2)));
    CHECK(unit.d == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(unit.bayes_error ==
          doctest::Approx(static_cast<double>(oracles::phi_quadrature(-0.5))).epsilon(1e-12));

    const SeparationResult corr =
        separation_from_moments(std::vector<double>{1.0, 1.0}, cov_of(mat2(1, 0.5, 0.5, 1)));
    CHECK(corr.d == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("separation scale invariance") {
    Rng rng(17);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t p = 2 + rep % 4;
        const Matrix sigma =
            random_spd_matrix(p, {0.5, 2.0}, derive_seed(99, {(std::uint64_t)rep}));
        std::vector<double> mu(p);
        for (double& v : mu) v = rng.next_normal();
        const double d0 = separation_from_moments(mu, cov_of(sigma)).d;
        for (double c : {0.5, 2.0, 10.0}) {
            Matrix scaled = sigma;
            std::vector<double> mu_c = mu;
            for (std::size_t i = 0; i < p; ++i) {
                mu_c[i] *= c;
                for (std::size_t j = 0; j < p; ++j) scaled(i, j) *= c * c;
            }
            const double dc = separation_from_moments(mu_c, cov_of(scaled)).d;
            CHECK(dc == doctest::Approx(d0).epsilon(1e-10));
        }
    }
}

TEST_CASE("separation monotone under feature augmentation (dense-inverse oracle)") {
    for (int rep = 0; rep < 200; ++rep) {
        const std::uint64_t seed = derive_seed(271828, {(std::uint64_t)rep});
        Rng rng(seed);
        const std::size_t p1 = 2 + rng.next_below(3);
        const std::size_t p2 = 2 + rng.next_below(3);
        const Theorem1Instance inst =
            theorem1_instance(p1, p2, 0.2 * rng.next_double(), {0.4, 3.0}, seed);

        const Matrix inv_full = oracles::dense_inverse(inst.sigma);
        const double d_full = oracles::quadratic_form(inst.u, inv_full);

        Matrix a11(inst.split, inst.split);
        for (std::size_t i = 0; i < inst.split; ++i)
            for (std::size_t j = 0; j < inst.split; ++j) a11(i, j) = inst.sigma(i, j);
        const std::vector<double> u1(inst.u.begin(), inst.u.begin() + (std::ptrdiff_t)inst.split);
        const double d_sub = oracles::quadratic_form(u1, oracles::dense_inverse(a11));
        CHECK(d_full >= d_sub - 1e-10);
    }
}

TEST_CASE("separation estimated from mixture data approaches the model value") {
    GaussianMixtureSpec spec({1.0, 0.0}, Matrix::identity(2), 0.5);
    CHECK(spec.separation() == doctest::Approx(4.0).epsilon(1e-12));
    const Dataset d = sample_mixture_stratified(spec, 50'000, 2024);
    const SeparationResult r = separation_from_data(d, {1, 0}, d.all_features());
    CHECK(std::abs(r.d - spec.separation()) <= 0.1);

    // order symmetry: mu negates, the quadratic form does not move
    const SeparationResult swapped = separation_from_data(d, {0, 1}, d.all_features());
    CHECK(swapped.d == doctest::Approx(r.d).epsilon(1e-12));
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(swapped.mu_hat[j] == doctest::Approx(-r.mu_hat[j]).epsilon(1e-12));
    }
}

TEST_CASE("degenerate within-class data engages the ridge and stays finite") {
    // Every row of a class identical: pooled covariance is exactly zero.
    Matrix x(6, 2);
    std::vector<int> labels(6);
    for (std::size_t i = 0; i < 3; ++i) {
        x(i, 0) = 2.0;
        x(i, 1) = -1.0;
        labels[i] = 0;
    }
    for (std::size_t i = 3; i < 6; ++i) {
        x(i, 0) = 5.0;
        x(i, 1) = 3.0;
        labels[i] = 1;
    }
    const Dataset d(x, labels, {"a", "b"}, {"lo", "hi"});
    const SeparationResult r = separation_from_data(d, {0, 1}, d.all_features());
    CHECK(r.ridge_applied > 0.0);
    CHECK(std::isfinite(r.d));
    CHECK(r.d > 1e6);

    // insufficient class size
    const Dataset tiny(mat2(0, 0, 1, 1), std::vector<int>{0, 1}, {"a", "b"}, {"x", "y"});
    CHECK_THROWS_AS(separation_from_data(tiny, {0, 1}, tiny.all_features()), DataError);
}

TEST_CASE("cross-block frobenius norm") {
    CovarianceMatrix r;
    r.kind = MomentKind::correlation;
    r.values = Matrix::identity(4);
    const FeatureSet f1{"a", {0, 1}};
    const FeatureSet f2{"b", {2, 3}};
    CHECK(cross_block_frobenius(r, f1, f2) == 0.0);

    r.values(0, 2) = 0.3;
    CHECK(cross_block_frobenius(r, FeatureSet{"a", {0}}, FeatureSet{"b", {2}}) ==
          doctest::Approx(0.3));

    for (std::size_t i : {0u, 1u})
        for (std::size_t j : {2u, 3u}) {
            r.values(i, j) = 0.5;
            r.values(j, i) = 0.5;
        }
    CHECK(cross_block_frobenius(r, f1, f2) == doctest::Approx(1.0));

    CHECK_THROWS_AS(cross_block_frobenius(r, f1, FeatureSet{"overlap", {1, 2}}), ConfigError);
    CovarianceMatrix cov = cov_of(Matrix::identity(4));
    CHECK_THROWS_AS(cross_block_frobenius(cov, f1, f2), ConfigError); // not correlation kind
}

TEST_CASE("marginal benefit on constructed mixtures") {
    // Block-diagonal informative blocks: separations add.
    std::vector<double> mu{0.6, 0.4, 0.5, 0.3};
    GaussianMixtureSpec spec(mu, Matrix::identity(4), 0.5);
    const Dataset d = sample_mixture_stratified(spec, 20'000, 515);
    const FeatureSet f1{"first", {0, 1}};
    const FeatureSet f2{"second", {2, 3}};
    const MarginalBenefitReport r = marginal_benefit(d, {1, 0}, f1, f2, {});
    CHECK(r.hypotheses_pass);
    CHECK(r.d_union.d == doctest::Approx(r.d_f1.d + r.d_f2.d).epsilon(0.05));
    CHECK(r.d_union.d >= r.d_f1.d);
    CHECK(r.d_union.d >= r.d_f2.d);

    // Pure-noise second set: union adds nothing, hypotheses fail on d_f2.
    std::vector<double> mu_noise{0.8, 0.7, 0.0, 0.0};
    GaussianMixtureSpec spec_noise(mu_noise, Matrix::identity(4), 0.5);
    const Dataset dn = sample_mixture_stratified(spec_noise, 20'000, 616);
    const MarginalBenefitReport rn = marginal_benefit(dn, {1, 0}, f1, f2, {});
    CHECK_FALSE(rn.hypotheses_pass);
    CHECK(rn.d_f2.d < 0.05);
    CHECK(rn.d_union.d == doctest::Approx(rn.d_f1.d).epsilon(0.05));

    CHECK_THROWS_AS(marginal_benefit(d, {1, 0}, f1, f1, {}), ConfigError);
}

TEST_CASE("perturbation decomposition: zero coupling recovers the block sum") {
    Matrix sigma(4, 4);
    const Matrix a11 = random_spd_matrix(2, {0.5, 2.0}, 111);
    const Matrix a22 = random_spd_matrix(2, {0.5, 2.0}, 222);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            sigma(i, j) = a11(i, j);
            sigma(2 + i, 2 + j) = a22(i, j);
        }
    const std::vector<double> u{0.3, -0.2, 0.5, 0.1};
    const PerturbationDecomposition pd = perturbation_decomposition(u, cov_of(sigma), 2);
    CHECK(pd.cross_norm == 0.0);
    CHECK(std::abs(pd.residual) <= 1e-8 * std::max(1.0, std::abs(pd.exact)));

    CHECK_THROWS_AS(perturbation_decomposition(u, cov_of(sigma), 4), ConfigError);
    CHECK_THROWS_AS(perturbation_decomposition(u, cov_of(sigma), 0), ConfigError);

    // singular block is named
    Matrix bad = sigma;
    bad(0, 0) = bad(0, 1) = bad(1, 0) = bad(1, 1) = 1.0;
    try {
        perturbation_decomposition(u, cov_of(bad), 2);
        CHECK(false);
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("A11") != std::string::npos);
    }
}

TEST_CASE("perturbation decomposition against the dense-inversion oracle") {
    int checked = 0;
    double residual_sum = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::uint64_t seed = derive_seed(314159, {(std::uint64_t)rep});
        const Theorem1Instance inst = theorem1_instance(3, 3, 0.01, {0.5, 2.0}, seed);
        const PerturbationDecomposition pd =
            perturbation_decomposition(inst.u, cov_of(inst.sigma), inst.split);

        // Provable first-order bound: |residual| = |u'S^-1 E A^-1 u| with
        // ||E||_2 <= sqrt(2)*cross and eigenvalues >= 0.5 - ||E||_2, so the
        // constant is sqrt(2)/(0.49*0.5) < 6. The typical size is far
        // smaller; the mean is checked below.
        CHECK(std::abs(pd.residual) <= 6.0 * pd.cross_norm);
        residual_sum += std::abs(pd.residual);

        // exact strictly above the first-block term, via an independent route
        const double exact_oracle =
            oracles::quadratic_form(inst.u, oracles::dense_inverse(inst.sigma));
        Matrix a11(3, 3);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) a11(i, j) = inst.sigma(i, j);
        const std::vector<double> u1(inst.u.begin(), inst.u.begin() + 3);
        const double block_oracle = oracles::quadratic_form(u1, oracles::dense_inverse(a11));
        CHECK(exact_oracle > block_oracle);
        CHECK(pd.exact == doctest::Approx(exact_oracle).epsilon(1e-9));
        CHECK(pd.block1_term == doctest::Approx(block_oracle).epsilon(1e-9));
        ++checked;
    }
    CHECK(checked == 1000);
    // Typical residual is a small fraction of the coupling norm.
    CHECK(residual_sum / 1000.0 <= 0.5 * 0.01);
}
