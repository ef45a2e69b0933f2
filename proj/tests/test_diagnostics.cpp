#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "classdiag/diagnostics.hpp"
#include "classdiag/errors.hpp"
#include "classdiag/rng.hpp"
#include "classdiag/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace classdiag;

namespace {

// A reference 7-class confusion fixture (all-features run): rows = true
// class, columns = predicted, classes in alphabetical order.
const std::vector<std::string> kFixtureClasses{"Bareland", "Forest",      "Idle",  "Industry",
                                               "Orchard",  "Residential", "Water"};
const std::int64_t kFixtureCounts[7][7] = {
    {42, 0, 0, 2, 0, 0, 0},  {0, 73, 1, 0, 9, 0, 0},  {0, 1, 44, 0, 0, 0, 0},
    {2, 0, 1, 66, 0, 2, 0},  {0, 0, 0, 0, 48, 0, 0},  {0, 0, 0, 1, 0, 89, 1},
    {0, 0, 0, 0, 0, 0, 41},
};

ConfusionMatrix fixture_matrix() {
    std::vector<int> truth, predicted;
    for (int i = 0; i < 7; ++i) {
        for (int j = 0; j < 7; ++j) {
            for (std::int64_t k = 0; k < kFixtureCounts[i][j]; ++k) {
                truth.push_back(i);
                predicted.push_back(j);
            }
        }
    }
    return confusion_matrix(truth, predicted, 7, kFixtureClasses);
}

ClassifierSpec fast_forest(std::size_t trees = 60) {
    ClassifierSpec spec;
    spec.kind = ClassifierKind::random_forest;
    spec.rf.n_trees = trees;
    return spec;
}

ClassifierSpec fast_logit(double lambda = 1e-4) {
    ClassifierSpec spec;
    spec.kind = ClassifierKind::l1_logistic;
    spec.logit.lambda = lambda;
    return spec;
}

} // namespace

TEST_CASE("confusion matrix basics") {
    const std::vector<int> truth{0, 1, 2, 1};
    const ConfusionMatrix perfect = confusion_matrix(truth, truth, 3);
    CHECK(error_rate(perfect) == 0.0);
    CHECK(perfect.total() == 4);
    for (const ClassRates& r : per_class_rates(perfect)) {
        CHECK(r.producer_error == 0.0);
        CHECK(r.user_error == 0.0);
    }

    const std::vector<int> one_truth{1};
    const std::vector<int> one_pred{2};
    const ConfusionMatrix single = confusion_matrix(one_truth, one_pred, 3);
    CHECK(error_rate(single) == 1.0);
    CHECK(single.at(1, 2) == 1);

    const std::vector<int> short_pred{0};
    CHECK_THROWS_AS(confusion_matrix(truth, short_pred, 3), ConfigError);
}

TEST_CASE("reference confusion fixture: totals, rates, kappa") {
    const ConfusionMatrix cm = fixture_matrix();
    CHECK(cm.total() == 423);
    std::int64_t diag = 0;
    for (std::size_t i = 0; i < 7; ++i) diag += cm.at(i, i);
    CHECK(diag == 403);
    CHECK(error_rate(cm) == doctest::Approx(20.0 / 423.0).epsilon(1e-12));

    const auto rates = per_class_rates(cm);
    CHECK(rates[1].producer_error == doctest::Approx(10.0 / 83.0).epsilon(1e-12));
    CHECK(rates[3].user_error == doctest::Approx(3.0 / 69.0).epsilon(1e-12));

    // kappa against the direct formula evaluated from the fixture sums
    double p_o = 403.0 / 423.0;
    double p_e = 0.0;
    for (std::size_t c = 0; c < 7; ++c) {
        p_e += static_cast<double>(cm.row_sum(c)) * static_cast<double>(cm.col_sum(c));
    }
    p_e /= 423.0 * 423.0;
    CHECK(kappa(cm) == doctest::Approx((p_o - p_e) / (1.0 - p_e)).epsilon(1e-12));
}

TEST_CASE("kappa edge cases") {
    const std::vector<int> truth{0, 0, 1, 1};
    const ConfusionMatrix perfect = confusion_matrix(truth, truth, 2);
    CHECK(kappa(perfect) == doctest::Approx(1.0).epsilon(1e-12));

    // chance-level agreement with matched marginals: all four cells equal
    std::vector<int> t2, p2;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 25; ++k) {
                t2.push_back(i);
                p2.push_back(j);
            }
    CHECK(kappa(confusion_matrix(t2, p2, 2)) == doctest::Approx(0.0).epsilon(1e-12));

    // every instance in one cell: p_e = 1
    const std::vector<int> ones(10, 1);
    CHECK_THROWS_AS(kappa(confusion_matrix(ones, ones, 2)), NumericError);

    // kappa <= 1 on random matrices
    Rng rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<int> t(40), p(40);
        for (int i = 0; i < 40; ++i) {
            t[i] = static_cast<int>(rng.next_below(3));
            p[i] = static_cast<int>(rng.next_below(3));
        }
        CHECK(kappa(confusion_matrix(t, p, 3)) <= 1.0);
    }
}

TEST_CASE("learning curve: full-size point reproduces the direct fit") {
    GaussianMixtureSpec spec({1.0, 0.0}, Matrix::identity(2), 0.5);
    const Dataset train = sample_mixture_stratified(spec, 150, 11);
    const Dataset test = sample_mixture_stratified(spec, 500, 12);
    const ClassifierSpec rf = fast_forest(40);

    const std::vector<std::size_t> sizes{train.n_rows()};
    const DiagnosticCurve curve = learning_curve(train, test, rf, sizes, 1, 999);
    REQUIRE(curve.points.size() == 1);
    CHECK(curve.points[0].repeats == 1);

    const std::uint64_t ps = curve_point_seed(999, 0, 0);
    const TrainedModel direct = train_classifier(train, rf, curve_train_seed(ps));
    CHECK(curve.points[0].mean == holdout_error(direct, test));

    const std::vector<std::size_t> bad{10, 10};
    CHECK_THROWS_AS(learning_curve(train, test, rf, bad, 1, 1), ConfigError);
    const std::vector<std::size_t> infeasible{301};
    CHECK_THROWS_AS(learning_curve(train, test, rf, infeasible, 1, 1), DataError);
}

TEST_CASE("learning curve decreases with sample size on the d=4 mixture") {
    GaussianMixtureSpec spec({1.0, 0.0}, Matrix::identity(2), 0.5);
    const Dataset train = sample_mixture_stratified(spec, 1'250, 21);
    const Dataset test = sample_mixture_stratified(spec, 1'000, 22);
    const std::vector<std::size_t> sizes{50, 2000};
    const DiagnosticCurve curve = learning_curve(train, test, fast_forest(80), sizes, 5, 31);
    REQUIRE(curve.points.size() == 2);
    CHECK(curve.points[1].mean <= curve.points[0].mean);
    CHECK(curve.points[0].sd > 0.0);
}

TEST_CASE("logistic approaches the model error floor at n = 5000") {
    GaussianMixtureSpec spec({1.0, 0.0}, Matrix::identity(2), 0.5);
    const Dataset train = sample_mixture_stratified(spec, 2'500, 41);
    const Dataset test = sample_mixture_stratified(spec, 10'000, 42);
    const std::vector<std::size_t> sizes{5000};
    const DiagnosticCurve curve = learning_curve(train, test, fast_logit(), sizes, 1, 51);
    CHECK(std::abs(curve.points[0].mean - 0.15866) <= 0.02);
}

TEST_CASE("label noise injection changes exactly the requested rows") {
    GaussianMixtureSpec spec({0.5, 0.0}, Matrix::identity(2), 0.5);
    const Dataset d = sample_mixture(spec, 100, 61);

    const Dataset same = inject_label_noise(d, 0.0, 7);
    CHECK(same.labels() == d.labels());
    CHECK(same.features() == d.features());

    const Dataset flipped = inject_label_noise(d, 1.0, 7);
    for (std::size_t i = 0; i < d.n_rows(); ++i) CHECK(flipped.label(i) != d.label(i));

    const Dataset five = inject_label_noise(d, 0.05, 8);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        if (five.label(i) != d.label(i)) ++changed;
    }
    CHECK(changed == 5);
    CHECK(five.features() == d.features());

    CHECK_THROWS_AS(inject_label_noise(d, -0.1, 1), ConfigError);
    CHECK_THROWS_AS(inject_label_noise(d, 1.1, 1), ConfigError);
}

TEST_CASE("noise injection property: count, difference, feature identity") {
    Rng meta(909);
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t n = 5 + meta.next_below(200);
        const std::size_t c = 2 + meta.next_below(5);
        const double eps = meta.next_double();
        const std::uint64_t seed = meta.next_u64();

        Matrix x(n, 2);
        std::vector<int> labels(n);
        std::vector<std::string> class_names;
        for (std::size_t k = 0; k < c; ++k) class_names.push_back("c" + std::to_string(k));
        for (std::size_t i = 0; i < n; ++i) {
            x(i, 0) = meta.next_normal();
            x(i, 1) = meta.next_normal();
            labels[i] = static_cast<int>(i % c);
        }
        const Dataset d(x, labels, {"a", "b"}, class_names);
        const Dataset noisy = inject_label_noise(d, eps, seed);

        std::size_t changed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (noisy.label(i) != d.label(i)) ++changed;
            CHECK(noisy.label(i) >= 0);
            CHECK(noisy.label(i) < static_cast<int>(c));
        }
        CHECK(changed == round_half_up(eps * static_cast<double>(n)));
        CHECK(noisy.features() == d.features());

        const Dataset again = inject_label_noise(d, eps, seed);
        CHECK(again.labels() == noisy.labels());
    }
}

TEST_CASE("noise curve: default grid, baseline point, upward drift for logit") {
    CHECK(default_noise_grid() == std::vector<double>{0.01, 0.02, 0.03, 0.04, 0.05, 0.10});

    GaussianMixtureSpec spec({1.0, 0.0}, Matrix::identity(2), 0.5);
    const Dataset train = sample_mixture_stratified(spec, 1'000, 71);
    const Dataset test = sample_mixture_stratified(spec, 2'000, 72);

    const std::vector<double> eps{0.0, 0.10};
    const DiagnosticCurve curve = noise_curve(train, test, fast_logit(1e-3), eps, 5, 81);
    REQUIRE(curve.points.size() == 2);

    // at eps = 0 every repeat trains on the identical clean set, so the
    // dispersion collapses and the point equals a direct fit on that seed
    const std::uint64_t ps = curve_point_seed(81, 0, 0);
    const TrainedModel direct = train_classifier(train, fast_logit(1e-3), curve_train_seed(ps));
    CHECK(curve.points[0].mean == holdout_error(direct, test));
    CHECK(curve.points[0].sd == 0.0);

    // contamination does not help (within one sd)
    CHECK(curve.points[1].mean >= curve.points[0].mean - curve.points[1].sd);

    const DiagnosticCurve dflt = noise_curve(train, test, fast_logit(1e-3), {}, 1, 81);
    CHECK(dflt.points.size() == 6);
}

TEST_CASE("downsample sweep: unit ratio reproduces the baseline exactly") {
    GaussianMixtureSpec spec({0.8, 0.0}, Matrix::identity(2), 0.5);
    const Dataset train = sample_mixture_stratified(spec, 400, 91);
    const Dataset test = sample_mixture_stratified(spec, 800, 92);
    const ClassifierSpec rf = fast_forest(30);

    const std::vector<double> ratios{1.0};
    const DownsampleSweep sweep = downsample_sweep(train, test, rf, 1, ratios, 2, 93);
    REQUIRE(sweep.error.points.size() == 1);

    double baseline = 0.0;
    for (std::size_t rep = 0; rep < 2; ++rep) {
        const std::uint64_t ps = curve_point_seed(93, 0, rep);
        const TrainedModel model = train_classifier(train, rf, curve_train_seed(ps));
        baseline += holdout_error(model, test);
    }
    CHECK(sweep.error.points[0].mean == baseline / 2.0);

    // involving-target counts never exceed total misclassifications
    const std::vector<double> more{0.5, 1.0};
    const DownsampleSweep s2 = downsample_sweep(train, test, rf, 1, more, 3, 94);
    for (std::size_t i = 0; i < s2.error.points.size(); ++i) {
        CHECK(s2.involving_target.points[i].mean <=
              s2.error.points[i].mean * static_cast<double>(test.n_rows()) + 1e-9);
    }
}

TEST_CASE("downsample sweep wanders non-monotonically on an imbalanced overlap") {
    // One class 4x oversampled on a heavily overlapping pair, evaluated on
    // a test set whose class balance matches the training distribution at
    // ratio ~0.375: the sweep then has an interior error minimum (errors
    // rise on both sides of the matched point), so the involving-target
    // count moves both ways across the grid.
    GaussianMixtureSpec spec({0.35, 0.0}, Matrix::identity(2), 0.5);
    const Dataset big = sample_mixture_stratified(spec, 1'600, 95);
    const Dataset train = downsample_class(big, 0, 0.25, 96); // 400 vs 1600
    GaussianMixtureSpec test_spec({0.35, 0.0}, Matrix::identity(2), 0.6);
    const Dataset test = sample_mixture(test_spec, 1'500, 97);

    const std::vector<double> ratios{0.2, 0.4, 0.6, 0.8, 1.0};
    const DownsampleSweep sweep = downsample_sweep(train, test, fast_forest(60), 1, ratios, 5, 98);
    const auto& pts = sweep.involving_target.points;
    bool up = false, down = false;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].mean > pts[i - 1].mean) up = true;
        if (pts[i].mean < pts[i - 1].mean) down = true;
    }
    CHECK(up);
    CHECK(down);
}

TEST_CASE("pairwise separation grids") {
    // 7 artificial classes: C(7,2) = 21 pairs
    Rng rng(99);
    Matrix x(7 * 8, 3);
    std::vector<int> labels(7 * 8);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const int cls = static_cast<int>(i / 8);
        labels[i] = cls;
        for (std::size_t j = 0; j < 3; ++j) x(i, j) = rng.next_normal() + cls;
    }
    std::vector<std::string> names;
    for (int c = 0; c < 7; ++c) names.push_back("t" + std::to_string(c));
    const Dataset d7(x, labels, {"a", "b", "c"}, names);
    const std::vector<FeatureSet> sets{d7.all_features(), FeatureSet{"first", {0}}};
    const PairwiseSeparationReport report = pairwise_separation_report(d7, sets);
    CHECK(report.per_pair_min.size() == 21);
    CHECK(report.entries.size() == 42);

    // two classes -> one pair
    GaussianMixtureSpec spec({0.5, 0.0}, Matrix::identity(2), 0.5);
    const Dataset d2 = sample_mixture_stratified(spec, 50, 7);
    const std::vector<FeatureSet> one{d2.all_features()};
    CHECK(pairwise_separation_report(d2, one).per_pair_min.size() == 1);
}

TEST_CASE("a coincident pair reports no separation") {
    // classes 0 and 1 share a distribution, class 2 sits far away
    Rng rng(123);
    const std::size_t per = 400;
    Matrix x(3 * per, 2);
    std::vector<int> labels(3 * per);
    for (std::size_t i = 0; i < 3 * per; ++i) {
        const int cls = static_cast<int>(i / per);
        labels[i] = cls;
        const double shift = cls == 2 ? 4.0 : 0.0;
        x(i, 0) = rng.next_normal() + shift;
        x(i, 1) = rng.next_normal() + shift;
    }
    const Dataset d(x, labels, {"a", "b"}, {"c0", "c1", "c2"});
    const std::vector<FeatureSet> sets{d.all_features()};
    const PairwiseSeparationReport report = pairwise_separation_report(d, sets);
    for (const PairSeparation& e : report.entries) {
        if (e.pair == std::pair<int, int>{0, 1}) {
            CHECK(e.result.d <= 0.05);
            CHECK(e.result.bayes_error >= 0.45);
        } else {
            CHECK(e.result.d > 10.0);
        }
    }
}

TEST_CASE("feature-set comparison is paired and ranks informative sets first") {
    GaussianMixtureSpec spec({0.9, 0.8, 0.0, 0.0}, Matrix::identity(4), 0.5);
    const Dataset train = sample_mixture_stratified(spec, 1'000, 201);
    const Dataset test = sample_mixture_stratified(spec, 2'000, 202);

    const FeatureSet informative{"signal", {0, 1}};
    const FeatureSet noise{"noise", {2, 3}};
    const FeatureSet informative_copy{"signal2", {0, 1}};
    const std::vector<std::size_t> sizes{100, 1000};

    const std::vector<FeatureSet> sets{informative, noise, informative_copy};
    const auto curves = feature_set_comparison(train, test, fast_logit(1e-3), sets, sizes, 3, 203);
    REQUIRE(curves.size() == 3);
    CHECK(curves[0].series == "signal");

    // identical sets, shared seeds: identical curves
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        CHECK(curves[0].points[i].mean == curves[2].points[i].mean);
        CHECK(curves[0].points[i].sd == curves[2].points[i].sd);
    }
    // informative strictly below noise at the largest size
    CHECK(curves[0].points[1].mean < curves[1].points[1].mean);
}

TEST_CASE("nested feature sets: superset at n=5000 is no worse than the subset + 0.02") {
    std::vector<double> mu{0.7, 0.5, 0.3, 0.2};
    GaussianMixtureSpec spec(mu, Matrix::identity(4), 0.5);
    const Dataset train = sample_mixture_stratified(spec, 2'500, 301);
    const Dataset test = sample_mixture_stratified(spec, 4'000, 302);

    const FeatureSet subset{"half", {0, 1}};
    const FeatureSet superset{"full", {0, 1, 2, 3}};
    const std::vector<std::size_t> sizes{5000};
    const std::vector<FeatureSet> sets{subset, superset};
    const auto curves = feature_set_comparison(train, test, fast_logit(1e-4), sets, sizes, 3, 303);
    CHECK(curves[1].points[0].mean <= curves[0].points[0].mean + 0.02);
}

TEST_CASE("curves are reproducible including dispersion fields") {
    GaussianMixtureSpec spec({0.8, 0.0}, Matrix::identity(2), 0.5);
    const Dataset train = sample_mixture_stratified(spec, 300, 401);
    const Dataset test = sample_mixture_stratified(spec, 400, 402);
    const std::vector<std::size_t> sizes{60, 300};

    const DiagnosticCurve a = learning_curve(train, test, fast_forest(25), sizes, 3, 403);
    const DiagnosticCurve b = learning_curve(train, test, fast_forest(25), sizes, 3, 403);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i].mean == b.points[i].mean);
        CHECK(a.points[i].sd == b.points[i].sd);
    }
}

TEST_CASE("default size grids honor feasibility") {
    GaussianMixtureSpec spec({0.5, 0.0}, Matrix::identity(2), 0.5);
    const Dataset train = sample_mixture_stratified(spec, 500, 501); // n = 1000
    const auto grid = default_size_grid(train);
    REQUIRE(!grid.empty());
    CHECK(grid.back() == 1000);
    for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
    CHECK(grid.front() >= 28);

    const auto small = small_sample_grid(train);
    CHECK(small == std::vector<std::size_t>{28, 56, 84, 112, 140});
}
