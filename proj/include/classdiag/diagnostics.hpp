#pragma once

#include "classdiag/classifiers.hpp"
#include "classdiag/dataset.hpp"
#include "classdiag/numstats.hpp"
#include "classdiag/rng.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace classdiag {

/// C x C counts, rows = true class, columns = predicted class.
struct ConfusionMatrix {
    std::size_t n_classes = 0;
    std::vector<std::int64_t> counts; // row-major, counts[i*C + j]
    std::vector<std::string> class_names;

    std::int64_t at(std::size_t true_class, std::size_t predicted) const {
        return counts[true_class * n_classes + predicted];
    }
    std::int64_t total() const;
    std::int64_t row_sum(std::size_t i) const;
    std::int64_t col_sum(std::size_t j) const;
};

ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> predicted,
                                 std::size_t n_classes, std::vector<std::string> class_names = {});

/// 1 - trace/total. Throws empty_evaluation on a zero-count matrix.
double error_rate(const ConfusionMatrix& cm);

struct ClassRates {
    double producer_error = 0.0; // off-diagonal share of the class's row
    double user_error = 0.0;     // off-diagonal share of the class's column
};

std::vector<ClassRates> per_class_rates(const ConfusionMatrix& cm);

/// Cohen's kappa (p_o - p_e)/(1 - p_e); p_e = 1 is undefined_kappa.
double kappa(const ConfusionMatrix& cm);

struct CurvePoint {
    double control = 0.0;
    double mean = 0.0;
    double sd = 0.0; // sample sd over repeats; meaningful only when repeats >= 2
    std::size_t repeats = 1;
};

struct DiagnosticCurve {
    std::string control_name; // sample_size | epsilon | ratio
    std::string metric_name;
    std::string series; // classifier kind or feature-set name
    std::vector<CurvePoint> points;
};

/// Seed plumbing shared by every sweep: grid point i, repeat r works from
/// curve_point_seed(master, i, r); within that, stream 0 feeds the dataset
/// operation and stream 1 the classifier. Exposed so baselines in tests
/// can reproduce single points exactly.
inline std::uint64_t curve_point_seed(std::uint64_t master, std::size_t point, std::size_t repeat) {
    return derive_seed(master, {point, repeat});
}
inline std::uint64_t curve_data_seed(std::uint64_t point_seed) {
    return derive_seed(point_seed, {0});
}
inline std::uint64_t curve_train_seed(std::uint64_t point_seed) {
    return derive_seed(point_seed, {1});
}

/// Test error vs training size: per size and repeat, a fresh proportional
/// stratified subsample is fit and evaluated on the fixed clean test set.
DiagnosticCurve learning_curve(const Dataset& train, const Dataset& test,
                               const ClassifierSpec& spec, std::span<const std::size_t> sizes,
                               std::size_t repeats, std::uint64_t seed);

/// Contaminate exactly round(epsilon*n) rows, each flipped uniformly to a
/// different label; features are untouched.
Dataset inject_label_noise(const Dataset& d, double epsilon, std::uint64_t seed);

/// The contamination grid used when none is given.
std::vector<double> default_noise_grid();

/// Test error vs label-flip proportion, evaluated on the clean test set.
DiagnosticCurve noise_curve(const Dataset& train, const Dataset& test, const ClassifierSpec& spec,
                            std::span<const double> epsilons, std::size_t repeats,
                            std::uint64_t seed);

struct DownsampleSweep {
    DiagnosticCurve error;            // overall test error
    DiagnosticCurve involving_target; // misclassified rows whose true or predicted class is the target
};

DownsampleSweep downsample_sweep(const Dataset& train, const Dataset& test,
                                 const ClassifierSpec& spec, int target_class,
                                 std::span<const double> ratios, std::size_t repeats,
                                 std::uint64_t seed);

struct PairSeparation {
    std::pair<int, int> pair;
    std::string feature_set;
    SeparationResult result;
};

struct PairwiseSeparationReport {
    std::vector<PairSeparation> entries; // pair-major, feature sets in given order
    struct PairSummary {
        std::pair<int, int> pair;
        std::string min_set; // weakest feature set for this pair
        double min_d = 0.0;
    };
    std::vector<PairSummary> per_pair_min;
    bool any_ridge = false;
};

/// Separation grid over all C(C-1)/2 class pairs x feature sets.
PairwiseSeparationReport pairwise_separation_report(const Dataset& d,
                                                    std::span<const FeatureSet> sets);

/// One learning curve per feature set on a shared size grid with shared
/// derived seeds (paired comparison).
std::vector<DiagnosticCurve> feature_set_comparison(const Dataset& train, const Dataset& test,
                                                    const ClassifierSpec& spec,
                                                    std::span<const FeatureSet> sets,
                                                    std::span<const std::size_t> sizes,
                                                    std::size_t repeats, std::uint64_t seed);

/// Geometric default grid {28, 56, 112, ...} intersected with feasible
/// sizes, always ending at n.
std::vector<std::size_t> default_size_grid(const Dataset& train);

/// The small-sample preset: 28..140 step 28, clipped to feasible sizes.
std::vector<std::size_t> small_sample_grid(const Dataset& train);

} // namespace classdiag
