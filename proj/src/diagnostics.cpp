#include "classdiag/diagnostics.hpp"

#include "classdiag/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace classdiag {

std::int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::row_sum(std::size_t i) const {
    std::int64_t acc = 0;
    for (std::size_t j = 0; j < n_classes; ++j) acc += at(i, j);
    return acc;
}

std::int64_t ConfusionMatrix::col_sum(std::size_t j) const {
    std::int64_t acc = 0;
    for (std::size_t i = 0; i < n_classes; ++i) acc += at(i, j);
    return acc;
}

ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> predicted,
                                 std::size_t n_classes, std::vector<std::string> class_names) {
    if (truth.size() != predicted.size()) {
        throw ConfigError(ErrorKind::shape, "confusion_matrix: label vectors differ in length");
    }
    if (truth.empty()) {
        throw DataError(ErrorKind::empty_evaluation, "confusion_matrix: no instances");
    }
    ConfusionMatrix cm;
    cm.n_classes = n_classes;
    cm.counts.assign(n_classes * n_classes, 0);
    if (class_names.empty()) {
        for (std::size_t c = 0; c < n_classes; ++c) class_names.push_back("class" + std::to_string(c));
    }
    if (class_names.size() != n_classes) {
        throw ConfigError(ErrorKind::shape, "confusion_matrix: class name registry length mismatch");
    }
    cm.class_names = std::move(class_names);
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const int t = truth[k];
        const int p = predicted[k];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= n_classes ||
            static_cast<std::size_t>(p) >= n_classes) {
            throw DataError(ErrorKind::schema, "confusion_matrix: label outside 0..C-1 at index " +
                                                   std::to_string(k));
        }
        cm.counts[static_cast<std::size_t>(t) * n_classes + static_cast<std::size_t>(p)]++;
    }
    return cm;
}

double error_rate(const ConfusionMatrix& cm) {
    const std::int64_t total = cm.total();
    if (total == 0) {
        throw DataError(ErrorKind::empty_evaluation, "error_rate: empty confusion matrix");
    }
    std::int64_t diag = 0;
    for (std::size_t i = 0; i < cm.n_classes; ++i) diag += cm.at(i, i);
    return 1.0 - static_cast<double>(diag) / static_cast<double>(total);
}

std::vector<ClassRates> per_class_rates(const ConfusionMatrix& cm) {
    if (cm.total() == 0) {
        throw DataError(ErrorKind::empty_evaluation, "per_class_rates: empty confusion matrix");
    }
    std::vector<ClassRates> rates(cm.n_classes);
    for (std::size_t c = 0; c < cm.n_classes; ++c) {
        const std::int64_t row = cm.row_sum(c);
        const std::int64_t col = cm.col_sum(c);
        const std::int64_t diag = cm.at(c, c);
        rates[c].producer_error =
            row > 0 ? static_cast<double>(row - diag) / static_cast<double>(row) : 0.0;
        rates[c].user_error =
            col > 0 ? static_cast<double>(col - diag) / static_cast<double>(col) : 0.0;
    }
    return rates;
}

double kappa(const ConfusionMatrix& cm) {
    const std::int64_t total = cm.total();
    if (total == 0) {
        throw DataError(ErrorKind::empty_evaluation, "kappa: empty confusion matrix");
    }
    std::int64_t diag = 0;
    double chance = 0.0;
    const double t = static_cast<double>(total);
    for (std::size_t c = 0; c < cm.n_classes; ++c) {
        diag += cm.at(c, c);
        chance += (static_cast<double>(cm.row_sum(c)) / t) *
                  (static_cast<double>(cm.col_sum(c)) / t);
    }
    const double observed = static_cast<double>(diag) / t;
    if (chance >= 1.0) {
        throw NumericError(ErrorKind::undefined_kappa,
                           "kappa undefined: chance agreement is 1 (all mass in one cell)");
    }
    return (observed - chance) / (1.0 - chance);
}

namespace {

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

MeanSd mean_sd(std::span<const double> values) {
    MeanSd out;
    const double n = static_cast<double>(values.size());
    for (double v : values) out.mean += v;
    out.mean /= n;
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.sd = std::sqrt(ss / (n - 1.0));
    }
    return out;
}

void require_increasing(std::span<const double> xs, const char* what) {
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (!(xs[i] > xs[i - 1])) {
            throw ConfigError(ErrorKind::invalid_argument,
                              std::string(what) + " grid must be strictly increasing");
        }
    }
}

} // namespace

DiagnosticCurve learning_curve(const Dataset& train, const Dataset& test,
                               const ClassifierSpec& spec, std::span<const std::size_t> sizes,
                               std::size_t repeats, std::uint64_t seed) {
    if (sizes.empty() || repeats == 0) {
        throw ConfigError(ErrorKind::invalid_argument, "learning_curve needs sizes and repeats >= 1");
    }
    for (std::size_t i = 1; i < sizes.size(); ++i) {
        if (sizes[i] <= sizes[i - 1]) {
            throw ConfigError(ErrorKind::invalid_argument, "size grid must be strictly increasing");
        }
    }

    DiagnosticCurve curve;
    curve.control_name = "sample_size";
    curve.metric_name = "test_error";
    curve.series = to_string(spec.kind);
    curve.points.resize(sizes.size());
    std::vector<std::vector<double>> errors(sizes.size(), std::vector<double>(repeats));
    for (std::size_t si = 0; si < sizes.size(); ++si) {
        for (std::size_t rep = 0; rep < repeats; ++rep) {
            const std::uint64_t ps = curve_point_seed(seed, si, rep);
            Dataset sub = [&] {
                try {
                    return stratified_subsample(train, sizes[si], curve_data_seed(ps));
                } catch (const DataError& e) {
                    throw DataError(ErrorKind::infeasible_subsample,
                                    "learning_curve size " + std::to_string(sizes[si]) + ": " +
                                        e.what());
                }
            }();
            const TrainedModel model = train_classifier(sub, spec, curve_train_seed(ps));
            errors[si][rep] = holdout_error(model, test);
        }
        const MeanSd ms = mean_sd(errors[si]);
        curve.points[si] = {static_cast<double>(sizes[si]), ms.mean, ms.sd, repeats};
    }
    return curve;
}

Dataset inject_label_noise(const Dataset& d, double epsilon, std::uint64_t seed) {
    if (!(epsilon >= 0.0) || !(epsilon <= 1.0)) {
        throw ConfigError(ErrorKind::invalid_argument, "epsilon must lie in [0, 1]");
    }
    const std::size_t n = d.n_rows();
    const std::size_t c = d.n_classes();
    const std::size_t flips = round_half_up(epsilon * static_cast<double>(n));

    std::vector<int> labels = d.labels();
    if (flips > 0) {
        Rng rng(seed);
        const auto rows = sample_without_replacement(rng, n, flips);
        for (std::size_t r : rows) {
            // Uniform over the other C-1 labels.
            const std::uint64_t draw = rng.next_below(c - 1);
            const int offset = static_cast<int>(draw);
            labels[r] = offset >= labels[r] ? offset + 1 : offset;
        }
    }
    return Dataset(d.features(), std::move(labels), d.feature_names(), d.class_names());
}

std::vector<double> default_noise_grid() {
    return {0.01, 0.02, 0.03, 0.04, 0.05, 0.10};
}

DiagnosticCurve noise_curve(const Dataset& train, const Dataset& test, const ClassifierSpec& spec,
                            std::span<const double> epsilons, std::size_t repeats,
                            std::uint64_t seed) {
    std::vector<double> grid(epsilons.begin(), epsilons.end());
    if (grid.empty()) grid = default_noise_grid();
    require_increasing(grid, "epsilon");
    if (grid.front() < 0.0 || grid.back() > 1.0) {
        throw ConfigError(ErrorKind::invalid_argument, "epsilons must lie in [0, 1]");
    }
    if (repeats == 0) {
        throw ConfigError(ErrorKind::invalid_argument, "repeats must be >= 1");
    }

    DiagnosticCurve curve;
    curve.control_name = "epsilon";
    curve.metric_name = "test_error";
    curve.series = to_string(spec.kind);
    curve.points.resize(grid.size());
    std::vector<double> errors(repeats);
    for (std::size_t ei = 0; ei < grid.size(); ++ei) {
        for (std::size_t rep = 0; rep < repeats; ++rep) {
            const std::uint64_t ps = curve_point_seed(seed, ei, rep);
            const Dataset noisy = inject_label_noise(train, grid[ei], curve_data_seed(ps));
            const TrainedModel model = train_classifier(noisy, spec, curve_train_seed(ps));
            errors[rep] = holdout_error(model, test);
        }
        const MeanSd ms = mean_sd(errors);
        curve.points[ei] = {grid[ei], ms.mean, ms.sd, repeats};
    }
    return curve;
}

DownsampleSweep downsample_sweep(const Dataset& train, const Dataset& test,
                                 const ClassifierSpec& spec, int target_class,
                                 std::span<const double> ratios, std::size_t repeats,
                                 std::uint64_t seed) {
    if (ratios.empty() || repeats == 0) {
        throw ConfigError(ErrorKind::invalid_argument, "downsample_sweep needs ratios and repeats");
    }
    require_increasing(ratios, "ratio");
    if (!(ratios.front() > 0.0) || ratios.back() > 1.0) {
        throw ConfigError(ErrorKind::invalid_argument, "ratios must lie in (0, 1]");
    }

    DownsampleSweep sweep;
    sweep.error.control_name = sweep.involving_target.control_name = "ratio";
    sweep.error.metric_name = "test_error";
    sweep.involving_target.metric_name = "misclassified_involving_target";
    sweep.error.series = sweep.involving_target.series = to_string(spec.kind);
    sweep.error.points.resize(ratios.size());
    sweep.involving_target.points.resize(ratios.size());

    std::vector<double> errors(repeats), involving(repeats);
    for (std::size_t ri = 0; ri < ratios.size(); ++ri) {
        for (std::size_t rep = 0; rep < repeats; ++rep) {
            const std::uint64_t ps = curve_point_seed(seed, ri, rep);
            const Dataset reduced =
                downsample_class(train, target_class, ratios[ri], curve_data_seed(ps));
            const TrainedModel model = train_classifier(reduced, spec, curve_train_seed(ps));
            const Predictions preds = predict(model, test.features());
            std::size_t wrong = 0, wrong_target = 0;
            for (std::size_t i = 0; i < test.n_rows(); ++i) {
                if (preds.labels[i] == test.label(i)) continue;
                wrong++;
                if (test.label(i) == target_class || preds.labels[i] == target_class) {
                    wrong_target++;
                }
            }
            errors[rep] = static_cast<double>(wrong) / static_cast<double>(test.n_rows());
            involving[rep] = static_cast<double>(wrong_target);
        }
        const MeanSd me = mean_sd(errors);
        const MeanSd mi = mean_sd(involving);
        sweep.error.points[ri] = {ratios[ri], me.mean, me.sd, repeats};
        sweep.involving_target.points[ri] = {ratios[ri], mi.mean, mi.sd, repeats};
    }
    return sweep;
}

PairwiseSeparationReport pairwise_separation_report(const Dataset& d,
                                                    std::span<const FeatureSet> sets) {
    if (d.n_classes() < 2) {
        throw ConfigError(ErrorKind::invalid_argument, "need at least two classes");
    }
    if (sets.empty()) {
        throw ConfigError(ErrorKind::invalid_argument, "need at least one feature set");
    }
    PairwiseSeparationReport report;
    const int c = static_cast<int>(d.n_classes());
    for (int a = 0; a < c; ++a) {
        for (int b = a + 1; b < c; ++b) {
            PairwiseSeparationReport::PairSummary summary;
            summary.pair = {a, b};
            bool first = true;
            for (const FeatureSet& f : sets) {
                PairSeparation entry;
                entry.pair = {a, b};
                entry.feature_set = f.name;
                entry.result = separation_from_data(d, {a, b}, f);
                if (entry.result.ridge_applied > 0.0) report.any_ridge = true;
                if (first || entry.result.d < summary.min_d) {
                    summary.min_d = entry.result.d;
                    summary.min_set = f.name;
                    first = false;
                }
                report.entries.push_back(std::move(entry));
            }
            report.per_pair_min.push_back(std::move(summary));
        }
    }
    return report;
}

std::vector<DiagnosticCurve> feature_set_comparison(const Dataset& train, const Dataset& test,
                                                    const ClassifierSpec& spec,
                                                    std::span<const FeatureSet> sets,
                                                    std::span<const std::size_t> sizes,
                                                    std::size_t repeats, std::uint64_t seed) {
    if (sets.empty()) {
        throw ConfigError(ErrorKind::invalid_argument, "need at least one feature set");
    }
    std::vector<DiagnosticCurve> curves;
    curves.reserve(sets.size());
    for (const FeatureSet& f : sets) {
        const Dataset train_f = select_features(train, f);
        const Dataset test_f = select_features(test, f);
        // Same master seed for every set: subsampling depends only on
        // labels, so all sets see identical training rows (paired design).
        DiagnosticCurve curve = learning_curve(train_f, test_f, spec, sizes, repeats, seed);
        curve.series = f.name;
        curves.push_back(std::move(curve));
    }
    return curves;
}

namespace {

bool subsample_feasible(const std::vector<std::size_t>& counts, std::size_t target) {
    try {
        proportional_allocation(counts, target);
        return true;
    } catch (const DataError&) {
        return false;
    }
}

} // namespace

std::vector<std::size_t> default_size_grid(const Dataset& train) {
    const auto counts = train.class_counts();
    const std::size_t n = train.n_rows();
    std::vector<std::size_t> grid;
    for (std::size_t s = 28; s < n; s *= 2) {
        if (subsample_feasible(counts, s)) grid.push_back(s);
    }
    grid.push_back(n);
    return grid;
}

std::vector<std::size_t> small_sample_grid(const Dataset& train) {
    const auto counts = train.class_counts();
    std::vector<std::size_t> grid;
    for (std::size_t s = 28; s <= 140; s += 28) {
        if (s <= train.n_rows() && subsample_feasible(counts, s)) grid.push_back(s);
    }
    if (grid.empty()) {
        throw DataError(ErrorKind::infeasible_subsample,
                        "no feasible size in the 28..140 small-sample range");
    }
    return grid;
}

} // namespace classdiag
