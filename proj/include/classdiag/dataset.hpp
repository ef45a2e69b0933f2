#pragma once

#include "classdiag/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace classdiag {

/// Ordered selection of feature columns. Column indices are validated
/// against a concrete dataset by the operations that consume the set.
struct FeatureSet {
    std::string name;
    std::vector<std::size_t> columns;
};

/// Throws ConfigError(invalid_feature_set) on empty sets, duplicates or
/// out-of-range columns.
void validate_feature_set(const FeatureSet& f, std::size_t n_features);

/// f2 applied after f1: columns picked from f1's output, expressed in the
/// original index space.
FeatureSet compose(const FeatureSet& f1, const FeatureSet& f2);

/// Immutable labeled sample: an n x p feature table, dense integer class
/// ids and the two name registries. Construction validates shape, label
/// range, finiteness and name uniqueness; every operation that produces a
/// new dataset re-enters through here.
class Dataset {
public:
    Dataset(Matrix features, std::vector<int> labels,
            std::vector<std::string> feature_names, std::vector<std::string> class_names);

    std::size_t n_rows() const noexcept { return features_.rows(); }
    std::size_t n_features() const noexcept { return features_.cols(); }
    std::size_t n_classes() const noexcept { return class_names_.size(); }

    const Matrix& features() const noexcept { return features_; }
    std::span<const double> row(std::size_t i) const { return features_.row(i); }
    double feature(std::size_t i, std::size_t j) const { return features_(i, j); }

    const std::vector<int>& labels() const noexcept { return labels_; }
    int label(std::size_t i) const { return labels_[i]; }

    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    const std::vector<std::string>& class_names() const noexcept { return class_names_; }

    /// Instances per class id.
    std::vector<std::size_t> class_counts() const;

    /// Row indices of one class, in dataset order.
    std::vector<std::size_t> rows_of_class(int class_id) const;

    /// New dataset from the given rows (registries preserved, order as given).
    Dataset subset(std::span<const std::size_t> rows) const;

    /// Column lookup by name; throws DataError(schema) when missing.
    std::size_t column_index(const std::string& feature_name) const;
    int class_id(const std::string& class_name) const;

    /// The trivial feature set selecting every column in order.
    FeatureSet all_features(std::string name = "all") const;

private:
    Matrix features_;
    std::vector<int> labels_;
    std::vector<std::string> feature_names_;
    std::vector<std::string> class_names_;
};

Dataset select_features(const Dataset& d, const FeatureSet& f);

enum class SubsampleMode { proportional };

/// Stratified sample without replacement, n_target rows total, per-class
/// quotas by largest-remainder rounding. Row order of the original dataset
/// is preserved. Identical seed => identical output.
Dataset stratified_subsample(const Dataset& d, std::size_t n_target, std::uint64_t seed);

/// Per-class-count variant: counts[c] rows kept from class c.
Dataset stratified_subsample(const Dataset& d, std::span<const std::size_t> per_class_counts,
                             std::uint64_t seed);

/// Largest-remainder allocation of n_target over the class counts.
/// Exposed for feasibility checks (grid construction) and tests.
std::vector<std::size_t> proportional_allocation(std::span<const std::size_t> class_counts,
                                                 std::size_t n_target);

struct Split {
    Dataset train;
    Dataset test;
};

/// Disjoint, exhaustive stratified split; every class contributes at least
/// one row to each side.
Split stratified_split(const Dataset& d, double test_fraction, std::uint64_t seed);

/// Keep round(ratio * count) rows of target_class, everything else intact.
Dataset downsample_class(const Dataset& d, int target_class, double ratio, std::uint64_t seed);

/// Half-up rounding used by every count-from-ratio rule in the library.
inline std::size_t round_half_up(double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

} // namespace classdiag
