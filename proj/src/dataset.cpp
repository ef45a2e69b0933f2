#include "classdiag/dataset.hpp"

#include "classdiag/errors.hpp"
#include "classdiag/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace classdiag {

void validate_feature_set(const FeatureSet& f, std::size_t n_features) {
    if (f.columns.empty()) {
        throw ConfigError(ErrorKind::invalid_feature_set,
                          "feature set '" + f.name + "' is empty");
    }
    std::unordered_set<std::size_t> seen;
    for (std::size_t c : f.columns) {
        if (c >= n_features) {
            throw ConfigError(ErrorKind::invalid_feature_set,
                              "feature set '" + f.name + "': column " + std::to_string(c) +
                                  " out of range (p=" + std::to_string(n_features) + ")");
        }
        if (!seen.insert(c).second) {
            throw ConfigError(ErrorKind::invalid_feature_set,
                              "feature set '" + f.name + "': duplicate column " + std::to_string(c));
        }
    }
}

FeatureSet compose(const FeatureSet& f1, const FeatureSet& f2) {
    FeatureSet out;
    out.name = f1.name + "/" + f2.name;
    out.columns.reserve(f2.columns.size());
    for (std::size_t c : f2.columns) {
        if (c >= f1.columns.size()) {
            throw ConfigError(ErrorKind::invalid_feature_set,
                              "compose: column " + std::to_string(c) + " outside inner set");
        }
        out.columns.push_back(f1.columns[c]);
    }
    return out;
}

namespace {

void require_unique(const std::vector<std::string>& names, const char* what) {
    std::unordered_set<std::string> seen;
    for (const auto& n : names) {
        if (!seen.insert(n).second) {
            throw DataError(ErrorKind::schema, std::string(what) + " name '" + n + "' duplicated");
        }
    }
}

} // namespace

Dataset::Dataset(Matrix features, std::vector<int> labels,
                 std::vector<std::string> feature_names, std::vector<std::string> class_names)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      feature_names_(std::move(feature_names)),
      class_names_(std::move(class_names)) {
    const std::size_t n = features_.rows();
    const std::size_t p = features_.cols();
    if (n == 0 || p == 0) {
        throw DataError(ErrorKind::schema, "dataset must have at least one row and one feature");
    }
    if (labels_.size() != n) {
        throw ConfigError(ErrorKind::shape, "label vector length does not match row count");
    }
    if (feature_names_.size() != p) {
        throw ConfigError(ErrorKind::shape, "feature name registry length does not match p");
    }
    if (class_names_.size() < 2) {
        throw DataError(ErrorKind::schema, "class registry must list at least two classes");
    }
    require_unique(feature_names_, "feature");
    require_unique(class_names_, "class");
    const int c = static_cast<int>(class_names_.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (labels_[i] < 0 || labels_[i] >= c) {
            throw DataError(ErrorKind::schema,
                            "label " + std::to_string(labels_[i]) + " at row " + std::to_string(i) +
                                " outside 0.." + std::to_string(c - 1));
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            if (!std::isfinite(features_(i, j))) {
                throw DataError(ErrorKind::parse, "non-finite feature value at row " +
                                                      std::to_string(i) + ", column " +
                                                      std::to_string(j));
            }
        }
    }
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(n_classes(), 0);
    for (int y : labels_) counts[static_cast<std::size_t>(y)]++;
    return counts;
}

std::vector<std::size_t> Dataset::rows_of_class(int class_id) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] == class_id) rows.push_back(i);
    }
    return rows;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Matrix m(rows.size(), n_features());
    std::vector<int> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t r = rows[i];
        std::copy(row(r).begin(), row(r).end(), m.row(i).begin());
        labels[i] = labels_[r];
    }
    return Dataset(std::move(m), std::move(labels), feature_names_, class_names_);
}

std::size_t Dataset::column_index(const std::string& feature_name) const {
    for (std::size_t j = 0; j < feature_names_.size(); ++j) {
        if (feature_names_[j] == feature_name) return j;
    }
    throw DataError(ErrorKind::schema, "unknown feature column '" + feature_name + "'");
}

int Dataset::class_id(const std::string& class_name) const {
    for (std::size_t c = 0; c < class_names_.size(); ++c) {
        if (class_names_[c] == class_name) return static_cast<int>(c);
    }
    throw DataError(ErrorKind::schema, "unknown class '" + class_name + "'");
}

FeatureSet Dataset::all_features(std::string name) const {
    FeatureSet f;
    f.name = std::move(name);
    f.columns.resize(n_features());
    std::iota(f.columns.begin(), f.columns.end(), std::size_t{0});
    return f;
}

Dataset select_features(const Dataset& d, const FeatureSet& f) {
    validate_feature_set(f, d.n_features());
    Matrix m(d.n_rows(), f.columns.size());
    std::vector<std::string> names(f.columns.size());
    for (std::size_t jj = 0; jj < f.columns.size(); ++jj) {
        names[jj] = d.feature_names()[f.columns[jj]];
        for (std::size_t i = 0; i < d.n_rows(); ++i) m(i, jj) = d.feature(i, f.columns[jj]);
    }
    return Dataset(std::move(m), d.labels(), std::move(names), d.class_names());
}

namespace {

// Integer largest-remainder: quota_c = n_target*count_c/n, floors first,
// leftovers to the largest remainders (ties to the lower class id).
std::vector<std::size_t> largest_remainder(std::span<const std::size_t> class_counts,
                                           std::size_t n_target) {
    const std::size_t n = std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
    if (n_target == 0 || n_target > n) {
        throw DataError(ErrorKind::infeasible_subsample,
                        "subsample size " + std::to_string(n_target) + " infeasible for n=" +
                            std::to_string(n));
    }
    const std::size_t c = class_counts.size();
    std::vector<std::size_t> alloc(c);
    std::vector<std::pair<std::size_t, std::size_t>> remainders(c); // (remainder, class)
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < c; ++k) {
        const std::size_t num = n_target * class_counts[k];
        alloc[k] = num / n;
        remainders[k] = {num % n, k};
        assigned += alloc[k];
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t r = 0; r < n_target - assigned; ++r) alloc[remainders[r].second]++;
    return alloc;
}

} // namespace

std::vector<std::size_t> proportional_allocation(std::span<const std::size_t> class_counts,
                                                 std::size_t n_target) {
    auto alloc = largest_remainder(class_counts, n_target);
    for (std::size_t k = 0; k < class_counts.size(); ++k) {
        if (class_counts[k] > 0 && alloc[k] == 0) {
            throw DataError(ErrorKind::infeasible_subsample,
                            "subsample size " + std::to_string(n_target) +
                                " would empty class " + std::to_string(k));
        }
        if (alloc[k] > class_counts[k]) {
            throw DataError(ErrorKind::infeasible_subsample,
                            "allocation exceeds available rows in class " + std::to_string(k));
        }
    }
    return alloc;
}

namespace {

/// Per-class sampling without replacement; kept rows returned in original
/// dataset order. Class c draws from its own derived stream so feasible
/// changes to one class never shift another class's picks.
Dataset take_per_class(const Dataset& d, std::span<const std::size_t> take, std::uint64_t seed) {
    std::vector<std::size_t> kept;
    for (std::size_t c = 0; c < take.size(); ++c) {
        const auto rows = d.rows_of_class(static_cast<int>(c));
        if (take[c] > rows.size()) {
            throw DataError(ErrorKind::infeasible_subsample,
                            "requested " + std::to_string(take[c]) + " rows from class " +
                                std::to_string(c) + " holding " + std::to_string(rows.size()));
        }
        if (take[c] == rows.size()) {
            kept.insert(kept.end(), rows.begin(), rows.end());
            continue;
        }
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(c)}));
        const auto picks = sample_without_replacement(rng, rows.size(), take[c]);
        for (std::size_t p : picks) kept.push_back(rows[p]);
    }
    std::sort(kept.begin(), kept.end());
    return d.subset(kept);
}

} // namespace

Dataset stratified_subsample(const Dataset& d, std::size_t n_target, std::uint64_t seed) {
    const auto counts = d.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) {
            throw DataError(ErrorKind::infeasible_subsample,
                            "class " + std::to_string(c) + " has no rows to sample from");
        }
    }
    const auto alloc = proportional_allocation(counts, n_target);
    return take_per_class(d, alloc, seed);
}

Dataset stratified_subsample(const Dataset& d, std::span<const std::size_t> per_class_counts,
                             std::uint64_t seed) {
    if (per_class_counts.size() != d.n_classes()) {
        throw ConfigError(ErrorKind::shape, "per-class count vector length must equal C");
    }
    std::size_t total = 0;
    for (std::size_t c = 0; c < per_class_counts.size(); ++c) {
        if (per_class_counts[c] == 0) {
            throw DataError(ErrorKind::infeasible_subsample,
                            "per-class subsample would empty class " + std::to_string(c));
        }
        total += per_class_counts[c];
    }
    if (total == 0) {
        throw DataError(ErrorKind::infeasible_subsample, "empty subsample requested");
    }
    return take_per_class(d, per_class_counts, seed);
}

Split stratified_split(const Dataset& d, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0) || !(test_fraction < 1.0)) {
        throw ConfigError(ErrorKind::invalid_argument, "test_fraction must lie in (0, 1)");
    }
    const auto counts = d.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] < 2) {
            throw DataError(ErrorKind::infeasible_subsample,
                            "stratified_split needs >= 2 rows per class; class " +
                                std::to_string(c) + " has " + std::to_string(counts[c]));
        }
    }
    const std::size_t n = d.n_rows();
    const std::size_t test_target =
        std::clamp<std::size_t>(round_half_up(test_fraction * static_cast<double>(n)), 1, n - 1);
    auto test_alloc = largest_remainder(counts, test_target);
    // Both sides must keep every class populated: clamp to [1, count-1] and
    // repair the total deterministically (lowest class id first).
    for (std::size_t c = 0; c < counts.size(); ++c) {
        test_alloc[c] = std::clamp<std::size_t>(test_alloc[c], 1, counts[c] - 1);
    }
    std::size_t total = std::accumulate(test_alloc.begin(), test_alloc.end(), std::size_t{0});
    while (total > test_target) {
        bool moved = false;
        for (std::size_t c = 0; c < counts.size() && total > test_target; ++c) {
            if (test_alloc[c] > 1) {
                test_alloc[c]--;
                total--;
                moved = true;
            }
        }
        if (!moved) break;
    }
    while (total < test_target) {
        bool moved = false;
        for (std::size_t c = 0; c < counts.size() && total < test_target; ++c) {
            if (test_alloc[c] < counts[c] - 1) {
                test_alloc[c]++;
                total++;
                moved = true;
            }
        }
        if (!moved) break;
    }

    // Draw the test rows per class; the complement becomes the train side.
    std::vector<char> in_test(n, 0);
    for (std::size_t c = 0; c < counts.size(); ++c) {
        const auto rows = d.rows_of_class(static_cast<int>(c));
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(c)}));
        const auto picks = sample_without_replacement(rng, rows.size(), test_alloc[c]);
        for (std::size_t p : picks) in_test[rows[p]] = 1;
    }
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < n; ++i) (in_test[i] ? test_rows : train_rows).push_back(i);
    return Split{d.subset(train_rows), d.subset(test_rows)};
}

Dataset downsample_class(const Dataset& d, int target_class, double ratio, std::uint64_t seed) {
    if (target_class < 0 || static_cast<std::size_t>(target_class) >= d.n_classes()) {
        throw ConfigError(ErrorKind::invalid_argument, "target class id out of range");
    }
    if (!(ratio > 0.0) || ratio > 1.0) {
        throw ConfigError(ErrorKind::invalid_argument, "downsample ratio must lie in (0, 1]");
    }
    const auto target_rows = d.rows_of_class(target_class);
    const std::size_t keep = round_half_up(ratio * static_cast<double>(target_rows.size()));
    if (keep == 0) {
        throw DataError(ErrorKind::infeasible_subsample,
                        "ratio " + std::to_string(ratio) + " would empty class " +
                            std::to_string(target_class));
    }
    if (keep >= target_rows.size()) return d.subset([&] {
        std::vector<std::size_t> all(d.n_rows());
        std::iota(all.begin(), all.end(), std::size_t{0});
        return all;
    }());

    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(target_class)}));
    auto picks = sample_without_replacement(rng, target_rows.size(), keep);
    std::vector<char> drop(d.n_rows(), 0);
    std::vector<char> kept_in_class(target_rows.size(), 0);
    for (std::size_t p : picks) kept_in_class[p] = 1;
    for (std::size_t p = 0; p < target_rows.size(); ++p) {
        if (!kept_in_class[p]) drop[target_rows[p]] = 1;
    }
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        if (!drop[i]) kept.push_back(i);
    }
    return d.subset(kept);
}

} // namespace classdiag
