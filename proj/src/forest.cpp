#include "classdiag/classifiers.hpp"

#include "classdiag/errors.hpp"
#include "classdiag/rng.hpp"
#include "classdiag/threading.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace classdiag {

int DecisionTree::predict(std::span<const double> row) const {
    std::int32_t node = 0;
    while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const TreeNode& n = nodes[static_cast<std::size_t>(node)];
        node = row[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(node)].leaf_class;
}

int DecisionTree::predict_override(std::span<const double> row, std::size_t feature,
                                   double value) const {
    std::int32_t node = 0;
    while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const TreeNode& n = nodes[static_cast<std::size_t>(node)];
        const std::size_t f = static_cast<std::size_t>(n.feature);
        const double x = f == feature ? value : row[f];
        node = x < n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(node)].leaf_class;
}

namespace {

struct SplitChoice {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double impurity = 0.0;
};

double gini(std::span<const std::size_t> counts, double total) {
    double acc = 0.0;
    for (std::size_t c : counts) {
        const double f = static_cast<double>(c) / total;
        acc += f * f;
    }
    return 1.0 - acc;
}

int majority_class(std::span<const std::size_t> counts) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < counts.size(); ++c) {
        if (counts[c] > counts[best]) best = c; // ties keep the lower id
    }
    return static_cast<int>(best);
}

class TreeBuilder {
public:
    TreeBuilder(const Dataset& d, const RandomForestParams& params, std::size_t mtry,
                Rng& rng)
        : d_(d), params_(params), mtry_(mtry), rng_(rng),
          n_classes_(d.n_classes()) {}

    DecisionTree build(std::vector<std::uint32_t> bag) {
        tree_.nodes.clear();
        grow(std::move(bag));
        return std::move(tree_);
    }

private:
    std::int32_t grow(std::vector<std::uint32_t> rows) {
        std::vector<std::size_t> counts(n_classes_, 0);
        for (std::uint32_t r : rows) counts[static_cast<std::size_t>(d_.label(r))]++;
        const std::size_t populated =
            static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(),
                                                   [](std::size_t c) { return c > 0; }));

        const std::int32_t id = static_cast<std::int32_t>(tree_.nodes.size());
        tree_.nodes.emplace_back();

        if (populated <= 1 || rows.size() <= params_.min_leaf) {
            tree_.nodes[static_cast<std::size_t>(id)].leaf_class = majority_class(counts);
            return id;
        }

        const SplitChoice split = best_split(rows, counts);
        if (!split.found) {
            tree_.nodes[static_cast<std::size_t>(id)].leaf_class = majority_class(counts);
            return id;
        }

        std::vector<std::uint32_t> left, right;
        left.reserve(rows.size());
        right.reserve(rows.size());
        for (std::uint32_t r : rows) {
            (d_.feature(r, split.feature) < split.threshold ? left : right).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();

        tree_.nodes[static_cast<std::size_t>(id)].feature = static_cast<std::int32_t>(split.feature);
        tree_.nodes[static_cast<std::size_t>(id)].threshold = split.threshold;
        const std::int32_t left_id = grow(std::move(left));
        tree_.nodes[static_cast<std::size_t>(id)].left = left_id;
        const std::int32_t right_id = grow(std::move(right));
        tree_.nodes[static_cast<std::size_t>(id)].right = right_id;
        return id;
    }

    SplitChoice best_split(const std::vector<std::uint32_t>& rows,
                           const std::vector<std::size_t>& counts) {
        // mtry draws with replacement, collapsed to the distinct feature
        // set, scanned in ascending order for deterministic tie-breaking.
        std::set<std::size_t> candidates;
        for (std::size_t k = 0; k < mtry_; ++k) {
            candidates.insert(static_cast<std::size_t>(rng_.next_below(d_.n_features())));
        }

        SplitChoice best;
        const double total = static_cast<double>(rows.size());
        std::vector<std::pair<double, int>> values(rows.size());
        std::vector<std::size_t> left_counts(n_classes_);

        for (std::size_t f : candidates) {
            for (std::size_t i = 0; i < rows.size(); ++i) {
                values[i] = {d_.feature(rows[i], f), d_.label(rows[i])};
            }
            std::sort(values.begin(), values.end());
            if (values.front().first == values.back().first) continue; // constant on this node

            std::fill(left_counts.begin(), left_counts.end(), 0);
            for (std::size_t i = 0; i + 1 < values.size(); ++i) {
                left_counts[static_cast<std::size_t>(values[i].second)]++;
                if (values[i].first == values[i + 1].first) continue;
                const double threshold = values[i].first +
                                         0.5 * (values[i + 1].first - values[i].first);
                // Degenerate midpoints (adjacent representable values) would
                // create an empty side; skip the boundary.
                if (!(values[i].first < threshold) || !(threshold <= values[i + 1].first)) continue;
                const double n_left = static_cast<double>(i + 1);
                const double n_right = total - n_left;
                double right_gini = 0.0;
                {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < n_classes_; ++c) {
                        const double cnt = static_cast<double>(counts[c] - left_counts[c]);
                        acc += (cnt / n_right) * (cnt / n_right);
                    }
                    right_gini = 1.0 - acc;
                }
                const double impurity =
                    (n_left / total) * gini(left_counts, n_left) + (n_right / total) * right_gini;
                const bool better =
                    !best.found || impurity < best.impurity ||
                    (impurity == best.impurity &&
                     (f < best.feature || (f == best.feature && threshold < best.threshold)));
                if (better) {
                    best.found = true;
                    best.feature = f;
                    best.threshold = threshold;
                    best.impurity = impurity;
                }
            }
        }
        return best;
    }

    const Dataset& d_;
    const RandomForestParams& params_;
    std::size_t mtry_;
    Rng& rng_;
    std::size_t n_classes_;
    DecisionTree tree_;
};

} // namespace

ForestModel train_random_forest(const Dataset& d, const RandomForestParams& params,
                                std::uint64_t seed) {
    if (d.n_rows() < 2) {
        throw DataError(ErrorKind::insufficient_sample, "random forest needs at least 2 rows");
    }
    if (params.n_trees == 0) {
        throw ConfigError(ErrorKind::invalid_argument, "n_trees must be >= 1");
    }
    const auto counts = d.class_counts();
    if (std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) < 2) {
        throw DataError(ErrorKind::degenerate_model,
                        "training data contains a single class; nothing to separate");
    }

    std::size_t mtry = params.mtry;
    if (mtry == 0) {
        mtry = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d.n_features()))));
        mtry = std::max<std::size_t>(mtry, 1);
    }
    if (mtry > d.n_features()) {
        throw ConfigError(ErrorKind::invalid_argument, "mtry exceeds the number of features");
    }

    ForestModel model;
    model.trees.resize(params.n_trees);
    model.oob_rows.resize(params.n_trees);
    model.n_features = d.n_features();
    model.trained_rows = d.n_rows();
    model.class_names = d.class_names();

    const std::size_t n = d.n_rows();
    parallel_for(params.n_trees, [&](std::size_t t) {
        Rng rng(derive_seed(seed, {t}));
        std::vector<std::uint32_t> bag(n);
        std::vector<char> in_bag(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t r = static_cast<std::uint32_t>(rng.next_below(n));
            bag[i] = r;
            in_bag[r] = 1;
        }
        for (std::uint32_t r = 0; r < n; ++r) {
            if (!in_bag[r]) model.oob_rows[t].push_back(r);
        }
        TreeBuilder builder(d, params, mtry, rng);
        model.trees[t] = builder.build(std::move(bag));
    });
    return model;
}

namespace {

int argmax_tie_lowest(std::span<const double> scores) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c) {
        if (scores[c] > scores[best]) best = c;
    }
    return static_cast<int>(best);
}

} // namespace

Predictions predict(const ForestModel& model, const Matrix& x) {
    if (x.cols() != model.n_features) {
        throw ConfigError(ErrorKind::shape, "prediction input has wrong feature count");
    }
    const std::size_t c = model.class_names.size();
    Predictions out;
    out.labels.resize(x.rows());
    out.scores = Matrix(x.rows(), c);
    parallel_for(x.rows(), [&](std::size_t i) {
        std::vector<double> votes(c, 0.0);
        for (const DecisionTree& tree : model.trees) {
            votes[static_cast<std::size_t>(tree.predict(x.row(i)))] += 1.0;
        }
        for (std::size_t k = 0; k < c; ++k) {
            out.scores(i, k) = votes[k] / static_cast<double>(model.trees.size());
        }
        out.labels[i] = argmax_tie_lowest(votes);
    });
    return out;
}

OobResult oob_error(const ForestModel& model, const Dataset& d) {
    if (d.n_rows() != model.trained_rows || d.n_features() != model.n_features) {
        throw ConfigError(ErrorKind::shape,
                          "oob_error expects the dataset the model was trained on");
    }
    const std::size_t n = d.n_rows();
    const std::size_t c = model.class_names.size();

    // Per-tree OOB predictions first (parallel), accumulated in tree order.
    std::vector<std::vector<int>> per_tree(model.trees.size());
    parallel_for(model.trees.size(), [&](std::size_t t) {
        const auto& rows = model.oob_rows[t];
        per_tree[t].resize(rows.size());
        for (std::size_t k = 0; k < rows.size(); ++k) {
            per_tree[t][k] = model.trees[t].predict(d.row(rows[k]));
        }
    });

    std::vector<std::uint32_t> votes(n * c, 0);
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        const auto& rows = model.oob_rows[t];
        for (std::size_t k = 0; k < rows.size(); ++k) {
            votes[rows[k] * c + static_cast<std::size_t>(per_tree[t][k])]++;
        }
    }

    OobResult out;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t* v = votes.data() + i * c;
        std::uint32_t total = 0;
        std::size_t best = 0;
        for (std::size_t k = 0; k < c; ++k) {
            total += v[k];
            if (v[k] > v[best]) best = k;
        }
        if (total == 0) {
            out.skipped++;
            continue;
        }
        out.evaluated++;
        if (static_cast<int>(best) != d.label(i)) wrong++;
    }
    if (out.evaluated == 0) {
        throw DataError(ErrorKind::oob_unavailable,
                        "no row is out-of-bag for any tree; increase n_trees or n");
    }
    out.error = static_cast<double>(wrong) / static_cast<double>(out.evaluated);
    return out;
}

ImportanceProfile permutation_importance(const ForestModel& model, const Dataset& d,
                                         std::size_t repeats, std::uint64_t seed) {
    if (repeats == 0) {
        throw ConfigError(ErrorKind::invalid_argument, "repeats must be >= 1");
    }
    if (d.n_rows() != model.trained_rows || d.n_features() != model.n_features) {
        throw ConfigError(ErrorKind::shape,
                          "permutation importance expects the training dataset");
    }
    const std::size_t p = d.n_features();
    const std::size_t n_trees = model.trees.size();

    std::size_t covered_trees = 0;
    for (const auto& rows : model.oob_rows) {
        if (!rows.empty()) covered_trees++;
    }
    if (covered_trees == 0) {
        throw DataError(ErrorKind::oob_unavailable, "no tree has out-of-bag rows");
    }

    // drop_sums[t] holds this tree's summed accuracy drops per feature,
    // plus its baseline accuracy; reduction is in tree order.
    std::vector<std::vector<double>> drop_sums(n_trees);
    std::vector<double> baseline(n_trees, 0.0);

    parallel_for(n_trees, [&](std::size_t t) {
        const auto& rows = model.oob_rows[t];
        drop_sums[t].assign(p, 0.0);
        if (rows.empty()) return;
        const DecisionTree& tree = model.trees[t];
        const double n_oob = static_cast<double>(rows.size());

        std::size_t base_correct = 0;
        for (std::uint32_t r : rows) {
            if (tree.predict(d.row(r)) == d.label(r)) base_correct++;
        }
        const double base_acc = static_cast<double>(base_correct) / n_oob;
        baseline[t] = base_acc;

        std::vector<double> permuted(rows.size());
        for (std::size_t j = 0; j < p; ++j) {
            for (std::size_t rep = 0; rep < repeats; ++rep) {
                Rng rng(derive_seed(seed, {t, rep, j}));
                for (std::size_t k = 0; k < rows.size(); ++k) {
                    permuted[k] = d.feature(rows[k], j);
                }
                for (std::size_t k = rows.size(); k > 1; --k) {
                    const std::size_t m = static_cast<std::size_t>(rng.next_below(k));
                    std::swap(permuted[k - 1], permuted[m]);
                }
                std::size_t correct = 0;
                for (std::size_t k = 0; k < rows.size(); ++k) {
                    if (tree.predict_override(d.row(rows[k]), j, permuted[k]) ==
                        d.label(rows[k])) {
                        correct++;
                    }
                }
                drop_sums[t][j] += base_acc - static_cast<double>(correct) / n_oob;
            }
        }
    });

    ImportanceProfile profile;
    profile.by_feature.resize(p);
    const double denom = static_cast<double>(covered_trees) * static_cast<double>(repeats);
    for (std::size_t j = 0; j < p; ++j) {
        double acc = 0.0;
        for (std::size_t t = 0; t < n_trees; ++t) acc += drop_sums[t][j];
        profile.by_feature[j].name = d.feature_names()[j];
        profile.by_feature[j].importance = acc / denom;
    }
    double base_acc = 0.0;
    for (std::size_t t = 0; t < n_trees; ++t) base_acc += baseline[t];
    profile.baseline_accuracy = base_acc / static_cast<double>(covered_trees);

    // Ranks: 1 = largest importance, ties to the lower feature index.
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ia = profile.by_feature[a].importance;
        const double ib = profile.by_feature[b].importance;
        if (ia != ib) return ia > ib;
        return a < b;
    });
    for (std::size_t r = 0; r < p; ++r) profile.by_feature[order[r]].rank = r + 1;
    return profile;
}

} // namespace classdiag
