#pragma once

#include "classdiag/dataset.hpp"
#include "classdiag/linalg.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace classdiag {

enum class ClassifierKind { random_forest, l1_logistic };

struct RandomForestParams {
    std::size_t n_trees = 500;
    std::size_t mtry = 0; // 0 -> floor(sqrt(p))
    std::size_t min_leaf = 1;
};

struct LogisticParams {
    double lambda = 0.0;
    std::size_t max_iters = 10'000;
    double tol = 1e-7; // relative objective change
};

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::random_forest;
    RandomForestParams rf;
    LogisticParams logit;
};

ClassifierKind classifier_kind_from_string(const std::string& name);
std::string to_string(ClassifierKind kind);

struct TreeNode {
    std::int32_t feature = -1; // split feature; -1 marks a leaf
    double threshold = 0.0;    // go left when x[feature] < threshold
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int32_t leaf_class = -1;
};

struct DecisionTree {
    std::vector<TreeNode> nodes; // node 0 is the root

    int predict(std::span<const double> row) const;
    /// Predict with one feature's value overridden (permutation importance).
    int predict_override(std::span<const double> row, std::size_t feature, double value) const;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    std::vector<std::vector<std::uint32_t>> oob_rows; // per tree, ascending training-row ids
    std::size_t n_features = 0;
    std::size_t trained_rows = 0;
    std::vector<std::string> class_names;
};

struct LogitModel {
    Matrix weights; // C x p, original feature scale
    std::vector<double> intercepts;
    double lambda = 0.0;
    bool converged = false;
    double final_objective = 0.0; // penalized objective on the standardized scale
    std::size_t iterations = 0;
    std::size_t n_features = 0;
    std::vector<std::string> class_names;
};

using TrainedModel = std::variant<ForestModel, LogitModel>;

/// Bagged CART-style trees: per tree a bootstrap of n rows, mtry features
/// sampled with replacement at each node (collapsed to their distinct
/// set), best weighted-Gini midpoint split, ties to the lower feature
/// index then lower threshold. Deterministic per seed via per-tree
/// derived streams.
ForestModel train_random_forest(const Dataset& d, const RandomForestParams& params,
                                std::uint64_t seed);

/// L1-penalized multinomial logistic regression by proximal gradient with
/// halving line search; features standardized internally, coefficients
/// reported on the original scale. Deterministic; `seed` is accepted for
/// contract uniformity and unused.
LogitModel train_l1_logistic(const Dataset& d, const LogisticParams& params, std::uint64_t seed);

TrainedModel train_classifier(const Dataset& d, const ClassifierSpec& spec, std::uint64_t seed);

struct Predictions {
    std::vector<int> labels;
    Matrix scores; // n x C vote shares (forest) or softmax probabilities (logit)
};

Predictions predict(const ForestModel& model, const Matrix& x);
Predictions predict(const LogitModel& model, const Matrix& x);
Predictions predict(const TrainedModel& model, const Matrix& x);

/// Fraction of `test` rows the model labels incorrectly.
double holdout_error(const TrainedModel& model, const Dataset& test);

struct OobResult {
    double error = 0.0;
    std::size_t evaluated = 0;
    std::size_t skipped = 0; // rows in no tree's out-of-bag set
};

/// Out-of-bag error on the training dataset the model was fit to.
OobResult oob_error(const ForestModel& model, const Dataset& d);

struct ImportanceEntry {
    std::string name;
    double importance = 0.0;
    std::size_t rank = 0; // 1 = largest importance
};

struct ImportanceProfile {
    std::vector<ImportanceEntry> by_feature; // dataset column order
    double baseline_accuracy = 0.0;          // mean per-tree out-of-bag accuracy
};

/// Mean per-tree OOB accuracy drop when a feature's values are permuted
/// within each tree's OOB rows, averaged over trees and `repeats`
/// permutations. Negative values are reported as-is.
ImportanceProfile permutation_importance(const ForestModel& model, const Dataset& d,
                                         std::size_t repeats, std::uint64_t seed);

// Internals used by the gradient tests and the optimizer: mean multinomial
// negative log-likelihood of C x p weights / C intercepts on standardized
// features, and its analytic gradient.
double logit_nll(const Matrix& z, const std::vector<int>& labels, const Matrix& weights,
                 std::span<const double> intercepts);
void logit_nll_gradient(const Matrix& z, const std::vector<int>& labels, const Matrix& weights,
                        std::span<const double> intercepts, Matrix& grad_weights,
                        std::vector<double>& grad_intercepts);

/// Versioned JSON round-trip for trained models.
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

} // namespace classdiag
