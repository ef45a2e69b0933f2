#include "classdiag/classifiers.hpp"

#include "classdiag/errors.hpp"
#include "classdiag/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace classdiag {

namespace {

// Row scores s_c = w_c . z + b_c, shifted by the row max for stable softmax.
void softmax_probs(const Matrix& weights, std::span<const double> intercepts,
                   std::span<const double> row, std::span<double> probs) {
    const std::size_t c = weights.rows();
    double max_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c; ++k) {
        probs[k] = kernels::dot(weights.row(k), row) + intercepts[k];
        max_score = std::max(max_score, probs[k]);
    }
    double z = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
        probs[k] = std::exp(probs[k] - max_score);
        z += probs[k];
    }
    for (std::size_t k = 0; k < c; ++k) probs[k] /= z;
}

double l1_norm(const Matrix& weights) {
    double acc = 0.0;
    for (std::size_t k = 0; k < weights.rows(); ++k) {
        for (double v : weights.row(k)) acc += std::abs(v);
    }
    return acc;
}

} // namespace

double logit_nll(const Matrix& z, const std::vector<int>& labels, const Matrix& weights,
                 std::span<const double> intercepts) {
    const std::size_t n = z.rows();
    const std::size_t c = weights.rows();
    std::vector<double> probs(c);
    double nll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t y = static_cast<std::size_t>(labels[i]);
        double max_score = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < c; ++k) {
            probs[k] = kernels::dot(weights.row(k), z.row(i)) + intercepts[k];
            max_score = std::max(max_score, probs[k]);
        }
        double lse = 0.0;
        for (std::size_t k = 0; k < c; ++k) lse += std::exp(probs[k] - max_score);
        nll += std::log(lse) + max_score - probs[y];
    }
    return nll / static_cast<double>(n);
}

void logit_nll_gradient(const Matrix& z, const std::vector<int>& labels, const Matrix& weights,
                        std::span<const double> intercepts, Matrix& grad_weights,
                        std::vector<double>& grad_intercepts) {
    const std::size_t n = z.rows();
    const std::size_t p = z.cols();
    const std::size_t c = weights.rows();
    grad_weights = Matrix(c, p);
    grad_intercepts.assign(c, 0.0);
    std::vector<double> probs(c);
    for (std::size_t i = 0; i < n; ++i) {
        softmax_probs(weights, intercepts, z.row(i), probs);
        probs[static_cast<std::size_t>(labels[i])] -= 1.0;
        for (std::size_t k = 0; k < c; ++k) {
            kernels::axpy(probs[k], z.row(i), grad_weights.row(k));
            grad_intercepts[k] += probs[k];
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < c; ++k) {
        for (double& v : grad_weights.row(k)) v *= inv_n;
        grad_intercepts[k] *= inv_n;
    }
}

LogitModel train_l1_logistic(const Dataset& d, const LogisticParams& params,
                             std::uint64_t /*seed: accepted for contract uniformity*/) {
    const std::size_t n = d.n_rows();
    const std::size_t p = d.n_features();
    const std::size_t c = d.n_classes();
    if (n < c) {
        throw DataError(ErrorKind::insufficient_sample,
                        "l1 logistic needs n >= C (" + std::to_string(n) + " < " +
                            std::to_string(c) + ")");
    }
    if (params.lambda < 0.0) {
        throw ConfigError(ErrorKind::invalid_argument, "lambda must be nonnegative");
    }

    // Standardize columns; zero-spread features stay at z = 0 and keep a
    // zero coefficient on every scale.
    std::vector<double> mean(p, 0.0), sd(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += d.feature(i, j);
        mean[j] = acc / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dev = d.feature(i, j) - mean[j];
            ss += dev * dev;
        }
        sd[j] = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    }
    Matrix z(n, p);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            z(i, j) = sd[j] > 0.0 ? (d.feature(i, j) - mean[j]) / sd[j] : 0.0;
        }
    }

    Matrix w(c, p);
    std::vector<double> b(c, 0.0);
    double objective = logit_nll(z, d.labels(), w, b); // lambda*|0| = 0

    Matrix grad_w;
    std::vector<double> grad_b;
    Matrix w_next(c, p);
    std::vector<double> b_next(c);

    double step = 1.0;
    bool converged = false;
    std::size_t iterations = 0;

    for (std::size_t iter = 0; iter < params.max_iters; ++iter) {
        iterations = iter + 1;
        logit_nll_gradient(z, d.labels(), w, b, grad_w, grad_b);
        const double smooth = objective - params.lambda * l1_norm(w);

        // Proximal step with halving backtracking on the smooth part's
        // quadratic upper bound; guarantees monotone composite descent.
        double smooth_next = 0.0;
        for (;;) {
            for (std::size_t k = 0; k < c; ++k) {
                for (std::size_t j = 0; j < p; ++j) {
                    const double raw = w(k, j) - step * grad_w(k, j);
                    const double thresh = step * params.lambda;
                    w_next(k, j) = raw > thresh ? raw - thresh
                                                : (raw < -thresh ? raw + thresh : 0.0);
                }
                b_next[k] = b[k] - step * grad_b[k];
            }
            smooth_next = logit_nll(z, d.labels(), w_next, b_next);
            if (!std::isfinite(smooth_next)) {
                throw NumericError(ErrorKind::numerical_failure,
                                   "logistic objective became non-finite at iteration " +
                                       std::to_string(iterations));
            }
            double inner = 0.0, sqnorm = 0.0;
            for (std::size_t k = 0; k < c; ++k) {
                for (std::size_t j = 0; j < p; ++j) {
                    const double delta = w_next(k, j) - w(k, j);
                    inner += grad_w(k, j) * delta;
                    sqnorm += delta * delta;
                }
                const double delta_b = b_next[k] - b[k];
                inner += grad_b[k] * delta_b;
                sqnorm += delta_b * delta_b;
            }
            if (smooth_next <= smooth + inner + sqnorm / (2.0 * step) + 1e-15) break;
            step *= 0.5;
            if (step < 1e-18) {
                throw NumericError(ErrorKind::numerical_failure,
                                   "line search collapsed at iteration " +
                                       std::to_string(iterations));
            }
        }

        const double objective_next = smooth_next + params.lambda * l1_norm(w_next);
        std::swap(w, w_next);
        std::swap(b, b_next);
        const double change = std::abs(objective - objective_next) /
                              std::max(1.0, std::abs(objective));
        objective = objective_next;
        step = std::min(step * 2.0, 1e6);
        if (change < params.tol) {
            converged = true;
            break;
        }
    }

    LogitModel model;
    model.lambda = params.lambda;
    model.converged = converged;
    model.final_objective = objective;
    model.iterations = iterations;
    model.n_features = p;
    model.class_names = d.class_names();
    model.weights = Matrix(c, p);
    model.intercepts.assign(c, 0.0);
    for (std::size_t k = 0; k < c; ++k) {
        double shift = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            if (sd[j] > 0.0) {
                model.weights(k, j) = w(k, j) / sd[j];
                shift += w(k, j) * mean[j] / sd[j];
            }
        }
        model.intercepts[k] = b[k] - shift;
    }
    return model;
}

Predictions predict(const LogitModel& model, const Matrix& x) {
    if (x.cols() != model.n_features) {
        throw ConfigError(ErrorKind::shape, "prediction input has wrong feature count");
    }
    const std::size_t c = model.class_names.size();
    Predictions out;
    out.labels.resize(x.rows());
    out.scores = Matrix(x.rows(), c);
    std::vector<double> probs(c);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        softmax_probs(model.weights, model.intercepts, x.row(i), probs);
        std::size_t best = 0;
        for (std::size_t k = 0; k < c; ++k) {
            out.scores(i, k) = probs[k];
            if (probs[k] > probs[best]) best = k;
        }
        out.labels[i] = static_cast<int>(best);
    }
    return out;
}

ClassifierKind classifier_kind_from_string(const std::string& name) {
    if (name == "random-forest" || name == "rf") return ClassifierKind::random_forest;
    if (name == "l1-logistic" || name == "logit") return ClassifierKind::l1_logistic;
    throw ConfigError(ErrorKind::invalid_argument, "unknown classifier kind '" + name + "'");
}

std::string to_string(ClassifierKind kind) {
    return kind == ClassifierKind::random_forest ? "random-forest" : "l1-logistic";
}

TrainedModel train_classifier(const Dataset& d, const ClassifierSpec& spec, std::uint64_t seed) {
    if (spec.kind == ClassifierKind::random_forest) {
        return train_random_forest(d, spec.rf, seed);
    }
    return train_l1_logistic(d, spec.logit, seed);
}

Predictions predict(const TrainedModel& model, const Matrix& x) {
    return std::visit([&](const auto& m) { return predict(m, x); }, model);
}

double holdout_error(const TrainedModel& model, const Dataset& test) {
    const Predictions preds = predict(model, test.features());
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < test.n_rows(); ++i) {
        if (preds.labels[i] != test.label(i)) wrong++;
    }
    return static_cast<double>(wrong) / static_cast<double>(test.n_rows());
}

} // namespace classdiag
