#include "classdiag/classifiers.hpp"

#include "classdiag/csv.hpp"
#include "classdiag/errors.hpp"

#include <fstream>

#include "json.hpp"

namespace classdiag {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "classdiag-model";
constexpr int kVersion = 1;

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    }
    return rows;
}

Matrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) {
        throw DataError(ErrorKind::schema, "model: expected a non-empty matrix");
    }
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].size();
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (j[i].size() != cols) {
            throw DataError(ErrorKind::schema, "model: ragged matrix rows");
        }
        for (std::size_t k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

} // namespace

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    json doc;
    doc["format"] = kFormat;
    doc["version"] = kVersion;
    if (const auto* forest = std::get_if<ForestModel>(&model)) {
        doc["kind"] = "random-forest";
        doc["n_features"] = forest->n_features;
        doc["trained_rows"] = forest->trained_rows;
        doc["class_names"] = forest->class_names;
        json trees = json::array();
        for (const DecisionTree& tree : forest->trees) {
            json nodes = json::array();
            for (const TreeNode& n : tree.nodes) {
                nodes.push_back({n.feature, n.threshold, n.left, n.right, n.leaf_class});
            }
            trees.push_back(std::move(nodes));
        }
        doc["trees"] = std::move(trees);
        doc["oob_rows"] = forest->oob_rows;
    } else {
        const auto& logit = std::get<LogitModel>(model);
        doc["kind"] = "l1-logistic";
        doc["n_features"] = logit.n_features;
        doc["class_names"] = logit.class_names;
        doc["weights"] = matrix_to_json(logit.weights);
        doc["intercepts"] = logit.intercepts;
        doc["lambda"] = logit.lambda;
        doc["converged"] = logit.converged;
        doc["final_objective"] = logit.final_objective;
        doc["iterations"] = logit.iterations;
    }
    write_file_atomic(path, doc.dump(2) + "\n");
}

TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError(ErrorKind::schema, "cannot open model file '" + path.string() + "'");
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError(ErrorKind::parse, "model file is not valid JSON: " + std::string(e.what()));
    }
    if (doc.value("format", "") != kFormat || doc.value("version", 0) != kVersion) {
        throw DataError(ErrorKind::schema, "unrecognized model format/version");
    }
    const std::string kind = doc.value("kind", "");
    try {
        if (kind == "random-forest") {
            ForestModel forest;
            forest.n_features = doc.at("n_features").get<std::size_t>();
            forest.trained_rows = doc.at("trained_rows").get<std::size_t>();
            forest.class_names = doc.at("class_names").get<std::vector<std::string>>();
            for (const json& jt : doc.at("trees")) {
                DecisionTree tree;
                for (const json& jn : jt) {
                    TreeNode n;
                    n.feature = jn.at(0).get<std::int32_t>();
                    n.threshold = jn.at(1).get<double>();
                    n.left = jn.at(2).get<std::int32_t>();
                    n.right = jn.at(3).get<std::int32_t>();
                    n.leaf_class = jn.at(4).get<std::int32_t>();
                    tree.nodes.push_back(n);
                }
                forest.trees.push_back(std::move(tree));
            }
            forest.oob_rows = doc.at("oob_rows").get<std::vector<std::vector<std::uint32_t>>>();
            if (forest.oob_rows.size() != forest.trees.size()) {
                throw DataError(ErrorKind::schema, "model: oob_rows/trees length mismatch");
            }
            return forest;
        }
        if (kind == "l1-logistic") {
            LogitModel logit;
            logit.n_features = doc.at("n_features").get<std::size_t>();
            logit.class_names = doc.at("class_names").get<std::vector<std::string>>();
            logit.weights = matrix_from_json(doc.at("weights"));
            logit.intercepts = doc.at("intercepts").get<std::vector<double>>();
            logit.lambda = doc.at("lambda").get<double>();
            logit.converged = doc.at("converged").get<bool>();
            logit.final_objective = doc.at("final_objective").get<double>();
            logit.iterations = doc.at("iterations").get<std::size_t>();
            return logit;
        }
    } catch (const json::exception& e) {
        throw DataError(ErrorKind::schema, "malformed model document: " + std::string(e.what()));
    }
    throw DataError(ErrorKind::schema, "unknown model kind '" + kind + "'");
}

} // namespace classdiag
