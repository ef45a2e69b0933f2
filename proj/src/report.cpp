#include "classdiag/report.hpp"

#include "classdiag/csv.hpp"
#include "classdiag/diagnostics.hpp"
#include "classdiag/errors.hpp"
#include "classdiag/numstats.hpp"
#include "classdiag/rng.hpp"
#include "classdiag/synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace classdiag {

using nlohmann::json;

namespace {

constexpr std::uint64_t kSplitStream = 0xC1A55D1A60001ull;

const std::vector<std::string> kProcedures = {
    "separation",   "learning-curve",   "noise-curve",      "small-sample",
    "importance",   "confusion",        "downsample-sweep", "compare-features",
    "corr-heatmap", "synth",            "verify-theory",    "bayes-curve",
};

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(ErrorKind::invalid_argument,
                          std::string("config field '") + key + "' has the wrong type");
    }
}

} // namespace

const std::vector<std::string>& known_procedures() { return kProcedures; }

RunConfig config_from_json(const json& doc) {
    if (!doc.is_object()) {
        throw ConfigError(ErrorKind::invalid_argument, "config must be a JSON object");
    }
    RunConfig config;
    config.input = get_or<std::string>(doc, "input", "");
    config.test_input = get_or<std::string>(doc, "test_input", "");
    config.label_column = get_or<std::string>(doc, "label_column", "label");
    config.output_dir = get_or<std::string>(doc, "output_dir", "out");

    if (doc.contains("feature_sets")) {
        const json& sets = doc.at("feature_sets");
        if (!sets.is_object()) {
            throw ConfigError(ErrorKind::invalid_argument, "feature_sets must map names to column lists");
        }
        for (const auto& [name, cols] : sets.items()) {
            FeatureSetConfig fsc;
            fsc.name = name;
            if (cols.is_string() && cols.get<std::string>() == "*") {
                // empty column list = every feature column
            } else if (cols.is_array()) {
                for (const json& c : cols) fsc.columns.push_back(c.get<std::string>());
                if (fsc.columns.empty()) {
                    throw ConfigError(ErrorKind::invalid_feature_set,
                                      "feature set '" + name + "' lists no columns");
                }
            } else {
                throw ConfigError(ErrorKind::invalid_feature_set,
                                  "feature set '" + name + "' must be a column list or \"*\"");
            }
            config.feature_sets.push_back(std::move(fsc));
        }
        std::sort(config.feature_sets.begin(), config.feature_sets.end(),
                  [](const auto& a, const auto& b) { return a.name < b.name; });
    }

    if (doc.contains("classifier")) {
        const json& c = doc.at("classifier");
        config.classifier.kind =
            classifier_kind_from_string(get_or<std::string>(c, "kind", "random-forest"));
        config.classifier.rf.n_trees = get_or<std::size_t>(c, "n_trees", 500);
        config.classifier.rf.mtry = get_or<std::size_t>(c, "mtry", 0);
        config.classifier.rf.min_leaf = get_or<std::size_t>(c, "min_leaf", 1);
        config.classifier.logit.lambda = get_or<double>(c, "lambda", 0.0);
        config.classifier.logit.max_iters = get_or<std::size_t>(c, "max_iters", 10'000);
        config.classifier.logit.tol = get_or<double>(c, "tol", 1e-7);
    }

    config.procedures = get_or<std::vector<std::string>>(doc, "procedures", {});
    for (const std::string& p : config.procedures) {
        if (std::find(kProcedures.begin(), kProcedures.end(), p) == kProcedures.end()) {
            throw ConfigError(ErrorKind::invalid_argument, "unknown procedure '" + p + "'");
        }
    }

    if (doc.contains("parameters")) {
        const json& p = doc.at("parameters");
        ProcedureParams& pp = config.params;
        pp.sizes = get_or<std::vector<std::size_t>>(p, "sizes", {});
        pp.epsilons = get_or<std::vector<double>>(p, "epsilons", {});
        pp.ratios = get_or<std::vector<double>>(p, "ratios", pp.ratios);
        pp.repeats = get_or<std::size_t>(p, "repeats", pp.repeats);
        pp.test_fraction = get_or<double>(p, "test_fraction", pp.test_fraction);
        pp.target_class = get_or<std::string>(p, "target_class", "");
        pp.feature_set = get_or<std::string>(p, "feature_set", "");
        pp.sets = get_or<std::vector<std::string>>(p, "sets", {});
        pp.signed_correlation = get_or<bool>(p, "signed_correlation", false);
        pp.importance_repeats = get_or<std::size_t>(p, "importance_repeats", 1);
        pp.d_max = get_or<double>(p, "d_max", 25.0);
        pp.d_step = get_or<double>(p, "d_step", 0.25);
        pp.lemma_specs = get_or<std::size_t>(p, "lemma_specs", 50);
        pp.lemma_draws = get_or<std::size_t>(p, "lemma_draws", 200'000);
        pp.theorem_instances = get_or<std::size_t>(p, "theorem_instances", 1000);
        pp.expansion_instances = get_or<std::size_t>(p, "expansion_instances", 300);
        pp.predictions_input = get_or<std::string>(p, "predictions_input", "");
        if (p.contains("synth")) {
            const json& s = p.at("synth");
            pp.synth.mu = get_or<std::vector<double>>(s, "mu", pp.synth.mu);
            pp.synth.rho = get_or<double>(s, "rho", 0.0);
            pp.synth.theta = get_or<double>(s, "theta", 0.5);
            pp.synth.n = get_or<std::size_t>(s, "n", 1000);
            pp.synth.out = get_or<std::string>(s, "out", "synthetic.csv");
            if (s.contains("sigma")) {
                const json& sig = s.at("sigma");
                const std::size_t dim = sig.size();
                Matrix m(dim, dim);
                for (std::size_t i = 0; i < dim; ++i) {
                    if (sig[i].size() != dim) {
                        throw ConfigError(ErrorKind::invalid_argument, "synth.sigma must be square");
                    }
                    for (std::size_t j = 0; j < dim; ++j) m(i, j) = sig[i][j].get<double>();
                }
                pp.synth.sigma = std::move(m);
            }
        }
    }

    if (doc.contains("seed")) {
        config.seed = doc.at("seed").get<std::uint64_t>();
        config.seed_set = true;
    }
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(ErrorKind::invalid_argument, "cannot open config '" + path.string() + "'");
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(ErrorKind::invalid_argument,
                          "config is not valid JSON: " + std::string(e.what()));
    }
    return config_from_json(doc);
}

json config_to_canonical_json(const RunConfig& config) {
    json doc;
    doc["input"] = config.input.string();
    doc["test_input"] = config.test_input.string();
    doc["label_column"] = config.label_column;
    json sets = json::object();
    for (const auto& f : config.feature_sets) sets[f.name] = f.columns;
    doc["feature_sets"] = std::move(sets);
    doc["classifier"] = {
        {"kind", to_string(config.classifier.kind)},
        {"n_trees", config.classifier.rf.n_trees},
        {"mtry", config.classifier.rf.mtry},
        {"min_leaf", config.classifier.rf.min_leaf},
        {"lambda", config.classifier.logit.lambda},
        {"max_iters", config.classifier.logit.max_iters},
        {"tol", config.classifier.logit.tol},
    };
    doc["procedures"] = config.procedures;
    const ProcedureParams& pp = config.params;
    doc["parameters"] = {
        {"sizes", pp.sizes},
        {"epsilons", pp.epsilons},
        {"ratios", pp.ratios},
        {"repeats", pp.repeats},
        {"test_fraction", pp.test_fraction},
        {"target_class", pp.target_class},
        {"feature_set", pp.feature_set},
        {"sets", pp.sets},
        {"signed_correlation", pp.signed_correlation},
        {"importance_repeats", pp.importance_repeats},
        {"d_max", pp.d_max},
        {"d_step", pp.d_step},
        {"lemma_specs", pp.lemma_specs},
        {"lemma_draws", pp.lemma_draws},
        {"theorem_instances", pp.theorem_instances},
        {"expansion_instances", pp.expansion_instances},
        {"predictions_input", pp.predictions_input},
    };
    json synth = {
        {"mu", pp.synth.mu},       {"rho", pp.synth.rho}, {"theta", pp.synth.theta},
        {"n", pp.synth.n},         {"out", pp.synth.out},
    };
    if (pp.synth.sigma) {
        json rows = json::array();
        for (std::size_t i = 0; i < pp.synth.sigma->rows(); ++i) {
            rows.push_back(std::vector<double>(pp.synth.sigma->row(i).begin(),
                                               pp.synth.sigma->row(i).end()));
        }
        synth["sigma"] = std::move(rows);
    }
    doc["parameters"]["synth"] = std::move(synth);
    doc["seed"] = config.seed;
    return doc;
}

std::string config_hash(const RunConfig& config) {
    const std::string canonical = config_to_canonical_json(config).dump();
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char ch : canonical) {
        hash ^= ch;
        hash *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

namespace {

// ---- helpers shared by the procedure runners ----

struct RunState {
    explicit RunState(const RunConfig& c) : config(c) {}

    const RunConfig& config;
    json sections = json::object();
    json warnings = json::array();
    std::vector<std::filesystem::path> files;
    std::optional<Dataset> full;
    std::optional<Dataset> train;
    std::optional<Dataset> test;
};

void warn(RunState& state, const std::string& message) { state.warnings.push_back(message); }

const Dataset& full_dataset(RunState& state) {
    if (!state.full) {
        if (state.config.input.empty()) {
            throw ConfigError(ErrorKind::invalid_argument,
                              "this procedure needs an 'input' dataset");
        }
        state.full = load_csv(state.config.input, state.config.label_column);
    }
    return *state.full;
}

void ensure_train_test(RunState& state) {
    if (state.train) return;
    const Dataset& full = full_dataset(state);
    if (!state.config.test_input.empty()) {
        Dataset test = load_csv(state.config.test_input, state.config.label_column);
        if (test.feature_names() != full.feature_names() ||
            test.class_names() != full.class_names()) {
            throw DataError(ErrorKind::schema,
                            "test_input feature/class registries do not match the training input");
        }
        state.train = full;
        state.test = std::move(test);
        return;
    }
    Split split = stratified_split(full, state.config.params.test_fraction,
                                   derive_seed(state.config.seed, {kSplitStream}));
    state.train = std::move(split.train);
    state.test = std::move(split.test);
}

FeatureSet resolve_set(const Dataset& d, const FeatureSetConfig& fsc) {
    if (fsc.columns.empty()) return d.all_features(fsc.name);
    FeatureSet f;
    f.name = fsc.name;
    for (const std::string& col : fsc.columns) f.columns.push_back(d.column_index(col));
    validate_feature_set(f, d.n_features());
    return f;
}

const FeatureSetConfig& named_set_config(const RunConfig& config, const std::string& name) {
    for (const auto& f : config.feature_sets) {
        if (f.name == name) return f;
    }
    throw ConfigError(ErrorKind::invalid_feature_set, "feature set '" + name + "' is not defined");
}

// Train/test pair, reduced to the configured single feature set if any.
std::pair<Dataset, Dataset> working_pair(RunState& state) {
    ensure_train_test(state);
    if (state.config.params.feature_set.empty()) return {*state.train, *state.test};
    const FeatureSet f =
        resolve_set(*state.train, named_set_config(state.config, state.config.params.feature_set));
    return {select_features(*state.train, f), select_features(*state.test, f)};
}

std::vector<FeatureSet> selected_sets(RunState& state, const Dataset& d) {
    std::vector<FeatureSet> sets;
    if (!state.config.params.sets.empty()) {
        for (const std::string& name : state.config.params.sets) {
            sets.push_back(resolve_set(d, named_set_config(state.config, name)));
        }
    } else if (!state.config.feature_sets.empty()) {
        for (const auto& fsc : state.config.feature_sets) sets.push_back(resolve_set(d, fsc));
    } else {
        sets.push_back(d.all_features());
    }
    return sets;
}

json curve_to_json(const DiagnosticCurve& curve) {
    json points = json::array();
    for (const CurvePoint& pt : curve.points) {
        json point = {{"x", pt.control}, {"mean", pt.mean}, {"repeats", pt.repeats}};
        if (pt.repeats >= 2) point["sd"] = pt.sd;
        points.push_back(std::move(point));
    }
    return json{{"control", curve.control_name},
                {"metric", curve.metric_name},
                {"series", curve.series},
                {"points", std::move(points)}};
}

void emit_curves(RunState& state, const std::string& stem,
                 const std::vector<DiagnosticCurve>& curves) {
    const std::filesystem::path path = state.config.output_dir / (stem + ".curve.csv");
    write_curve_csv(path, curves);
    state.files.push_back(path);
}

std::vector<std::size_t> sizes_for(RunState& state, const Dataset& train, bool small_sample) {
    if (small_sample) return small_sample_grid(train);
    if (!state.config.params.sizes.empty()) {
        return state.config.params.sizes;
    }
    return default_size_grid(train);
}

std::uint64_t proc_seed(const RunState& state, std::uint64_t tag) {
    return derive_seed(state.config.seed, {tag});
}

// ---- procedure runners ----

void run_separation(RunState& state) {
    const Dataset& d = full_dataset(state);
    const auto sets = selected_sets(state, d);
    const PairwiseSeparationReport report = pairwise_separation_report(d, sets);

    json entries = json::array();
    for (const PairSeparation& e : report.entries) {
        entries.push_back({
            {"pair", {d.class_names()[static_cast<std::size_t>(e.pair.first)],
                      d.class_names()[static_cast<std::size_t>(e.pair.second)]}},
            {"feature_set", e.feature_set},
            {"d", e.result.d},
            {"bayes_error", e.result.bayes_error},
            {"ridge_applied", e.result.ridge_applied},
            {"condition_estimate", e.result.condition_estimate},
            {"wide_feature_warning", e.result.wide_feature_warning},
        });
    }
    json minima = json::array();
    for (const auto& m : report.per_pair_min) {
        minima.push_back({{"pair", {d.class_names()[static_cast<std::size_t>(m.pair.first)],
                                    d.class_names()[static_cast<std::size_t>(m.pair.second)]}},
                          {"min_set", m.min_set},
                          {"min_d", m.min_d}});
    }
    if (report.any_ridge) {
        warn(state, "separation: ridge regularization engaged for at least one pair");
    }
    state.sections["separation"] = {
        {"dimension", "feature"},
        {"pairs", static_cast<std::size_t>(d.n_classes() * (d.n_classes() - 1) / 2)},
        {"entries", std::move(entries)},
        {"per_pair_min", std::move(minima)},
    };

    // Long-format plot data: one series per feature set, x = pair index.
    std::vector<DiagnosticCurve> curves;
    for (const FeatureSet& f : sets) {
        DiagnosticCurve curve;
        curve.control_name = "pair_index";
        curve.metric_name = "separation";
        curve.series = f.name;
        std::size_t pair_index = 0;
        for (const PairSeparation& e : report.entries) {
            if (e.feature_set == f.name) {
                curve.points.push_back({static_cast<double>(pair_index++), e.result.d, 0.0, 1});
            }
        }
        curves.push_back(std::move(curve));
    }
    emit_curves(state, "separation", curves);
}

void run_learning_curve(RunState& state, const std::string& key, bool small_sample) {
    auto [train, test] = working_pair(state);
    const auto sizes = sizes_for(state, train, small_sample);
    const DiagnosticCurve curve = learning_curve(train, test, state.config.classifier, sizes,
                                                 state.config.params.repeats, proc_seed(state, 1));
    state.sections[key] = {
        {"dimension", "sample+learning"},
        {"interpretation",
         "a decreasing curve that levels off indicates the convergence error is nearly "
         "exhausted; a persistent plateau above zero points at approximation or feature error"},
        {"sizes", sizes},
        {"repeats", state.config.params.repeats},
        {"curve", curve_to_json(curve)},
    };
    emit_curves(state, key == "small-sample" ? "small_sample" : "learning_curve", {curve});
}

void run_noise_curve(RunState& state) {
    auto [train, test] = working_pair(state);
    const DiagnosticCurve curve =
        noise_curve(train, test, state.config.classifier, state.config.params.epsilons,
                    state.config.params.repeats, proc_seed(state, 2));
    state.sections["noise-curve"] = {
        {"dimension", "sample(contamination)"},
        {"interpretation",
         "test error on the clean holdout vs training-label contamination; a steep curve "
         "flags label-noise sensitivity, a flat one means the noise impact is negligible"},
        {"repeats", state.config.params.repeats},
        {"curve", curve_to_json(curve)},
    };
    emit_curves(state, "noise_curve", {curve});
}

void run_importance(RunState& state) {
    if (state.config.classifier.kind != ClassifierKind::random_forest) {
        throw ConfigError(ErrorKind::unsupported_configuration,
                          "permutation importance requires the random-forest classifier");
    }
    auto [train, test] = working_pair(state);
    const ForestModel model =
        train_random_forest(train, state.config.classifier.rf, proc_seed(state, 3));
    const ImportanceProfile profile = permutation_importance(
        model, train, state.config.params.importance_repeats, proc_seed(state, 4));

    json features = json::array();
    for (const ImportanceEntry& e : profile.by_feature) {
        features.push_back({{"name", e.name}, {"importance", e.importance}, {"rank", e.rank}});
    }
    state.sections["importance"] = {
        {"dimension", "feature+algorithm"},
        {"baseline_oob_accuracy", profile.baseline_accuracy},
        {"repeats", state.config.params.importance_repeats},
        {"features", std::move(features)},
    };

    DiagnosticCurve curve;
    curve.control_name = "feature_index";
    curve.metric_name = "importance";
    curve.series = "permutation_importance";
    for (std::size_t j = 0; j < profile.by_feature.size(); ++j) {
        curve.points.push_back({static_cast<double>(j + 1), profile.by_feature[j].importance,
                                0.0, state.config.params.importance_repeats});
    }
    emit_curves(state, "importance", {curve});
}

json confusion_to_json(const ConfusionMatrix& cm) {
    json rows = json::array();
    for (std::size_t i = 0; i < cm.n_classes; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < cm.n_classes; ++j) row.push_back(cm.at(i, j));
        rows.push_back(std::move(row));
    }
    const auto rates = per_class_rates(cm);
    json per_class = json::array();
    for (std::size_t c = 0; c < cm.n_classes; ++c) {
        per_class.push_back({{"class", cm.class_names[c]},
                             {"producer_error", rates[c].producer_error},
                             {"user_error", rates[c].user_error}});
    }
    return json{
        {"orientation", "rows=true,columns=predicted"},
        {"class_names", cm.class_names},
        {"counts", std::move(rows)},
        {"total", cm.total()},
        {"overall_error", error_rate(cm)},
        {"kappa", kappa(cm)},
        {"per_class", std::move(per_class)},
    };
}

void emit_confusion_csv(RunState& state, const ConfusionMatrix& cm) {
    NamedMatrix nm;
    nm.row_names = cm.class_names;
    nm.col_names = cm.class_names;
    nm.values = Matrix(cm.n_classes, cm.n_classes);
    for (std::size_t i = 0; i < cm.n_classes; ++i)
        for (std::size_t j = 0; j < cm.n_classes; ++j)
            nm.values(i, j) = static_cast<double>(cm.at(i, j));
    const std::filesystem::path path = state.config.output_dir / "confusion.matrix.csv";
    write_matrix_csv(path, nm);
    state.files.push_back(path);
}

void run_confusion(RunState& state) {
    ConfusionMatrix cm;
    if (!state.config.params.predictions_input.empty()) {
        const LabelPairs pairs = load_prediction_csv(state.config.params.predictions_input);
        cm = confusion_matrix(pairs.truth, pairs.predicted, pairs.class_names.size(),
                              pairs.class_names);
    } else {
        auto [train, test] = working_pair(state);
        const TrainedModel model =
            train_classifier(train, state.config.classifier, proc_seed(state, 5));
        const Predictions preds = predict(model, test.features());
        cm = confusion_matrix(test.labels(), preds.labels, test.n_classes(), test.class_names());
        if (const auto* logit = std::get_if<LogitModel>(&model); logit && !logit->converged) {
            warn(state, "confusion: logistic solver stopped before reaching tolerance");
        }
    }
    json section = confusion_to_json(cm);
    section["dimension"] = "error";
    state.sections["confusion"] = std::move(section);
    emit_confusion_csv(state, cm);
}

void run_downsample_sweep(RunState& state) {
    auto [train, test] = working_pair(state);
    if (state.config.params.target_class.empty()) {
        throw ConfigError(ErrorKind::invalid_argument,
                          "downsample-sweep needs parameters.target_class");
    }
    const int target = train.class_id(state.config.params.target_class);
    const DownsampleSweep sweep =
        downsample_sweep(train, test, state.config.classifier, target,
                         state.config.params.ratios, state.config.params.repeats,
                         proc_seed(state, 6));
    state.sections["downsample-sweep"] = {
        {"dimension", "sample(representativeness)"},
        {"target_class", state.config.params.target_class},
        {"repeats", state.config.params.repeats},
        {"error_curve", curve_to_json(sweep.error)},
        {"involving_target_curve", curve_to_json(sweep.involving_target)},
    };
    emit_curves(state, "downsample_sweep.error", {sweep.error});
    emit_curves(state, "downsample_sweep.involving_target", {sweep.involving_target});
}

void run_compare_features(RunState& state) {
    ensure_train_test(state);
    const auto sets = selected_sets(state, *state.train);
    if (sets.size() < 2) {
        throw ConfigError(ErrorKind::invalid_argument,
                          "compare-features needs at least two feature sets");
    }
    const auto sizes = sizes_for(state, *state.train, false);
    const auto curves =
        feature_set_comparison(*state.train, *state.test, state.config.classifier, sets, sizes,
                               state.config.params.repeats, proc_seed(state, 7));
    json jcurves = json::array();
    for (const DiagnosticCurve& c : curves) jcurves.push_back(curve_to_json(c));
    state.sections["compare-features"] = {
        {"dimension", "feature"},
        {"sizes", sizes},
        {"repeats", state.config.params.repeats},
        {"curves", std::move(jcurves)},
    };
    emit_curves(state, "compare_features", curves);
}

void run_corr_heatmap(RunState& state) {
    const Dataset& d = full_dataset(state);
    const CovarianceMatrix cov = estimate_covariance(d.features());
    const CovarianceMatrix corr = to_correlation(cov);
    for (std::size_t z : corr.zero_variance) {
        warn(state, "corr-heatmap: feature '" + d.feature_names()[z] + "' has zero variance");
    }
    NamedMatrix nm;
    nm.row_names = d.feature_names();
    nm.col_names = d.feature_names();
    nm.values = corr.values;
    if (!state.config.params.signed_correlation) {
        for (std::size_t i = 0; i < nm.values.rows(); ++i)
            for (std::size_t j = 0; j < nm.values.cols(); ++j)
                nm.values(i, j) = std::abs(nm.values(i, j));
    }
    const std::filesystem::path path = state.config.output_dir / "corr_heatmap.matrix.csv";
    write_matrix_csv(path, nm);
    state.files.push_back(path);
    state.sections["corr-heatmap"] = {
        {"dimension", "feature"},
        {"absolute", !state.config.params.signed_correlation},
        {"zero_variance_features", corr.zero_variance},
        {"file", "corr_heatmap.matrix.csv"},
    };
}

void run_synth(RunState& state) {
    const SynthConfig& sc = state.config.params.synth;
    Matrix sigma = sc.sigma ? *sc.sigma : ar_covariance(sc.mu.size(), sc.rho);
    GaussianMixtureSpec spec(sc.mu, std::move(sigma), sc.theta);
    const Dataset sample = sample_mixture(spec, sc.n, proc_seed(state, 8));
    const std::filesystem::path path = state.config.output_dir / sc.out;
    save_csv(sample, path);
    state.files.push_back(path);
    state.sections["synth"] = {
        {"dimension", "sample"},
        {"n", sc.n},
        {"dim", spec.dim()},
        {"theta", sc.theta},
        {"separation", spec.separation()},
        {"bayes_error", bayes_error_from_separation(spec.separation())},
        {"file", sc.out},
    };
}

void run_verify_theory(RunState& state) {
    const ProcedureParams& pp = state.config.params;

    // Closed-form vs Monte-Carlo optimal-rule error over random mixtures.
    std::size_t lemma_pass = 0;
    json lemma_cases = json::array();
    for (std::size_t i = 0; i < pp.lemma_specs; ++i) {
        const std::size_t p = 2 + i % 9;
        const std::uint64_t case_seed = derive_seed(proc_seed(state, 9), {i});
        Matrix sigma = random_spd_matrix(p, {0.5, 2.0}, derive_seed(case_seed, {0}));
        Rng rng(derive_seed(case_seed, {1}));
        std::vector<double> direction(p);
        for (double& v : direction) v = rng.next_normal();
        const double d_target = 0.25 + 8.75 * rng.next_double();
        GaussianMixtureSpec probe(direction, sigma, 0.5);
        const double d0 = probe.separation();
        for (double& v : direction) v *= std::sqrt(d_target / d0);
        GaussianMixtureSpec spec(direction, std::move(sigma), 0.5);

        const double d = spec.separation();
        const double closed_form = bayes_error_from_separation(d);
        const MonteCarloBayes mc =
            monte_carlo_bayes_error(spec, pp.lemma_draws, derive_seed(case_seed, {2}));
        const double sd = std::sqrt(closed_form * (1.0 - closed_form) /
                                    static_cast<double>(pp.lemma_draws));
        const bool pass = std::abs(mc.rate - closed_form) <= 3.0 * sd;
        if (pass) lemma_pass++;
        lemma_cases.push_back({{"dim", p},
                               {"d", d},
                               {"closed_form", closed_form},
                               {"monte_carlo", mc.rate},
                               {"pass", pass}});
    }

    // Block-expansion inequality on generated instances.
    std::size_t violations = 0;
    for (std::size_t i = 0; i < pp.theorem_instances; ++i) {
        const std::uint64_t inst_seed = derive_seed(proc_seed(state, 10), {i});
        Rng dims(inst_seed);
        const std::size_t p1 = 2 + static_cast<std::size_t>(dims.next_below(4));
        const std::size_t p2 = 2 + static_cast<std::size_t>(dims.next_below(4));
        const Theorem1Instance inst =
            theorem1_instance(p1, p2, 0.01, {0.5, 2.0}, derive_seed(inst_seed, {1}));
        CovarianceMatrix s;
        s.values = inst.sigma;
        const PerturbationDecomposition pd =
            perturbation_decomposition(inst.u, s, inst.split);
        if (!(pd.exact > pd.block1_term)) violations++;
    }

    // Residual trend of the expansion as the coupling shrinks. Instance
    // seeds are shared across targets so the trend is paired.
    const std::vector<double> targets{0.04, 0.02, 0.01};
    std::vector<double> max_residual;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        double worst = 0.0;
        for (std::size_t i = 0; i < pp.expansion_instances; ++i) {
            const Theorem1Instance inst = theorem1_instance(
                3, 3, targets[t], {0.5, 2.0}, derive_seed(proc_seed(state, 11), {i}));
            CovarianceMatrix s;
            s.values = inst.sigma;
            const PerturbationDecomposition pd =
                perturbation_decomposition(inst.u, s, inst.split);
            worst = std::max(worst, std::abs(pd.residual));
        }
        max_residual.push_back(worst);
    }
    const bool monotone =
        max_residual[0] > max_residual[1] && max_residual[1] > max_residual[2];

    state.sections["verify-theory"] = {
        {"dimension", "theory"},
        {"lemma",
         {{"specs", pp.lemma_specs},
          {"draws", pp.lemma_draws},
          {"within_3sd", lemma_pass},
          {"cases", std::move(lemma_cases)}}},
        {"theorem",
         {{"instances", pp.theorem_instances},
          {"cross_norm_target", 0.01},
          {"eig_range", {0.5, 2.0}},
          {"violations", violations}}},
        {"expansion",
         {{"targets", targets},
          {"instances_per_target", pp.expansion_instances},
          {"max_abs_residual", max_residual},
          {"monotone_decreasing", monotone}}},
    };
    if (violations > 0) warn(state, "verify-theory: inequality violations observed");
}

void run_bayes_curve(RunState& state) {
    const ProcedureParams& pp = state.config.params;
    if (!(pp.d_step > 0.0) || !(pp.d_max >= 0.0)) {
        throw ConfigError(ErrorKind::invalid_argument, "bayes-curve needs d_step > 0, d_max >= 0");
    }
    DiagnosticCurve curve;
    curve.control_name = "separation";
    curve.metric_name = "bayes_error";
    curve.series = "bayes_error";
    const std::size_t steps = static_cast<std::size_t>(std::floor(pp.d_max / pp.d_step + 1e-9));
    for (std::size_t k = 0; k <= steps; ++k) {
        const double d = static_cast<double>(k) * pp.d_step;
        curve.points.push_back({d, bayes_error_from_separation(d), 0.0, 1});
    }
    state.sections["bayes-curve"] = {
        {"dimension", "theory"},
        {"d_max", pp.d_max},
        {"d_step", pp.d_step},
        {"curve", curve_to_json(curve)},
    };
    emit_curves(state, "bayes_curve", {curve});
}

void check_finite(const json& node, const std::string& path) {
    if (node.is_number_float()) {
        const double v = node.get<double>();
        if (!std::isfinite(v)) {
            throw NumericError(ErrorKind::numerical_failure,
                               "non-finite value in report at " + path);
        }
    } else if (node.is_object()) {
        for (const auto& [key, value] : node.items()) check_finite(value, path + "/" + key);
    } else if (node.is_array()) {
        for (std::size_t i = 0; i < node.size(); ++i) {
            check_finite(node[i], path + "/" + std::to_string(i));
        }
    }
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

ReportBundle run(const RunConfig& config) {
    if (!config.seed_set) {
        throw ConfigError(ErrorKind::invalid_argument,
                          "a seed is mandatory; there is no wall-clock default");
    }
    if (config.procedures.empty()) {
        throw ConfigError(ErrorKind::no_procedures, "no procedures selected");
    }
    std::filesystem::create_directories(config.output_dir);

    RunState state(config);
    for (const std::string& proc : config.procedures) {
        if (proc == "separation") run_separation(state);
        else if (proc == "learning-curve") run_learning_curve(state, "learning-curve", false);
        else if (proc == "small-sample") run_learning_curve(state, "small-sample", true);
        else if (proc == "noise-curve") run_noise_curve(state);
        else if (proc == "importance") run_importance(state);
        else if (proc == "confusion") run_confusion(state);
        else if (proc == "downsample-sweep") run_downsample_sweep(state);
        else if (proc == "compare-features") run_compare_features(state);
        else if (proc == "corr-heatmap") run_corr_heatmap(state);
        else if (proc == "synth") run_synth(state);
        else if (proc == "verify-theory") run_verify_theory(state);
        else if (proc == "bayes-curve") run_bayes_curve(state);
    }

    ReportBundle bundle;
    bundle.document = {
        {"format", "classdiag-report"},
        {"version", 1},
        {"metadata",
         {{"tool_version", kToolVersion},
          {"config_hash", config_hash(config)},
          {"seed", config.seed},
          {"timestamp", utc_timestamp()}}},
        {"sections", std::move(state.sections)},
        {"warnings", std::move(state.warnings)},
    };
    check_finite(bundle.document["sections"], "sections");

    const std::filesystem::path report_path = config.output_dir / "report.json";
    write_file_atomic(report_path, bundle.document.dump(2) + "\n");
    state.files.push_back(report_path);
    bundle.files_written = std::move(state.files);
    return bundle;
}

} // namespace classdiag
