#pragma once

#include "classdiag/classifiers.hpp"
#include "classdiag/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace classdiag {

inline constexpr const char* kToolVersion = "0.1.0";

struct FeatureSetConfig {
    std::string name;
    std::vector<std::string> columns; // empty list = every feature column
};

struct SynthConfig {
    std::vector<double> mu{1.0, 0.0};
    double rho = 0.0; // AR(1) covariance; explicit sigma overrides
    std::optional<Matrix> sigma;
    double theta = 0.5;
    std::size_t n = 1000;
    std::string out = "synthetic.csv";
};

struct ProcedureParams {
    std::vector<std::size_t> sizes;  // empty -> default geometric grid
    std::vector<double> epsilons;    // empty -> default contamination grid
    std::vector<double> ratios{0.2, 0.4, 0.6, 0.8, 1.0};
    std::size_t repeats = 5;
    double test_fraction = 0.25;
    std::string target_class;
    std::string feature_set;          // single-set procedures; empty = all columns
    std::vector<std::string> sets;    // compare-features / separation; empty = all defined
    bool signed_correlation = false;
    std::size_t importance_repeats = 1;
    double d_max = 25.0;
    double d_step = 0.25;
    std::size_t lemma_specs = 50;
    std::size_t lemma_draws = 200'000;
    std::size_t theorem_instances = 1000;
    std::size_t expansion_instances = 300;
    std::string predictions_input; // confusion from a (true,predicted) file
    SynthConfig synth;
};

struct RunConfig {
    std::filesystem::path input;      // dataset csv; may be empty for data-free procedures
    std::filesystem::path test_input; // optional fixed test set
    std::string label_column = "label";
    std::vector<FeatureSetConfig> feature_sets;
    ClassifierSpec classifier;
    std::vector<std::string> procedures;
    ProcedureParams params;
    std::uint64_t seed = 0;
    bool seed_set = false; // seeds are mandatory; no wall-clock default
    std::filesystem::path output_dir = "out";
};

RunConfig config_from_json(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of every semantic field (output_dir excluded).
nlohmann::json config_to_canonical_json(const RunConfig& config);

/// FNV-1a 64 over the canonical serialization, as hex.
std::string config_hash(const RunConfig& config);

struct ReportBundle {
    nlohmann::json document;
    std::vector<std::filesystem::path> files_written;
};

/// Execute the selected procedures, write report.json and the per-curve /
/// per-matrix CSVs into output_dir (atomically), and return the bundle.
ReportBundle run(const RunConfig& config);

const std::vector<std::string>& known_procedures();

} // namespace classdiag
