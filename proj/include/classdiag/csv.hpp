#pragma once

#include "classdiag/dataset.hpp"
#include "classdiag/diagnostics.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace classdiag {

/// Parse a headered CSV into a dataset. Non-label cells must be finite
/// reals; label strings are mapped to dense ids in first-appearance order.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column);

/// Inverse of load_csv: feature columns at full round-trip precision, the
/// label column holding class names. Written atomically.
void save_csv(const Dataset& d, const std::filesystem::path& path,
              const std::string& label_column = "label");

/// Long-format curve file: series,x,y,sd,repeats. sd is empty when a point
/// has fewer than 2 repeats.
void write_curve_csv(const std::filesystem::path& path,
                     std::span<const DiagnosticCurve> curves);

struct CurveRow {
    std::string series;
    double x = 0.0;
    double y = 0.0;
    double sd = 0.0;
    bool has_sd = false;
    std::size_t repeats = 1;
};

std::vector<CurveRow> read_curve_csv(const std::filesystem::path& path);

struct NamedMatrix {
    std::vector<std::string> row_names;
    std::vector<std::string> col_names;
    Matrix values;
};

/// Matrix file with row/column headers (class or feature names).
void write_matrix_csv(const std::filesystem::path& path, const NamedMatrix& m);
NamedMatrix read_matrix_csv(const std::filesystem::path& path);

/// Two-column (true,predicted) class-name file -> confusion matrix input.
struct LabelPairs {
    std::vector<int> truth;
    std::vector<int> predicted;
    std::vector<std::string> class_names;
};
LabelPairs load_prediction_csv(const std::filesystem::path& path);

/// Write `content` to path via a temp file + rename so partial output
/// never lands under the final name.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

} // namespace classdiag
