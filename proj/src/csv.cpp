#include "classdiag/csv.hpp"

#include "classdiag/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace classdiag {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_finite(const std::string& cell, std::size_t row, const std::string& column) {
    const std::string t = trim(cell);
    double value = 0.0;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        throw DataError(ErrorKind::parse, "non-numeric or non-finite cell at data row " +
                                              std::to_string(row) + ", column '" + column + "'");
    }
    return value;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError(ErrorKind::schema, "cannot open '" + path.string() + "'");
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    if (lines.empty()) {
        throw DataError(ErrorKind::schema, "'" + path.string() + "' is empty");
    }
    return lines;
}

} // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError(ErrorKind::schema, "cannot open '" + tmp.string() + "' for writing");
        }
        out << content;
        if (!out) {
            throw DataError(ErrorKind::schema, "write to '" + tmp.string() + "' failed");
        }
    }
    std::filesystem::rename(tmp, path);
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
    const auto lines = read_lines(path);
    std::vector<std::string> header = split_line(lines[0]);
    for (auto& h : header) h = trim(h);
    {
        std::unordered_map<std::string, int> seen;
        for (const auto& h : header) {
            if (++seen[h] > 1) {
                throw DataError(ErrorKind::schema, "duplicate header name '" + h + "'");
            }
        }
    }

    std::size_t label_idx = header.size();
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == label_column) label_idx = j;
    }
    if (label_idx == header.size()) {
        throw DataError(ErrorKind::schema, "label column '" + label_column + "' not found");
    }
    if (header.size() < 2) {
        throw DataError(ErrorKind::schema, "need at least one feature column besides the label");
    }

    std::vector<std::string> feature_names;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j != label_idx) feature_names.push_back(header[j]);
    }

    const std::size_t n = lines.size() - 1;
    const std::size_t p = feature_names.size();
    Matrix features(n, p);
    std::vector<int> labels(n);
    std::vector<std::string> class_names;
    std::unordered_map<std::string, int> class_ids;

    for (std::size_t i = 0; i < n; ++i) {
        const auto fields = split_line(lines[i + 1]);
        if (fields.size() != header.size()) {
            throw DataError(ErrorKind::parse, "data row " + std::to_string(i + 1) + " has " +
                                                  std::to_string(fields.size()) + " fields, expected " +
                                                  std::to_string(header.size()));
        }
        std::size_t jj = 0;
        for (std::size_t j = 0; j < fields.size(); ++j) {
            if (j == label_idx) continue;
            features(i, jj) = parse_finite(fields[j], i + 1, header[j]);
            ++jj;
        }
        const std::string label = trim(fields[label_idx]);
        auto [it, inserted] = class_ids.try_emplace(label, static_cast<int>(class_names.size()));
        if (inserted) class_names.push_back(label);
        labels[i] = it->second;
    }
    return Dataset(std::move(features), std::move(labels), std::move(feature_names),
                   std::move(class_names));
}

void save_csv(const Dataset& d, const std::filesystem::path& path,
              const std::string& label_column) {
    std::ostringstream out;
    for (const auto& name : d.feature_names()) out << name << ',';
    out << label_column << '\n';
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        for (std::size_t j = 0; j < d.n_features(); ++j) {
            out << format_double(d.feature(i, j)) << ',';
        }
        out << d.class_names()[static_cast<std::size_t>(d.label(i))] << '\n';
    }
    write_file_atomic(path, out.str());
}

void write_curve_csv(const std::filesystem::path& path,
                     std::span<const DiagnosticCurve> curves) {
    std::ostringstream out;
    out << "series,x,y,sd,repeats\n";
    for (const DiagnosticCurve& curve : curves) {
        for (const CurvePoint& pt : curve.points) {
            out << curve.series << ',' << format_double(pt.control) << ','
                << format_double(pt.mean) << ',';
            if (pt.repeats >= 2) out << format_double(pt.sd);
            out << ',' << pt.repeats << '\n';
        }
    }
    write_file_atomic(path, out.str());
}

std::vector<CurveRow> read_curve_csv(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    if (lines[0] != "series,x,y,sd,repeats") {
        throw DataError(ErrorKind::schema, "'" + path.string() + "' is not a curve csv");
    }
    std::vector<CurveRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_line(lines[i]);
        if (fields.size() != 5) {
            throw DataError(ErrorKind::parse, "curve row " + std::to_string(i) + " malformed");
        }
        CurveRow row;
        row.series = fields[0];
        row.x = parse_finite(fields[1], i, "x");
        row.y = parse_finite(fields[2], i, "y");
        if (!trim(fields[3]).empty()) {
            row.sd = parse_finite(fields[3], i, "sd");
            row.has_sd = true;
        }
        row.repeats = static_cast<std::size_t>(parse_finite(fields[4], i, "repeats"));
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_matrix_csv(const std::filesystem::path& path, const NamedMatrix& m) {
    if (m.values.rows() != m.row_names.size() || m.values.cols() != m.col_names.size()) {
        throw ConfigError(ErrorKind::shape, "matrix csv: name registries do not match the values");
    }
    std::ostringstream out;
    for (const auto& c : m.col_names) out << ',' << c;
    out << '\n';
    for (std::size_t i = 0; i < m.values.rows(); ++i) {
        out << m.row_names[i];
        for (std::size_t j = 0; j < m.values.cols(); ++j) {
            out << ',' << format_double(m.values(i, j));
        }
        out << '\n';
    }
    write_file_atomic(path, out.str());
}

NamedMatrix read_matrix_csv(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    NamedMatrix m;
    const auto header = split_line(lines[0]);
    if (header.size() < 2 || !trim(header[0]).empty()) {
        throw DataError(ErrorKind::schema, "'" + path.string() + "' is not a matrix csv");
    }
    m.col_names.assign(header.begin() + 1, header.end());
    const std::size_t cols = m.col_names.size();
    const std::size_t rows = lines.size() - 1;
    m.values = Matrix(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto fields = split_line(lines[i + 1]);
        if (fields.size() != cols + 1) {
            throw DataError(ErrorKind::parse, "matrix row " + std::to_string(i + 1) + " malformed");
        }
        m.row_names.push_back(fields[0]);
        for (std::size_t j = 0; j < cols; ++j) {
            m.values(i, j) = parse_finite(fields[j + 1], i + 1, m.col_names[j]);
        }
    }
    return m;
}

LabelPairs load_prediction_csv(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    auto header = split_line(lines[0]);
    for (auto& h : header) h = trim(h);
    if (header.size() != 2 || header[0] != "true" || header[1] != "predicted") {
        throw DataError(ErrorKind::schema,
                        "prediction file needs exactly the header 'true,predicted'");
    }
    LabelPairs out;
    std::unordered_map<std::string, int> ids;
    auto intern = [&](const std::string& name) {
        auto [it, inserted] = ids.try_emplace(name, static_cast<int>(out.class_names.size()));
        if (inserted) out.class_names.push_back(name);
        return it->second;
    };
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_line(lines[i]);
        if (fields.size() != 2) {
            throw DataError(ErrorKind::parse, "prediction row " + std::to_string(i) + " malformed");
        }
        out.truth.push_back(intern(trim(fields[0])));
        out.predicted.push_back(intern(trim(fields[1])));
    }
    if (out.truth.empty()) {
        throw DataError(ErrorKind::empty_evaluation, "prediction file has no rows");
    }
    return out;
}

} // namespace classdiag
