#include "oodkit/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace ood {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------- text files

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (!in.good() && !in.eof()) throw std::runtime_error("cannot read " + path.string());
    return std::move(buffer).str();
}

void write_text(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);  // best effort; open() reports failure
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    out.flush();
    if (!out.good()) throw std::runtime_error("cannot write " + path.string());
}

// ------------------------------------------------------------- CSV rendering

std::string format_double(double value) {
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return std::string(buffer, ptr);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

[[noreturn]] void csv_error(const char* who, const std::string& what, std::size_t line_no) {
    throw std::runtime_error(std::string(who) + ": " + what + " at line " +
                             std::to_string(line_no));
}

double parse_double(std::string_view field, const char* who, std::size_t line_no) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        csv_error(who, "malformed number '" + std::string(field) + "'", line_no);
    if (!std::isfinite(value)) csv_error(who, "non-finite value", line_no);
    return value;
}

int parse_int(std::string_view field, const char* who, std::size_t line_no) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        csv_error(who, "malformed integer '" + std::string(field) + "'", line_no);
    return value;
}

/// Lines of `text` split on LF. A single trailing empty segment (from the
/// final newline) is dropped; embedded CR bytes are rejected.
std::vector<std::string_view> split_lines(std::string_view text, const char* who) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < text.size()) lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    for (std::size_t i = 0; i < lines.size(); ++i)
        if (lines[i].find('\r') != std::string_view::npos)
            csv_error(who, "carriage return (LF line endings required)", i + 1);
    return lines;
}

void check_id(const std::string& id, const char* who) {
    if (id.find(',') != std::string::npos || id.find('\n') != std::string::npos ||
        id.find('\r') != std::string::npos)
        throw std::invalid_argument(std::string(who) + ": id '" + id +
                                    "' contains a separator character");
}

// ---------------------------------------------------------------- JSON bits

json envelope(const char* kind) {
    return json{{"format_version", kModelFormatVersion}, {"kind", kind}};
}

const json& require(const json& j, const char* key, const char* what) {
    const auto it = j.find(key);
    if (it == j.end())
        throw std::runtime_error(std::string(what) + ": missing field '" + key + "'");
    return *it;
}

void check_kind(const json& j, const char* kind) {
    if (model_kind(j) != kind)
        throw std::runtime_error(std::string("expected a '") + kind + "' model, got '" +
                                 model_kind(j) + "'");
}

double double_from_json(const json& j, const char* what) {
    if (!j.is_number()) throw std::runtime_error(std::string(what) + ": expected a number");
    const double value = j.get<double>();
    if (!std::isfinite(value))
        throw std::runtime_error(std::string(what) + ": non-finite number");
    return value;
}

json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Vector vector_from_json(const json& j, const char* what) {
    if (!j.is_array()) throw std::runtime_error(std::string(what) + ": expected an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = double_from_json(j[static_cast<std::size_t>(i)], what);
    return v;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        rows.push_back(vector_to_json(m.row(r).transpose()));
    return rows;
}

Matrix matrix_from_json(const json& j, const char* what) {
    if (!j.is_array()) throw std::runtime_error(std::string(what) + ": expected an array");
    const auto n_rows = static_cast<Eigen::Index>(j.size());
    if (n_rows == 0) return Matrix(0, 0);
    const Vector first = vector_from_json(j[0], what);
    Matrix m(n_rows, first.size());
    m.row(0) = first.transpose();
    for (Eigen::Index r = 1; r < n_rows; ++r) {
        const Vector row = vector_from_json(j[static_cast<std::size_t>(r)], what);
        if (row.size() != m.cols())
            throw std::runtime_error(std::string(what) + ": ragged matrix rows");
        m.row(r) = row.transpose();
    }
    return m;
}

json ints_to_json(const std::vector<int>& v) { return json(v); }

std::vector<int> ints_from_json(const json& j, const char* what) {
    if (!j.is_array()) throw std::runtime_error(std::string(what) + ": expected an array");
    std::vector<int> out;
    out.reserve(j.size());
    for (const json& item : j) {
        if (!item.is_number_integer())
            throw std::runtime_error(std::string(what) + ": expected integers");
        out.push_back(item.get<int>());
    }
    return out;
}

json logistic_payload(const LogisticModel& model) {
    return json{{"beta", vector_to_json(model.beta)},
                {"beta0", model.beta0},
                {"channel_mean", vector_to_json(model.channel_mean)},
                {"channel_std", vector_to_json(model.channel_std)}};
}

LogisticModel logistic_from_payload(const json& j) {
    LogisticModel model;
    model.beta = vector_from_json(require(j, "beta", "logistic"), "logistic beta");
    model.beta0 = double_from_json(require(j, "beta0", "logistic"), "logistic beta0");
    model.channel_mean =
        vector_from_json(require(j, "channel_mean", "logistic"), "logistic channel_mean");
    model.channel_std =
        vector_from_json(require(j, "channel_std", "logistic"), "logistic channel_std");
    if (model.channel_mean.size() != model.beta.size() ||
        model.channel_std.size() != model.beta.size())
        throw std::runtime_error("logistic: channel constant sizes disagree with beta");
    return model;
}

json gaussian_payload(const GaussianClassModel& model) {
    json covariances = json::array();
    json precisions = json::array();
    json means = json::array();
    for (std::size_t c = 0; c < model.n_classes(); ++c) means.push_back(vector_to_json(model.means[c]));
    // tied mode stores a single pooled covariance/precision pair
    for (const Matrix& cov : model.covariances) covariances.push_back(matrix_to_json(cov));
    for (const Matrix& prec : model.precisions) precisions.push_back(matrix_to_json(prec));
    return json{{"class_ids", ints_to_json(model.class_ids)},
                {"covariance_mode",
                 model.covariance_mode == CovarianceMode::Tied ? "tied" : "per_class"},
                {"covariances", covariances},
                {"means", means},
                {"precisions", precisions},
                {"reg_lambda", model.reg_lambda}};
}

GaussianClassModel gaussian_from_payload(const json& j) {
    GaussianClassModel model;
    model.class_ids = ints_from_json(require(j, "class_ids", "gaussian"), "gaussian class_ids");
    const std::string mode = require(j, "covariance_mode", "gaussian").get<std::string>();
    if (mode == "tied")
        model.covariance_mode = CovarianceMode::Tied;
    else if (mode == "per_class")
        model.covariance_mode = CovarianceMode::PerClass;
    else
        throw std::runtime_error("gaussian: unknown covariance_mode '" + mode + "'");
    for (const json& m : require(j, "means", "gaussian"))
        model.means.push_back(vector_from_json(m, "gaussian mean"));
    for (const json& m : require(j, "covariances", "gaussian"))
        model.covariances.push_back(matrix_from_json(m, "gaussian covariance"));
    for (const json& m : require(j, "precisions", "gaussian"))
        model.precisions.push_back(matrix_from_json(m, "gaussian precision"));
    model.reg_lambda = double_from_json(require(j, "reg_lambda", "gaussian"), "gaussian reg_lambda");

    if (model.means.size() != model.class_ids.size())
        throw std::runtime_error("gaussian: class count disagrees across fields");
    const std::size_t n_cov =
        model.covariance_mode == CovarianceMode::Tied ? 1 : model.class_ids.size();
    if (model.covariances.size() != n_cov || model.precisions.size() != n_cov)
        throw std::runtime_error("gaussian: covariance count disagrees with mode");
    return model;
}

json reference_payload(const std::string& reference_path, const std::string& reference_hash) {
    return json{{"content_hash", reference_hash}, {"path", reference_path}};
}

/// Resolve + hash-check a referenced reference-set CSV, then load it.
FeatureDataset load_reference(const json& j, const fs::path& model_dir, const char* what) {
    const json& ref = require(j, "reference", what);
    const auto rel = fs::path(require(ref, "path", what).get<std::string>());
    const fs::path resolved = rel.is_absolute() ? rel : model_dir / rel;
    const std::string expected = require(ref, "content_hash", what).get<std::string>();
    const std::string actual = file_content_hash(resolved);
    if (actual != expected)
        throw std::runtime_error(std::string(what) + ": reference set hash mismatch for " +
                                 resolved.string() + " (expected " + expected + ", got " +
                                 actual + ")");
    return read_features(resolved);
}

}  // namespace

// ------------------------------------------------------------- feature CSVs

FeatureDataset read_features(const fs::path& path, bool renormalize) {
    constexpr const char* who = "read_features";
    const std::string text = read_text(path);
    const std::vector<std::string_view> lines = split_lines(text, who);
    if (lines.empty()) csv_error(who, "missing header", 1);

    const std::vector<std::string_view> header = split_fields(lines[0]);
    std::size_t pos = 0;
    const auto expect = [&](std::string_view token) {
        if (pos >= header.size() || header[pos] != token)
            csv_error(who, "invalid header (expected '" + std::string(token) + "')", 1);
        ++pos;
    };
    expect("id");
    expect("label");
    Eigen::Index d = 0;
    while (pos < header.size() && header[pos] == "f" + std::to_string(d)) ++pos, ++d;
    if (d == 0) csv_error(who, "invalid header (no feature columns)", 1);
    Eigen::Index nc = 0;
    while (pos < header.size() && header[pos] == "p" + std::to_string(nc)) ++pos, ++nc;
    bool has_cluster = false;
    if (pos < header.size() && header[pos] == "cluster") ++pos, has_cluster = true;
    if (pos != header.size()) csv_error(who, "invalid header (unexpected trailing columns)", 1);

    const std::size_t n_fields = 2 + static_cast<std::size_t>(d + nc) + (has_cluster ? 1 : 0);
    const auto n_rows = static_cast<Eigen::Index>(lines.size() - 1);

    FeatureDataset data;
    data.features.resize(n_rows, d);
    data.labels.resize(n_rows);
    if (nc > 0) data.softmax.resize(n_rows, nc);
    if (has_cluster) data.cluster.resize(n_rows);
    data.ids.reserve(static_cast<std::size_t>(n_rows));

    for (Eigen::Index r = 0; r < n_rows; ++r) {
        const std::size_t line_no = static_cast<std::size_t>(r) + 2;
        const std::vector<std::string_view> fields = split_fields(lines[line_no - 1]);
        if (fields.size() != n_fields)
            csv_error(who,
                      "wrong field count (got " + std::to_string(fields.size()) + ", expected " +
                          std::to_string(n_fields) + ")",
                      line_no);
        std::size_t f = 0;
        data.ids.emplace_back(fields[f++]);
        data.labels[r] = parse_int(fields[f++], who, line_no);
        for (Eigen::Index c = 0; c < d; ++c)
            data.features(r, c) = parse_double(fields[f++], who, line_no);
        if (nc > 0) {
            for (Eigen::Index c = 0; c < nc; ++c)
                data.softmax(r, c) = parse_double(fields[f++], who, line_no);
            if (data.softmax.row(r).minCoeff() < 0.0)
                csv_error(who, "negative softmax entry", line_no);
            if (!renormalize && std::abs(data.softmax.row(r).sum() - 1.0) > 1e-6)
                csv_error(who, "softmax row does not sum to 1", line_no);
        }
        if (has_cluster) data.cluster[r] = parse_int(fields[f++], who, line_no);
    }
    if (renormalize && data.has_softmax()) renormalize_softmax(data);
    return data;
}

void write_features(const FeatureDataset& data, const fs::path& path) {
    std::string out = "id,label";
    for (Eigen::Index c = 0; c < data.dim(); ++c) out += ",f" + std::to_string(c);
    for (Eigen::Index c = 0; c < data.softmax.cols(); ++c)
        if (data.has_softmax()) out += ",p" + std::to_string(c);
    if (data.has_cluster()) out += ",cluster";
    out += '\n';

    if (static_cast<Eigen::Index>(data.ids.size()) != data.rows())
        throw std::invalid_argument("write_features: ids and features disagree on row count");
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        check_id(data.ids[static_cast<std::size_t>(r)], "write_features");
        out += data.ids[static_cast<std::size_t>(r)];
        out += ',';
        out += std::to_string(data.labels[r]);
        for (Eigen::Index c = 0; c < data.dim(); ++c) {
            out += ',';
            out += format_double(data.features(r, c));
        }
        if (data.has_softmax())
            for (Eigen::Index c = 0; c < data.softmax.cols(); ++c) {
                out += ',';
                out += format_double(data.softmax(r, c));
            }
        if (data.has_cluster()) {
            out += ',';
            out += std::to_string(data.cluster[r]);
        }
        out += '\n';
    }
    write_text(path, out);
}

// --------------------------------------------------------------- score CSVs

void write_scores(const std::vector<ScoreRow>& rows, const fs::path& path) {
    std::string out = "id,score\n";
    for (const ScoreRow& row : rows) {
        check_id(row.id, "write_scores");
        if (!std::isfinite(row.score))
            throw std::invalid_argument("write_scores: non-finite score for id '" + row.id + "'");
        out += row.id;
        out += ',';
        out += format_double(row.score);
        out += '\n';
    }
    write_text(path, out);
}

std::vector<ScoreRow> read_scores(const fs::path& path) {
    constexpr const char* who = "read_scores";
    const std::string text = read_text(path);
    const std::vector<std::string_view> lines = split_lines(text, who);
    if (lines.empty() || lines[0] != "id,score") csv_error(who, "invalid header", 1);
    std::vector<ScoreRow> rows;
    rows.reserve(lines.size() - 1);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::vector<std::string_view> fields = split_fields(lines[i]);
        if (fields.size() != 2) csv_error(who, "wrong field count", i + 1);
        rows.push_back({std::string(fields[0]), parse_double(fields[1], who, i + 1)});
    }
    return rows;
}

Vector scores_as_vector(const std::vector<ScoreRow>& rows) {
    Vector v(static_cast<Eigen::Index>(rows.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rows[static_cast<std::size_t>(i)].score;
    return v;
}

// ------------------------------------------------------------------ reports

void write_report(const MetricsReport& report, const fs::path& path) {
    json j = envelope("metrics_report");
    j["auroc"] = report.auroc;
    j["aupr_in"] = report.aupr_in;
    j["aupr_out"] = report.aupr_out;
    j["dtacc"] = report.dtacc;
    j["n_id"] = static_cast<std::int64_t>(report.n_id);
    j["n_ood"] = static_cast<std::int64_t>(report.n_ood);
    j["tnr_at_tpr95"] = report.tnr_at_tpr95;
    write_text(path, j.dump(2) + '\n');
}

MetricsReport read_report(const fs::path& path) {
    const json j = read_model(path);
    check_kind(j, "metrics_report");
    MetricsReport report;
    report.auroc = double_from_json(require(j, "auroc", "report"), "report auroc");
    report.aupr_in = double_from_json(require(j, "aupr_in", "report"), "report aupr_in");
    report.aupr_out = double_from_json(require(j, "aupr_out", "report"), "report aupr_out");
    report.dtacc = double_from_json(require(j, "dtacc", "report"), "report dtacc");
    report.tnr_at_tpr95 =
        double_from_json(require(j, "tnr_at_tpr95", "report"), "report tnr_at_tpr95");
    report.n_id = require(j, "n_id", "report").get<std::int64_t>();
    report.n_ood = require(j, "n_ood", "report").get<std::int64_t>();
    return report;
}

std::string report_table(const MetricsReport& report) {
    char line[96];
    std::string out;
    const auto add = [&](const char* name, double value) {
        std::snprintf(line, sizeof line, "%-12s %8.4f\n", name, value);
        out += line;
    };
    add("TNR@TPR", report.tnr_at_tpr95);
    add("AUROC", report.auroc);
    add("DTACC", report.dtacc);
    add("AUPR-IN", report.aupr_in);
    add("AUPR-OUT", report.aupr_out);
    std::snprintf(line, sizeof line, "%-12s %8lld\n", "N-ID",
                  static_cast<long long>(report.n_id));
    out += line;
    std::snprintf(line, sizeof line, "%-12s %8lld\n", "N-OOD",
                  static_cast<long long>(report.n_ood));
    out += line;
    out += "(scores oriented so that higher = more out-of-distribution)\n";
    return out;
}

// ------------------------------------------------------------------ hashing

std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t hash = 14695981039346656037ULL;
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= bytes[i];
        hash *= 1099511628211ULL;
    }
    return hash;
}

std::string file_content_hash(const fs::path& path) {
    const std::string bytes = read_text(path);
    char buffer[17];
    std::snprintf(buffer, sizeof buffer, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
    return buffer;
}

// --------------------------------------------------------------- model JSON

void write_model(const json& model, const fs::path& path) {
    write_text(path, model.dump(2) + '\n');
}

json read_model(const fs::path& path) {
    const std::string text = read_text(path);
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw std::runtime_error("read_model: " + path.string() + " is not valid JSON");
    if (!j.is_object()) throw std::runtime_error("read_model: expected a JSON object");
    const json& version = require(j, "format_version", "read_model");
    if (!version.is_number_integer() || version.get<int>() != kModelFormatVersion)
        throw std::runtime_error("read_model: unsupported format_version");
    if (!require(j, "kind", "read_model").is_string())
        throw std::runtime_error("read_model: 'kind' must be a string");
    return j;
}

std::string model_kind(const json& model) {
    return require(model, "kind", "model_kind").get<std::string>();
}

json mlp_to_json(const MlpModel& model) {
    json j = envelope("mlp");
    j["layer_sizes"] = ints_to_json(model.layer_sizes);
    json weights = json::array();
    json biases = json::array();
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
        weights.push_back(matrix_to_json(model.weights[l]));
        biases.push_back(vector_to_json(model.biases[l]));
    }
    j["weights"] = weights;
    j["biases"] = biases;
    return j;
}

MlpModel mlp_from_json(const json& j) {
    check_kind(j, "mlp");
    MlpModel model;
    model.layer_sizes = ints_from_json(require(j, "layer_sizes", "mlp"), "mlp layer_sizes");
    if (model.layer_sizes.size() < 2) throw std::runtime_error("mlp: need at least 2 layers");
    for (const json& w : require(j, "weights", "mlp"))
        model.weights.push_back(matrix_from_json(w, "mlp weights"));
    for (const json& b : require(j, "biases", "mlp"))
        model.biases.push_back(vector_from_json(b, "mlp biases"));
    if (model.weights.size() + 1 != model.layer_sizes.size() ||
        model.biases.size() != model.weights.size())
        throw std::runtime_error("mlp: layer count disagrees across fields");
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        if (model.weights[l].rows() != model.layer_sizes[l + 1] ||
            model.weights[l].cols() != model.layer_sizes[l] ||
            model.biases[l].size() != model.layer_sizes[l + 1])
            throw std::runtime_error("mlp: weight shape disagrees with layer_sizes at layer " +
                                     std::to_string(l));
    }
    return model;
}

json mahalanobis_to_json(const GaussianClassModel& model) {
    json j = envelope("mahalanobis");
    j.update(gaussian_payload(model));
    return j;
}

GaussianClassModel mahalanobis_from_json(const json& j) {
    check_kind(j, "mahalanobis");
    return gaussian_from_payload(j);
}

json pca_to_json(const PcaClassModel& model) {
    json j = envelope("pca");
    j["class_ids"] = ints_to_json(model.class_ids);
    json means = json::array();
    json components = json::array();
    for (std::size_t c = 0; c < model.class_ids.size(); ++c) {
        means.push_back(vector_to_json(model.means[c]));
        components.push_back(matrix_to_json(model.components[c]));
    }
    j["means"] = means;
    j["components"] = components;
    j["retained_fraction"] = model.retained_fraction;
    return j;
}

PcaClassModel pca_from_json(const json& j) {
    check_kind(j, "pca");
    PcaClassModel model;
    model.class_ids = ints_from_json(require(j, "class_ids", "pca"), "pca class_ids");
    for (const json& m : require(j, "means", "pca"))
        model.means.push_back(vector_from_json(m, "pca mean"));
    for (const json& m : require(j, "components", "pca"))
        model.components.push_back(matrix_from_json(m, "pca components"));
    model.retained_fraction =
        double_from_json(require(j, "retained_fraction", "pca"), "pca retained_fraction");
    if (model.means.size() != model.class_ids.size() ||
        model.components.size() != model.class_ids.size())
        throw std::runtime_error("pca: class count disagrees across fields");
    return model;
}

json conformance_to_json(const ConformanceModel& model, const std::string& reference_path,
                         const std::string& reference_hash) {
    json j = envelope("conformance");
    j["k"] = model.k;
    j["deviation"] =
        model.deviation == DeviationKind::SignedMean ? "signed_mean" : "mean_absolute";
    j["reference"] = reference_payload(reference_path, reference_hash);
    j["stats"] = gaussian_payload(model.stats);
    return j;
}

ConformanceModel conformance_from_json(const json& j, const fs::path& model_dir) {
    check_kind(j, "conformance");
    ConformanceModel model;
    model.k = require(j, "k", "conformance").get<int>();
    const std::string deviation = require(j, "deviation", "conformance").get<std::string>();
    if (deviation == "signed_mean")
        model.deviation = DeviationKind::SignedMean;
    else if (deviation == "mean_absolute")
        model.deviation = DeviationKind::MeanAbsolute;
    else
        throw std::runtime_error("conformance: unknown deviation '" + deviation + "'");
    model.stats = gaussian_from_payload(require(j, "stats", "conformance"));

    const FeatureDataset reference = load_reference(j, model_dir, "conformance");
    model.reference = reference.features;
    model.reference_labels = reference.labels;
    if (model.k < 1 || model.k > model.reference.rows() - 1)
        throw std::runtime_error("conformance: k out of range for the reference set");
    if (model.stats.dim() != model.reference.cols())
        throw std::runtime_error("conformance: reference dimension disagrees with statistics");
    return model;
}

json knn_entropy_to_json(const KnnEntropyModel& model, const std::string& reference_path,
                         const std::string& reference_hash) {
    json j = envelope("knn_entropy");
    j["k"] = model.k;
    j["reference"] = reference_payload(reference_path, reference_hash);
    return j;
}

KnnEntropyModel knn_entropy_from_json(const json& j, const fs::path& model_dir) {
    check_kind(j, "knn_entropy");
    KnnEntropyModel model;
    model.k = require(j, "k", "knn_entropy").get<int>();
    model.reference = load_reference(j, model_dir, "knn_entropy");
    if (model.k < 1 || model.k > model.reference.rows())
        throw std::runtime_error("knn_entropy: k out of range for the reference set");
    return model;
}

json detector_to_json(const DetectorComposition& detector) {
    json j = envelope("detector");
    j["au_name"] = detector.au_name;
    j["eu_name"] = detector.eu_name;
    switch (detector.combiner) {
        case CombinerKind::MaxRule:
            j["combiner"] = "max_rule";
            j["delta_a"] = detector.delta_a;
            j["delta_e"] = detector.delta_e;
            j["au_mean"] = detector.au_mean;
            j["au_std"] = detector.au_std;
            j["eu_mean"] = detector.eu_mean;
            j["eu_std"] = detector.eu_std;
            break;
        case CombinerKind::Linear:
            j["combiner"] = "linear";
            j["w1"] = detector.w1;
            j["w2"] = detector.w2;
            break;
        case CombinerKind::Logistic:
            j["combiner"] = "logistic";
            j["logistic"] = logistic_payload(detector.logistic);
            break;
    }
    return j;
}

DetectorComposition detector_from_json(const json& j) {
    check_kind(j, "detector");
    DetectorComposition detector;
    detector.au_name = require(j, "au_name", "detector").get<std::string>();
    detector.eu_name = require(j, "eu_name", "detector").get<std::string>();
    const std::string combiner = require(j, "combiner", "detector").get<std::string>();
    if (combiner == "max_rule") {
        detector.combiner = CombinerKind::MaxRule;
        detector.delta_a = double_from_json(require(j, "delta_a", "detector"), "detector delta_a");
        detector.delta_e = double_from_json(require(j, "delta_e", "detector"), "detector delta_e");
        detector.au_mean = double_from_json(require(j, "au_mean", "detector"), "detector au_mean");
        detector.au_std = double_from_json(require(j, "au_std", "detector"), "detector au_std");
        detector.eu_mean = double_from_json(require(j, "eu_mean", "detector"), "detector eu_mean");
        detector.eu_std = double_from_json(require(j, "eu_std", "detector"), "detector eu_std");
        if (!(detector.au_std > 0.0) || !(detector.eu_std > 0.0))
            throw std::runtime_error("detector: channel std must be positive");
    } else if (combiner == "linear") {
        detector.combiner = CombinerKind::Linear;
        detector.w1 = double_from_json(require(j, "w1", "detector"), "detector w1");
        detector.w2 = double_from_json(require(j, "w2", "detector"), "detector w2");
    } else if (combiner == "logistic") {
        detector.combiner = CombinerKind::Logistic;
        detector.logistic = logistic_from_payload(require(j, "logistic", "detector"));
        if (detector.logistic.channels() != 2)
            throw std::runtime_error("detector: logistic combiner must have 2 channels");
    } else {
        throw std::runtime_error("detector: unknown combiner '" + combiner + "'");
    }
    return detector;
}

json ensemble_to_json(const EnsembleModel& model) {
    json j = envelope("ensemble");
    j["detector_names"] = json(model.detector_names);
    j["logistic"] = logistic_payload(model.logistic);
    return j;
}

EnsembleModel ensemble_from_json(const json& j) {
    check_kind(j, "ensemble");
    EnsembleModel model;
    const json& names = require(j, "detector_names", "ensemble");
    if (!names.is_array()) throw std::runtime_error("ensemble: detector_names must be an array");
    for (const json& name : names) {
        if (!name.is_string())
            throw std::runtime_error("ensemble: detector_names must hold strings");
        model.detector_names.push_back(name.get<std::string>());
    }
    model.logistic = logistic_from_payload(require(j, "logistic", "ensemble"));
    if (model.logistic.channels() != static_cast<Eigen::Index>(model.detector_names.size()))
        throw std::runtime_error("ensemble: channel count disagrees with detector_names");
    return model;
}

}  // namespace ood
