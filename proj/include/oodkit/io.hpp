#pragma once

#include "oodkit/dataset.hpp"
#include "oodkit/detectors.hpp"
#include "oodkit/ensemble.hpp"
#include "oodkit/metrics.hpp"
#include "oodkit/mlp.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ood {

// CSV feature files: header `id,label,f0,...,f{d-1}[,p0,...,p{nc-1}][,cluster]`,
// UTF-8, LF line endings, doubles rendered as shortest round-trip decimals.

/// `renormalize` relaxes the softmax row-sum check and rescales each row to
/// sum to 1 after parsing (explicit opt-in for loose external data; negative
/// or non-finite entries are still rejected).
FeatureDataset read_features(const std::filesystem::path& path, bool renormalize = false);
void write_features(const FeatureDataset& data, const std::filesystem::path& path);

struct ScoreRow {
    std::string id;
    double score = 0.0;
};

/// `id,score` CSV, column order fixed.
void write_scores(const std::vector<ScoreRow>& rows, const std::filesystem::path& path);
std::vector<ScoreRow> read_scores(const std::filesystem::path& path);

Vector scores_as_vector(const std::vector<ScoreRow>& rows);

void write_report(const MetricsReport& report, const std::filesystem::path& path);
MetricsReport read_report(const std::filesystem::path& path);

/// Aligned plain-text rendering, including the score orientation note.
std::string report_table(const MetricsReport& report);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(const void* data, std::size_t size);

/// FNV-1a of a file's bytes, rendered as 16 lowercase hex digits.
std::string file_content_hash(const std::filesystem::path& path);

// Model JSON. Every document carries `format_version` and `kind`
// (mlp | mahalanobis | pca | conformance | knn_entropy | detector | ensemble).
// Writing is deterministic; write-read-write is byte identical.

inline constexpr int kModelFormatVersion = 1;

void write_model(const nlohmann::json& model, const std::filesystem::path& path);

/// Parse + validate the envelope (format_version, kind present).
nlohmann::json read_model(const std::filesystem::path& path);

std::string model_kind(const nlohmann::json& model);

nlohmann::json mlp_to_json(const MlpModel& model);
MlpModel mlp_from_json(const nlohmann::json& j);

nlohmann::json mahalanobis_to_json(const GaussianClassModel& model);
GaussianClassModel mahalanobis_from_json(const nlohmann::json& j);

nlohmann::json pca_to_json(const PcaClassModel& model);
PcaClassModel pca_from_json(const nlohmann::json& j);

// kNN-backed models reference their reference set by path + content hash
// instead of embedding it. `reference_path` is recorded verbatim; relative
// paths resolve against the model file's directory on load, and a changed
// hash fails the load.

nlohmann::json conformance_to_json(const ConformanceModel& model, const std::string& reference_path,
                                   const std::string& reference_hash);
ConformanceModel conformance_from_json(const nlohmann::json& j,
                                       const std::filesystem::path& model_dir);

nlohmann::json knn_entropy_to_json(const KnnEntropyModel& model, const std::string& reference_path,
                                   const std::string& reference_hash);
KnnEntropyModel knn_entropy_from_json(const nlohmann::json& j,
                                      const std::filesystem::path& model_dir);

nlohmann::json detector_to_json(const DetectorComposition& detector);
DetectorComposition detector_from_json(const nlohmann::json& j);

nlohmann::json ensemble_to_json(const EnsembleModel& model);
EnsembleModel ensemble_from_json(const nlohmann::json& j);

}  // namespace ood
