#pragma once

#include "oodkit/detectors.hpp"
#include "oodkit/metrics.hpp"
#include "oodkit/mlp.hpp"
#include "oodkit/toy.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ood {

enum class ProxyMode { RealOod, Fgsm };

/// End-to-end half-moon experiment: generate data, train the classifier,
/// fit every indicator in the penultimate feature space, compose the two
/// detectors, fit the ensemble, and evaluate everything on held-out data.
struct ToyPipelineConfig {
    std::uint64_t seed = 0;
    Eigen::Index n_train_per_class = 500;
    Eigen::Index n_val_per_class = 250;
    Eigen::Index n_test_per_class = 500;
    Eigen::Index n_ood_val_per_cluster = 100;
    Eigen::Index n_ood_test_per_cluster = 200;
    double noise_sigma = 0.1;
    std::array<Eigen::Vector2d, 3> cluster_centers = ToyConfig{}.cluster_centers;
    std::array<double, 3> cluster_sigmas = ToyConfig{}.cluster_sigmas;
    std::vector<int> arch = {2, 50, 2, 2};
    // Small batches give the classifier a rougher decision surface around the
    // moon tips, which is what lets the near-manifold clusters stay hard for
    // the class-conditional indicators while the neighborhood ones still see
    // them. Larger batches smooth the tips and wash that grading out.
    TrainConfig train_cfg = [] {
        TrainConfig t;
        t.batch_size = 16;
        return t;
    }();
    OdinParams odin;
    double retained_fraction = 0.4;
    int k = 10;
    double fgsm_epsilon = 0.2;
    double tpr_target = 0.95;
};

/// One table row: metrics against the A+B+C test union plus the fraction of
/// each cluster detected at the target TPR.
struct ToyRow {
    std::string name;
    MetricsReport overall;
    std::array<double, 3> cluster_tnr = {0.0, 0.0, 0.0};
};

struct ToyPipelineResult {
    double train_accuracy = 0.0;
    std::vector<ToyRow> indicators;  // sbp, odin, knn_entropy, conformance, mahalanobis, pca
    ToyRow detector1;                // odin (AU) + mahalanobis (EU)
    ToyRow detector2;                // conformance (AU) + pca (EU)
    ToyRow ensemble;                 // weights fitted on real OOD validation rows
    ToyRow ensemble_fgsm;            // weights fitted on FGSM proxies instead

    const ToyRow* find(const std::string& name) const;
};

/// Run the pipeline; when out_dir is set, also write every intermediate file
/// (datasets, models, scores, reports) into it. All randomness derives from
/// cfg.seed, so two runs with the same config produce identical files.
ToyPipelineResult run_toy_pipeline(const ToyPipelineConfig& cfg,
                                   const std::optional<std::filesystem::path>& out_dir = {});

/// TNR@TPR comparison table over one or more seeds (mean and standard
/// deviation per row when several results are given). Rows are ordered
/// indicators, detectors, ensemble.
std::string toy_summary_table(const std::vector<ToyPipelineResult>& results, ProxyMode proxy,
                              double tpr_target);

}  // namespace ood
