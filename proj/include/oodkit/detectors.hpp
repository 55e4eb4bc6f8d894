#pragma once

#include "oodkit/dataset.hpp"
#include "oodkit/mlp.hpp"
#include "oodkit/numerics.hpp"

#include <vector>

namespace ood {

// Every indicator in this header emits an OOD score where higher means more
// out-of-distribution.

/// Shannon entropy -sum p_i ln p_i with 0 ln 0 == 0. Rejects vectors whose
/// sum is off 1 by more than 1e-6 or with negative entries.
double score_entropy(const Eigen::Ref<const Vector>& softmax);

/// 1 - max_i p_i.
double score_sbp(const Eigen::Ref<const Vector>& softmax);

struct OdinParams {
    double epsilon = 0.005;
    double temperature = 10.0;
};

/// Confidence after the ODIN input perturbation: perturb
/// x~ = x - eps * sign(-grad_x ln max_i softmax_i(logits(x)/T)), then return
/// 1 - max_i softmax_i(logits(x~)/T).
double score_odin(const MlpModel& model, const Eigen::Ref<const Vector>& x,
                  const OdinParams& params = {});

/// Gaussian class model for Mahalanobis scoring (thin wrapper over
/// class_statistics with the detector-facing defaults).
GaussianClassModel fit_mahalanobis(const FeatureDataset& data,
                                   CovarianceMode mode = CovarianceMode::Tied,
                                   double reg_lambda = kAutoRegLambda);

/// min over classes of the squared Mahalanobis distance to that class mean.
double score_mahalanobis(const GaussianClassModel& model, const Eigen::Ref<const Vector>& x);

/// Per-class mean plus the top eigenvectors of the class covariance.
struct PcaClassModel {
    std::vector<int> class_ids;
    std::vector<Vector> means;
    std::vector<Matrix> components;  // orthonormal columns, ceil(fraction * d) of them
    double retained_fraction = 0.4;

    Eigen::Index dim() const { return means.empty() ? 0 : means.front().size(); }
};

PcaClassModel fit_pca(const FeatureDataset& data, double retained_fraction);

/// min over classes of || (x - mu_c) - V_c V_c^T (x - mu_c) ||^2.
double score_pca(const PcaClassModel& model, const Eigen::Ref<const Vector>& x);

/// How the per-dimension deviation of the neighbors is aggregated.
enum class DeviationKind { SignedMean, MeanAbsolute };

/// Class-conditional Gaussian fitted over kNN conformance vectors.
struct ConformanceModel {
    int k = 10;
    Matrix reference;               // training features, one row per sample
    Eigen::VectorXi reference_labels;
    DeviationKind deviation = DeviationKind::SignedMean;
    GaussianClassModel stats;       // class means + tied covariance of the vectors
};

/// Exact k nearest neighbors of x in the rows of `reference` by Euclidean
/// distance, ascending; ties broken by lower row index. `exclude` skips one
/// row (used when scoring a reference point against itself).
std::vector<Eigen::Index> knn(const Matrix& reference, const Eigen::Ref<const Vector>& x, int k,
                              Eigen::Index exclude = -1);

/// Mean deviation of the k nearest reference rows from x, per dimension.
Vector conformance_vector(const Matrix& reference, const Eigen::Ref<const Vector>& x, int k,
                          DeviationKind deviation = DeviationKind::SignedMean,
                          Eigen::Index exclude = -1);

/// Fit conformance statistics over the labeled rows of `data`. Each training
/// row's conformance vector is computed against the other rows (self
/// excluded by index), then modeled with class means and a tied covariance.
ConformanceModel fit_conformance(const FeatureDataset& data, int k,
                                 DeviationKind deviation = DeviationKind::SignedMean,
                                 double reg_lambda = kAutoRegLambda);

/// Squared Mahalanobis distance of x's conformance vector to the closest
/// class conformance distribution.
double score_conformance(const ConformanceModel& model, const Eigen::Ref<const Vector>& x);

/// Entropy of the label histogram over the k nearest reference rows. All
/// reference rows must be labeled.
double score_knn_label_entropy(const FeatureDataset& reference, const Eigen::Ref<const Vector>& x,
                               int k);

/// Reference set + k bundled for serialization of the label-entropy indicator.
struct KnnEntropyModel {
    int k = 10;
    FeatureDataset reference;
};

/// Divide each softmax row by its sum (explicit opt-in for loose data).
void renormalize_softmax(FeatureDataset& data);

}  // namespace ood
