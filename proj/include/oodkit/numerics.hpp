#pragma once

#include "oodkit/dataset.hpp"

#include <Eigen/Core>

#include <stdexcept>
#include <vector>

namespace ood {

enum class CovarianceMode { Tied, PerClass };

/// Sentinel: resolve reg_lambda to 1e-6 * trace(pooled covariance) / d.
inline constexpr double kAutoRegLambda = -1.0;

/// Per-class empirical Gaussians. `covariances` holds the raw empirical
/// matrices (a single pooled one in Tied mode); each precision is the inverse
/// of (covariance + reg_lambda * I).
struct GaussianClassModel {
    std::vector<int> class_ids;
    std::vector<Vector> means;
    CovarianceMode covariance_mode = CovarianceMode::Tied;
    std::vector<Matrix> covariances;
    std::vector<Matrix> precisions;
    double reg_lambda = 0.0;

    Eigen::Index dim() const { return means.empty() ? 0 : means.front().size(); }
    std::size_t n_classes() const { return class_ids.size(); }

    const Matrix& covariance_for(std::size_t class_index) const {
        return covariances[covariance_mode == CovarianceMode::Tied ? 0 : class_index];
    }
    const Matrix& precision_for(std::size_t class_index) const {
        return precisions[covariance_mode == CovarianceMode::Tied ? 0 : class_index];
    }
};

/// Per-class means plus covariance(s) from the labeled rows of `data`.
/// Tied mode pools the within-class scatter over all N labeled rows:
///   sum_c sum_{x in c} (x - mu_c)(x - mu_c)^T / N.
/// PerClass divides each class scatter by that class's count.
/// reg_lambda * I is added before inversion only; pass kAutoRegLambda for the
/// trace-scaled default.
GaussianClassModel class_statistics(const FeatureDataset& data, CovarianceMode mode,
                                    double reg_lambda = kAutoRegLambda);

struct EigenDecomposition {
    Vector eigenvalues;   // descending
    Matrix eigenvectors;  // orthonormal columns, column i pairs with eigenvalues[i]
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Budget is 100
/// sweeps; convergence when the off-diagonal Frobenius norm falls below
/// 1e-12 relative to the matrix norm. Throws on non-symmetric input or a
/// blown budget.
EigenDecomposition symmetric_eig(const Matrix& m);

/// (x - mean)^T precision (x - mean). Accepts row or column expressions.
template <typename DerivedX, typename DerivedM, typename DerivedP>
double mahalanobis_sq(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedM>& mean,
                      const Eigen::MatrixBase<DerivedP>& precision) {
    if (x.size() != mean.size() || precision.rows() != precision.cols() ||
        precision.rows() != x.size()) {
        throw std::invalid_argument("mahalanobis_sq: dimension mismatch");
    }
    const Vector diff = x.derived().reshaped() - mean.derived().reshaped();
    return diff.dot(precision.derived() * diff);
}

}  // namespace ood
