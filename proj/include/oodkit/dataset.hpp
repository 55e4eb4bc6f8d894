#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace ood {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Row-oriented feature table. Rows are samples; label -1 marks an
/// unlabeled / OOD-candidate row. The optional softmax block and the toy
/// cluster tag travel with the features through IO so downstream commands
/// can score softmax-based indicators without re-running the classifier.
struct FeatureDataset {
    std::vector<std::string> ids;  // CSV `id` column, preserved verbatim
    Matrix features;               // n x d
    Eigen::VectorXi labels;        // n entries, -1 = unlabeled
    Matrix softmax;                // n x n_c, or 0x0 when absent
    Eigen::VectorXi cluster;       // n entries, or empty when absent

    Eigen::Index rows() const { return features.rows(); }
    Eigen::Index dim() const { return features.cols(); }
    bool has_softmax() const { return softmax.size() > 0; }
    bool has_cluster() const { return cluster.size() > 0; }

    /// Distinct non-negative labels, ascending.
    std::vector<int> class_ids() const;

    /// Rows whose label is >= 0.
    std::vector<Eigen::Index> labeled_rows() const;

    /// Copy of the selected rows (ids, labels, softmax and cluster included).
    FeatureDataset select(const std::vector<Eigen::Index>& rows) const;
};

/// Concatenate rows of two datasets with identical column structure.
FeatureDataset concat(const FeatureDataset& a, const FeatureDataset& b);

}  // namespace ood
