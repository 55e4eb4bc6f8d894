#include "oodkit/dataset.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace ood {

std::vector<int> FeatureDataset::class_ids() const {
    std::set<int> ids;
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
        if (labels[i] >= 0) ids.insert(labels[i]);
    }
    return {ids.begin(), ids.end()};
}

std::vector<Eigen::Index> FeatureDataset::labeled_rows() const {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
        if (labels[i] >= 0) rows.push_back(i);
    }
    return rows;
}

FeatureDataset FeatureDataset::select(const std::vector<Eigen::Index>& selected) const {
    FeatureDataset out;
    const auto n = static_cast<Eigen::Index>(selected.size());
    out.features.resize(n, features.cols());
    out.labels.resize(n);
    if (has_softmax()) out.softmax.resize(n, softmax.cols());
    if (has_cluster()) out.cluster.resize(n);
    out.ids.reserve(selected.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index r = selected[static_cast<std::size_t>(i)];
        if (r < 0 || r >= rows()) throw std::out_of_range("FeatureDataset::select: bad row index");
        out.features.row(i) = features.row(r);
        out.labels[i] = labels[r];
        if (has_softmax()) out.softmax.row(i) = softmax.row(r);
        if (has_cluster()) out.cluster[i] = cluster[r];
        out.ids.push_back(ids[static_cast<std::size_t>(r)]);
    }
    return out;
}

FeatureDataset concat(const FeatureDataset& a, const FeatureDataset& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("concat: feature dimension mismatch");
    if (a.has_softmax() != b.has_softmax() || (a.has_softmax() && a.softmax.cols() != b.softmax.cols()))
        throw std::invalid_argument("concat: softmax column mismatch");
    if (a.has_cluster() != b.has_cluster())
        throw std::invalid_argument("concat: cluster column mismatch");

    FeatureDataset out;
    const Eigen::Index n = a.rows() + b.rows();
    out.features.resize(n, a.dim());
    out.features << a.features, b.features;
    out.labels.resize(n);
    out.labels << a.labels, b.labels;
    if (a.has_softmax()) {
        out.softmax.resize(n, a.softmax.cols());
        out.softmax << a.softmax, b.softmax;
    }
    if (a.has_cluster()) {
        out.cluster.resize(n);
        out.cluster << a.cluster, b.cluster;
    }
    out.ids = a.ids;
    out.ids.insert(out.ids.end(), b.ids.begin(), b.ids.end());
    return out;
}

}  // namespace ood
