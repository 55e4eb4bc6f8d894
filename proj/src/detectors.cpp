#include "oodkit/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

namespace ood {

namespace {

void check_probability_vector(const Eigen::Ref<const Vector>& p, const char* who) {
    if (p.size() == 0) throw std::invalid_argument(std::string(who) + ": empty vector");
    if (!p.allFinite() || p.minCoeff() < 0.0 || std::abs(p.sum() - 1.0) > 1e-6)
        throw std::invalid_argument(std::string(who) + ": not a probability vector");
}

double entropy_of(const Eigen::Ref<const Vector>& p) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
    return h;
}

}  // namespace

double score_entropy(const Eigen::Ref<const Vector>& softmax) {
    check_probability_vector(softmax, "score_entropy");
    return entropy_of(softmax);
}

double score_sbp(const Eigen::Ref<const Vector>& softmax) {
    check_probability_vector(softmax, "score_sbp");
    return 1.0 - softmax.maxCoeff();
}

double score_odin(const MlpModel& model, const Eigen::Ref<const Vector>& x,
                  const OdinParams& params) {
    if (!(params.epsilon >= 0.0) || !std::isfinite(params.epsilon))
        throw std::invalid_argument("score_odin: epsilon must be finite and >= 0");
    if (!(params.temperature > 0.0) || !std::isfinite(params.temperature))
        throw std::invalid_argument("score_odin: temperature must be > 0");
    // Nudge x toward higher top-class confidence: x~ = x - eps * sign(-grad)
    // of ln max_i softmax_i(logits/T), i.e. x + eps * sign(grad).
    const Vector grad = input_gradient_log_max_softmax(model, x, params.temperature);
    const Vector perturbed = x + params.epsilon * grad.array().sign().matrix();
    const ForwardResult fwd = forward(model, perturbed);
    return 1.0 - softmax_of(fwd.logits / params.temperature).maxCoeff();
}

GaussianClassModel fit_mahalanobis(const FeatureDataset& data, CovarianceMode mode,
                                   double reg_lambda) {
    return class_statistics(data, mode, reg_lambda);
}

double score_mahalanobis(const GaussianClassModel& model, const Eigen::Ref<const Vector>& x) {
    if (model.n_classes() == 0) throw std::invalid_argument("score_mahalanobis: empty model");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < model.n_classes(); ++c)
        best = std::min(best, mahalanobis_sq(x, model.means[c], model.precision_for(c)));
    return best;
}

PcaClassModel fit_pca(const FeatureDataset& data, double retained_fraction) {
    if (!(retained_fraction > 0.0) || retained_fraction > 1.0)
        throw std::invalid_argument("fit_pca: retained_fraction must be in (0, 1]");
    const FeatureDataset labeled = data.select(data.labeled_rows());
    if (labeled.rows() == 0) throw std::invalid_argument("fit_pca: no labeled rows");

    const Eigen::Index d = labeled.dim();
    const Eigen::Index n_components = static_cast<Eigen::Index>(
        std::ceil(retained_fraction * static_cast<double>(d)));

    PcaClassModel model;
    model.retained_fraction = retained_fraction;
    model.class_ids = labeled.class_ids();
    for (int cls : model.class_ids) {
        Matrix rows(labeled.rows(), d);
        Eigen::Index n_c = 0;
        for (Eigen::Index i = 0; i < labeled.rows(); ++i)
            if (labeled.labels[i] == cls) rows.row(n_c++) = labeled.features.row(i);
        const Vector mean = rows.topRows(n_c).colwise().mean().transpose();
        const Matrix centered = rows.topRows(n_c).rowwise() - mean.transpose();
        const Matrix covariance = centered.transpose() * centered / static_cast<double>(n_c);
        const EigenDecomposition eig = symmetric_eig(covariance);
        model.means.push_back(mean);
        model.components.push_back(eig.eigenvectors.leftCols(n_components));
    }
    return model;
}

double score_pca(const PcaClassModel& model, const Eigen::Ref<const Vector>& x) {
    if (model.class_ids.empty()) throw std::invalid_argument("score_pca: empty model");
    if (x.size() != model.dim()) throw std::invalid_argument("score_pca: dimension mismatch");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < model.class_ids.size(); ++c) {
        const Vector centered = x - model.means[c];
        const Matrix& v = model.components[c];
        const Vector residual = centered - v * (v.transpose() * centered);
        best = std::min(best, residual.squaredNorm());
    }
    return best;
}

std::vector<Eigen::Index> knn(const Matrix& reference, const Eigen::Ref<const Vector>& x, int k,
                              Eigen::Index exclude) {
    if (x.size() != reference.cols()) throw std::invalid_argument("knn: dimension mismatch");
    const Eigen::Index available = reference.rows() -
        ((exclude >= 0 && exclude < reference.rows()) ? 1 : 0);
    if (k < 1 || k > available)
        throw std::invalid_argument("knn: k must be in [1, number of candidate rows]");

    std::vector<std::pair<double, Eigen::Index>> order;
    order.reserve(static_cast<std::size_t>(reference.rows()));
    for (Eigen::Index i = 0; i < reference.rows(); ++i) {
        if (i == exclude) continue;
        order.emplace_back((reference.row(i).transpose() - x).squaredNorm(), i);
    }
    std::partial_sort(order.begin(), order.begin() + k, order.end());

    std::vector<Eigen::Index> out(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = order[static_cast<std::size_t>(i)].second;
    return out;
}

Vector conformance_vector(const Matrix& reference, const Eigen::Ref<const Vector>& x, int k,
                          DeviationKind deviation, Eigen::Index exclude) {
    const std::vector<Eigen::Index> neighbors = knn(reference, x, k, exclude);
    Vector sum = Vector::Zero(x.size());
    for (Eigen::Index idx : neighbors) {
        const Vector dev = reference.row(idx).transpose() - x;
        sum += (deviation == DeviationKind::SignedMean) ? dev : dev.cwiseAbs().eval();
    }
    return sum / static_cast<double>(k);
}

ConformanceModel fit_conformance(const FeatureDataset& data, int k, DeviationKind deviation,
                                 double reg_lambda) {
    const FeatureDataset labeled = data.select(data.labeled_rows());
    if (labeled.rows() < 2) throw std::invalid_argument("fit_conformance: need at least 2 labeled rows");
    if (k < 1 || k > labeled.rows() - 1)
        throw std::invalid_argument("fit_conformance: k must be in [1, labeled rows - 1]");

    ConformanceModel model;
    model.k = k;
    model.deviation = deviation;
    model.reference = labeled.features;
    model.reference_labels = labeled.labels;

    FeatureDataset vectors;
    vectors.labels = labeled.labels;
    vectors.ids = labeled.ids;
    vectors.features.resize(labeled.rows(), labeled.dim());
    for (Eigen::Index i = 0; i < labeled.rows(); ++i)
        vectors.features.row(i) =
            conformance_vector(model.reference, labeled.features.row(i).transpose(), k, deviation, i)
                .transpose();
    model.stats = class_statistics(vectors, CovarianceMode::Tied, reg_lambda);
    return model;
}

double score_conformance(const ConformanceModel& model, const Eigen::Ref<const Vector>& x) {
    const Vector v = conformance_vector(model.reference, x, model.k, model.deviation);
    return score_mahalanobis(model.stats, v);
}

double score_knn_label_entropy(const FeatureDataset& reference, const Eigen::Ref<const Vector>& x,
                               int k) {
    if (reference.labeled_rows().size() != static_cast<std::size_t>(reference.rows()))
        throw std::invalid_argument("score_knn_label_entropy: every reference row must be labeled");
    const std::vector<Eigen::Index> neighbors = knn(reference.features, x, k);
    std::map<int, int> counts;
    for (Eigen::Index idx : neighbors) ++counts[reference.labels[idx]];
    Vector p(static_cast<Eigen::Index>(counts.size()));
    Eigen::Index i = 0;
    for (const auto& [cls, count] : counts) p[i++] = static_cast<double>(count) / k;
    return entropy_of(p);
}

void renormalize_softmax(FeatureDataset& data) {
    if (!data.has_softmax()) throw std::invalid_argument("renormalize_softmax: no softmax columns");
    for (Eigen::Index i = 0; i < data.softmax.rows(); ++i) {
        if (!data.softmax.row(i).allFinite() || data.softmax.row(i).minCoeff() < 0.0)
            throw std::invalid_argument("renormalize_softmax: row " + std::to_string(i) +
                                        " has negative or non-finite entries");
        const double sum = data.softmax.row(i).sum();
        if (sum <= 0.0)
            throw std::invalid_argument("renormalize_softmax: row " + std::to_string(i) +
                                        " sums to zero");
        data.softmax.row(i) /= sum;
    }
}

}  // namespace ood
