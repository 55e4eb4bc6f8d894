#include "oodkit/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace ood {

namespace {

double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

/// q-th upper order statistic: the ceil(q * n)-th smallest value.
double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("percentile: empty sample");
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    auto idx = static_cast<std::size_t>(std::ceil(q * n));
    idx = std::min(std::max<std::size_t>(idx, 1), values.size());
    return values[idx - 1];
}

// During fitting, channels are winsorized at +-kZClip standard deviations
// after scaling. Without the clamp, scores orders of magnitude beyond the iD
// range saturate every gradient step and the fit degenerates to a minimal-norm
// separator with no margin left for moderate outliers. Scoring stays
// unclamped: each channel remains monotone all the way out, so inputs far
// beyond anything seen during fitting cannot fold back under the threshold.
constexpr double kZClip = 10.0;

Matrix standardize(const Matrix& scores, const Vector& mean, const Vector& std_dev) {
    return ((scores.rowwise() - mean.transpose()).array().rowwise() /
            std_dev.transpose().array())
        .min(kZClip)
        .max(-kZClip);
}

/// Stack iD rows (label 0) over proxy-OOD rows (label 1).
std::pair<Matrix, std::vector<int>> stack_fit_data(const Matrix& id_scores,
                                                   const Matrix& proxy_ood_scores) {
    if (id_scores.cols() != proxy_ood_scores.cols())
        throw std::invalid_argument("fit: iD and proxy-OOD score column counts differ");
    Matrix scores(id_scores.rows() + proxy_ood_scores.rows(), id_scores.cols());
    scores << id_scores, proxy_ood_scores;
    std::vector<int> labels(static_cast<std::size_t>(scores.rows()), 0);
    std::fill(labels.begin() + id_scores.rows(), labels.end(), 1);
    return {std::move(scores), std::move(labels)};
}

}  // namespace

double combine_max(double au_score, double eu_score, double delta_a, double delta_e) {
    return std::max(au_score - delta_a, eu_score - delta_e);
}

double combine_linear(double au_score, double eu_score, double w1, double w2) {
    return w1 * au_score + w2 * eu_score;
}

LogisticModel fit_logistic(const Matrix& scores, const std::vector<int>& labels,
                           const LogisticConfig& cfg) {
    if (scores.rows() != static_cast<Eigen::Index>(labels.size()))
        throw std::invalid_argument("fit_logistic: scores and labels disagree on row count");
    if (scores.rows() < 2) throw std::invalid_argument("fit_logistic: need at least 2 rows");
    if (scores.cols() < 1) throw std::invalid_argument("fit_logistic: need at least 1 channel");
    if (!scores.allFinite()) throw std::invalid_argument("fit_logistic: non-finite score");
    if (cfg.iterations < 0 || !(cfg.learning_rate > 0.0) || !(cfg.l2_penalty >= 0.0))
        throw std::invalid_argument("fit_logistic: bad optimizer configuration");

    bool saw[2] = {false, false};
    for (int label : labels) {
        if (label != 0 && label != 1)
            throw std::invalid_argument("fit_logistic: labels must be 0 (iD) or 1 (OOD)");
        saw[label] = true;
    }
    if (!saw[0] || !saw[1])
        throw std::invalid_argument("fit_logistic: both label values must be present");

    const auto n = static_cast<double>(scores.rows());
    // Standardize against the iD rows only. OOD scores can sit orders of
    // magnitude above the iD scale; folding them into the statistics would
    // compress the z-scores of every less extreme outlier toward zero.
    Eigen::Index n_id = 0;
    for (int label : labels) n_id += (label == 0);
    Matrix id_scores(n_id, scores.cols());
    for (Eigen::Index i = 0, r = 0; i < scores.rows(); ++i)
        if (labels[static_cast<std::size_t>(i)] == 0) id_scores.row(r++) = scores.row(i);
    LogisticModel model;
    model.channel_mean = id_scores.colwise().mean().transpose();
    Matrix centered = id_scores.rowwise() - model.channel_mean.transpose();
    model.channel_std =
        (centered.array().square().colwise().sum() / static_cast<double>(n_id))
            .sqrt()
            .transpose();
    for (Eigen::Index c = 0; c < model.channel_std.size(); ++c) {
        if (model.channel_std[c] <= 1e-12 * std::max(1.0, std::abs(model.channel_mean[c])))
            throw std::invalid_argument("fit_logistic: channel " + std::to_string(c) +
                                        " has zero variance");
    }

    const Matrix z = standardize(scores, model.channel_mean, model.channel_std);
    Vector y(scores.rows());
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = labels[static_cast<std::size_t>(i)];

    model.beta = Vector::Zero(scores.cols());
    model.beta0 = 0.0;
    for (int it = 0; it < cfg.iterations; ++it) {
        Vector p(scores.rows());
        const Vector t = (z * model.beta).array() + model.beta0;
        for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = sigmoid(t[i]);
        const Vector residual = p - y;
        const Vector grad_beta = z.transpose() * residual / n + cfg.l2_penalty * model.beta;
        const double grad_beta0 = residual.mean();  // intercept stays unregularized
        model.beta -= cfg.learning_rate * grad_beta;
        model.beta0 -= cfg.learning_rate * grad_beta0;
    }
    return model;
}

double logistic_log_odds(const LogisticModel& model,
                         const Eigen::Ref<const Vector>& score_vector) {
    if (score_vector.size() != model.channels())
        throw std::invalid_argument("score_logistic: channel count mismatch");
    const Vector z =
        (score_vector - model.channel_mean).cwiseQuotient(model.channel_std);
    return model.beta0 + model.beta.dot(z);
}

double score_logistic(const LogisticModel& model, const Eigen::Ref<const Vector>& score_vector) {
    return sigmoid(logistic_log_odds(model, score_vector));
}

DetectorComposition fit_detector(const std::string& au_name, const std::string& eu_name,
                                 const Matrix& id_scores, const Matrix& proxy_ood_scores,
                                 const DetectorFitOptions& options) {
    if (id_scores.cols() != 2)
        throw std::invalid_argument("fit_detector: iD scores must have exactly 2 columns (au, eu)");

    DetectorComposition detector;
    detector.au_name = au_name;
    detector.eu_name = eu_name;
    detector.combiner = options.combiner;
    switch (options.combiner) {
        case CombinerKind::MaxRule: {
            const auto channel = [&](Eigen::Index c, const char* name, double& mean,
                                     double& std_dev) {
                const Vector col = id_scores.col(c);
                mean = col.mean();
                std_dev = std::sqrt((col.array() - mean).square().sum() /
                                    static_cast<double>(col.size()));
                if (std_dev <= 1e-12 * std::max(1.0, std::abs(mean)))
                    throw std::invalid_argument(std::string("fit_detector: channel '") + name +
                                                "' has zero variance");
                std::vector<double> z(static_cast<std::size_t>(col.size()));
                for (Eigen::Index i = 0; i < col.size(); ++i)
                    z[static_cast<std::size_t>(i)] = (col[i] - mean) / std_dev;
                return z;
            };
            const auto z_au = channel(0, au_name.c_str(), detector.au_mean, detector.au_std);
            const auto z_eu = channel(1, eu_name.c_str(), detector.eu_mean, detector.eu_std);
            detector.delta_a =
                std::isnan(options.delta_a) ? percentile(z_au, options.quantile_a)
                                            : options.delta_a;
            detector.delta_e =
                std::isnan(options.delta_e) ? percentile(z_eu, options.quantile_e)
                                            : options.delta_e;
            break;
        }
        case CombinerKind::Linear:
            detector.w1 = options.w1;
            detector.w2 = options.w2;
            break;
        case CombinerKind::Logistic: {
            const auto [scores, labels] = stack_fit_data(id_scores, proxy_ood_scores);
            detector.logistic = fit_logistic(scores, labels, options.logistic);
            break;
        }
    }
    return detector;
}

double score_detector(const DetectorComposition& detector, double au_score, double eu_score) {
    switch (detector.combiner) {
        case CombinerKind::MaxRule:
            return combine_max((au_score - detector.au_mean) / detector.au_std,
                               (eu_score - detector.eu_mean) / detector.eu_std,
                               detector.delta_a, detector.delta_e);
        case CombinerKind::Linear:
            return combine_linear(au_score, eu_score, detector.w1, detector.w2);
        case CombinerKind::Logistic:
            // Log-odds rather than the probability: identical ranking, but far
            // OOD inputs cannot collapse onto one rounded sigmoid value.
            return logistic_log_odds(detector.logistic, Eigen::Vector2d(au_score, eu_score));
    }
    throw std::logic_error("score_detector: unknown combiner");
}

EnsembleModel fit_ensemble(const std::vector<std::string>& detector_names,
                           const Matrix& id_scores, const Matrix& proxy_ood_scores,
                           const LogisticConfig& cfg) {
    if (static_cast<Eigen::Index>(detector_names.size()) != id_scores.cols())
        throw std::invalid_argument("fit_ensemble: one score column per detector name required");
    EnsembleModel model;
    model.detector_names = detector_names;
    const auto [scores, labels] = stack_fit_data(id_scores, proxy_ood_scores);
    model.logistic = fit_logistic(scores, labels, cfg);
    return model;
}

double score_ensemble(const EnsembleModel& model,
                      const Eigen::Ref<const Vector>& detector_scores) {
    return logistic_log_odds(model.logistic, detector_scores);
}

}  // namespace ood
