#pragma once

#include "oodkit/dataset.hpp"

#include <limits>
#include <string>
#include <vector>

namespace ood {

/// Dominating-uncertainty score: max(au - delta_a, eu - delta_e). Positive
/// means the input is flagged OOD by at least one of the two thresholds.
double combine_max(double au_score, double eu_score, double delta_a, double delta_e);

/// w1 * au + w2 * eu.
double combine_linear(double au_score, double eu_score, double w1, double w2);

struct LogisticConfig {
    int iterations = 2000;
    double learning_rate = 0.1;
    double l2_penalty = 1e-4;
};

/// L2-regularized logistic regression over standardized score channels.
struct LogisticModel {
    Vector channel_mean;  // standardization constants from the fit data
    Vector channel_std;
    Vector beta;
    double beta0 = 0.0;

    Eigen::Index channels() const { return beta.size(); }
};

/// Full-batch gradient descent fit, channels standardized to zero mean and
/// unit variance on the fit data. labels: 0 = iD, 1 = OOD. Throws if only
/// one label value is present or a channel has zero variance (naming it).
LogisticModel fit_logistic(const Matrix& scores, const std::vector<int>& labels,
                           const LogisticConfig& cfg = {});

/// beta0 + beta . standardized(score_vector): the fitted log-odds. Monotone
/// in the OOD probability but free of the sigmoid's rounding at saturation.
double logistic_log_odds(const LogisticModel& model,
                         const Eigen::Ref<const Vector>& score_vector);

/// sigmoid(beta0 + beta . standardized(score_vector)), in (0, 1).
double score_logistic(const LogisticModel& model, const Eigen::Ref<const Vector>& score_vector);

enum class CombinerKind { MaxRule, Linear, Logistic };

/// One detector: an AU indicator paired with an EU indicator and a rule for
/// collapsing the two scores into one.
struct DetectorComposition {
    std::string au_name;
    std::string eu_name;
    CombinerKind combiner = CombinerKind::Logistic;
    double delta_a = 0.0, delta_e = 0.0;  // MaxRule: thresholds on standardized channels
    double au_mean = 0.0, au_std = 1.0;   // MaxRule: channel standardization (fit data)
    double eu_mean = 0.0, eu_std = 1.0;
    double w1 = 0.0, w2 = 0.0;  // Linear
    LogisticModel logistic;     // Logistic
};

struct DetectorFitOptions {
    CombinerKind combiner = CombinerKind::Logistic;
    // Linear weights; used as-is when combiner == Linear.
    double w1 = 1.0, w2 = 1.0;
    // MaxRule thresholds, expressed on the standardized channel scale. The two
    // channels live on incomparable raw scales (bounded softmax margins vs.
    // unbounded squared distances), so the rule standardizes each against the
    // iD fit rows before taking the dominating excess. NaN selects the
    // default: the quantile_a / quantile_e percentile of the standardized iD
    // fit scores. Raising one channel's quantile makes it a tie-breaker that
    // only fires clear of the whole iD fit sample, so it cannot inflate the
    // other channel's effective threshold on borderline inputs.
    double delta_a = std::numeric_limits<double>::quiet_NaN();
    double delta_e = std::numeric_limits<double>::quiet_NaN();
    double quantile_a = 0.95;
    double quantile_e = 0.95;
    LogisticConfig logistic;
};

/// Fit a detector from per-row (au, eu) indicator scores for iD rows and
/// proxy-OOD rows. Logistic combiners learn weights on the two channels;
/// Linear/MaxRule use the supplied constants (MaxRule thresholds default to
/// iD percentiles).
DetectorComposition fit_detector(const std::string& au_name, const std::string& eu_name,
                                 const Matrix& id_scores, const Matrix& proxy_ood_scores,
                                 const DetectorFitOptions& options = {});

/// Combined uncertainty score; higher means more OOD. Logistic detectors
/// report the fitted log-odds.
double score_detector(const DetectorComposition& detector, double au_score, double eu_score);

/// Logistic regression over per-detector uncertainty scores.
struct EnsembleModel {
    std::vector<std::string> detector_names;
    LogisticModel logistic;
};

/// id_scores / proxy_ood_scores: one column per detector.
EnsembleModel fit_ensemble(const std::vector<std::string>& detector_names,
                           const Matrix& id_scores, const Matrix& proxy_ood_scores,
                           const LogisticConfig& cfg = {});

double score_ensemble(const EnsembleModel& model, const Eigen::Ref<const Vector>& detector_scores);

}  // namespace ood
