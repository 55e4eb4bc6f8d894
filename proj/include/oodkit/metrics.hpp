#pragma once

#include "oodkit/dataset.hpp"

#include <span>

namespace ood {

// Orientation convention, fixed library-wide: higher score = more OOD.
// "Positive" below refers to the OOD population unless stated otherwise.

struct ScoredSample {
    double score = 0.0;
    bool is_ood = false;
};

struct MetricsReport {
    double tnr_at_tpr95 = 0.0;
    double auroc = 0.0;
    double dtacc = 0.0;
    double aupr_in = 0.0;
    double aupr_out = 0.0;
    Eigen::Index n_id = 0;
    Eigen::Index n_ood = 0;
};

/// Mann-Whitney statistic: P(score_ood > score_id) + 0.5 P(equal), computed
/// with midranks.
double auroc(std::span<const ScoredSample> samples);

/// TNR on OODs at the threshold that keeps at least `tpr_target` of the iD
/// samples. The threshold is the ceil(target * n_id)-th smallest iD score t;
/// iD rows with score <= t count as kept, OOD rows with score > t as
/// detected.
double tnr_at_tpr(std::span<const ScoredSample> samples, double tpr_target = 0.95);

/// max over thresholds t of 0.5 * frac(id <= t) + 0.5 * frac(ood > t).
double dtacc(std::span<const ScoredSample> samples);

enum class PrPositive { In, Out };

/// Area under the precision-recall curve with step-wise interpolation.
/// positive = Out treats high scores as positive; positive = In flips the
/// orientation so low-scoring iD rows are the positives.
double aupr(std::span<const ScoredSample> samples, PrPositive positive);

MetricsReport evaluate(std::span<const ScoredSample> samples, double tpr_target = 0.95);
MetricsReport evaluate(const Vector& id_scores, const Vector& ood_scores,
                       double tpr_target = 0.95);

}  // namespace ood
