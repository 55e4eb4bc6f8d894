#include "oodkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ood {

namespace {

struct Counts {
    Eigen::Index n_id = 0;
    Eigen::Index n_ood = 0;
};

Counts check_samples(std::span<const ScoredSample> samples) {
    Counts counts;
    for (const ScoredSample& s : samples) {
        if (!std::isfinite(s.score)) throw std::invalid_argument("metrics: non-finite score");
        (s.is_ood ? counts.n_ood : counts.n_id)++;
    }
    if (counts.n_id == 0 || counts.n_ood == 0)
        throw std::invalid_argument("metrics: need at least one iD and one OOD sample");
    return counts;
}

std::vector<ScoredSample> sorted_ascending(std::span<const ScoredSample> samples) {
    std::vector<ScoredSample> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const ScoredSample& a, const ScoredSample& b) { return a.score < b.score; });
    return sorted;
}

/// Average precision with step-wise interpolation, thresholds at distinct
/// score values, positives ranked by descending `key`.
double average_precision(const std::vector<double>& keys, const std::vector<bool>& positive) {
    std::vector<std::size_t> order(keys.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return keys[a] > keys[b]; });

    double total_pos = 0.0;
    for (bool p : positive) total_pos += p ? 1.0 : 0.0;

    double ap = 0.0, tp = 0.0, fp = 0.0, prev_recall = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && keys[order[j]] == keys[order[i]]) {
            (positive[order[j]] ? tp : fp) += 1.0;
            ++j;
        }
        const double recall = tp / total_pos;
        if (recall > prev_recall) {
            ap += (recall - prev_recall) * (tp / (tp + fp));
            prev_recall = recall;
        }
        i = j;
    }
    return ap;
}

}  // namespace

double auroc(std::span<const ScoredSample> samples) {
    const Counts counts = check_samples(samples);
    const std::vector<ScoredSample> sorted = sorted_ascending(samples);

    double ood_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        Eigen::Index block_ood = 0;
        while (j < sorted.size() && sorted[j].score == sorted[i].score) {
            if (sorted[j].is_ood) ++block_ood;
            ++j;
        }
        const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        ood_rank_sum += midrank * static_cast<double>(block_ood);
        i = j;
    }
    const double n_ood = static_cast<double>(counts.n_ood);
    const double u = ood_rank_sum - n_ood * (n_ood + 1.0) / 2.0;
    return u / (n_ood * static_cast<double>(counts.n_id));
}

double tnr_at_tpr(std::span<const ScoredSample> samples, double tpr_target) {
    if (!(tpr_target > 0.0) || tpr_target > 1.0)
        throw std::invalid_argument("tnr_at_tpr: target must be in (0, 1]");
    const Counts counts = check_samples(samples);

    std::vector<double> id_scores;
    id_scores.reserve(static_cast<std::size_t>(counts.n_id));
    for (const ScoredSample& s : samples)
        if (!s.is_ood) id_scores.push_back(s.score);
    std::sort(id_scores.begin(), id_scores.end());

    auto kept = static_cast<std::size_t>(
        std::ceil(tpr_target * static_cast<double>(counts.n_id)));
    kept = std::min(std::max<std::size_t>(kept, 1), id_scores.size());
    const double threshold = id_scores[kept - 1];

    Eigen::Index detected = 0;
    for (const ScoredSample& s : samples)
        if (s.is_ood && s.score > threshold) ++detected;
    return static_cast<double>(detected) / static_cast<double>(counts.n_ood);
}

double dtacc(std::span<const ScoredSample> samples) {
    const Counts counts = check_samples(samples);
    const std::vector<ScoredSample> sorted = sorted_ascending(samples);
    const double n_id = static_cast<double>(counts.n_id);
    const double n_ood = static_cast<double>(counts.n_ood);

    // Threshold below every score: all rows called OOD.
    double best = 0.5;
    double id_below = 0.0, ood_below = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j].score == sorted[i].score) {
            (sorted[j].is_ood ? ood_below : id_below) += 1.0;
            ++j;
        }
        best = std::max(best, 0.5 * id_below / n_id + 0.5 * (n_ood - ood_below) / n_ood);
        i = j;
    }
    return best;
}

double aupr(std::span<const ScoredSample> samples, PrPositive positive) {
    check_samples(samples);
    std::vector<double> keys(samples.size());
    std::vector<bool> is_positive(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        keys[i] = positive == PrPositive::Out ? samples[i].score : -samples[i].score;
        is_positive[i] = positive == PrPositive::Out ? samples[i].is_ood : !samples[i].is_ood;
    }
    return average_precision(keys, is_positive);
}

MetricsReport evaluate(std::span<const ScoredSample> samples, double tpr_target) {
    const Counts counts = check_samples(samples);
    MetricsReport report;
    report.tnr_at_tpr95 = tnr_at_tpr(samples, tpr_target);
    report.auroc = auroc(samples);
    report.dtacc = dtacc(samples);
    report.aupr_in = aupr(samples, PrPositive::In);
    report.aupr_out = aupr(samples, PrPositive::Out);
    report.n_id = counts.n_id;
    report.n_ood = counts.n_ood;
    return report;
}

MetricsReport evaluate(const Vector& id_scores, const Vector& ood_scores, double tpr_target) {
    std::vector<ScoredSample> samples;
    samples.reserve(static_cast<std::size_t>(id_scores.size() + ood_scores.size()));
    for (Eigen::Index i = 0; i < id_scores.size(); ++i)
        samples.push_back({id_scores[i], false});
    for (Eigen::Index i = 0; i < ood_scores.size(); ++i)
        samples.push_back({ood_scores[i], true});
    return evaluate(samples, tpr_target);
}

}  // namespace ood
