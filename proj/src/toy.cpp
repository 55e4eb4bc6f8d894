#include "oodkit/toy.hpp"

#include "oodkit/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ood {

void ToyConfig::validate() const {
    if (n_id_per_class < 1) throw std::invalid_argument("ToyConfig: n_id_per_class must be >= 1");
    if (n_ood_per_cluster < 1)
        throw std::invalid_argument("ToyConfig: n_ood_per_cluster must be >= 1");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
        throw std::invalid_argument("ToyConfig: noise_sigma must be finite and >= 0");
    for (double s : cluster_sigmas) {
        if (!(s >= 0.0) || !std::isfinite(s))
            throw std::invalid_argument("ToyConfig: cluster sigmas must be finite and >= 0");
    }
    for (const auto& c : cluster_centers) {
        if (!c.allFinite()) throw std::invalid_argument("ToyConfig: non-finite cluster center");
    }
}

FeatureDataset half_moons(const ToyConfig& cfg) {
    cfg.validate();
    Rng rng(mix_seed(cfg.seed, 0x4d4f4f4eULL));  // "MOON"

    const Eigen::Index n = cfg.n_id_per_class;
    FeatureDataset out;
    out.features.resize(2 * n, 2);
    out.labels.resize(2 * n);
    out.ids.reserve(static_cast<std::size_t>(2 * n));

    for (int cls = 0; cls < 2; ++cls) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double t = std::numbers::pi * rng.uniform();
            double x, y;
            if (cls == 0) {  // upper arc
                x = std::cos(t);
                y = std::sin(t);
            } else {  // lower arc, interleaved
                x = 1.0 - std::cos(t);
                y = 0.5 - std::sin(t);
            }
            x += cfg.noise_sigma * rng.normal();
            y += cfg.noise_sigma * rng.normal();
            const Eigen::Index row = cls * n + i;
            out.features(row, 0) = x;
            out.features(row, 1) = y;
            out.labels[row] = cls;
            out.ids.push_back("m" + std::to_string(row));
        }
    }
    return out;
}

FeatureDataset ood_clusters(const ToyConfig& cfg) {
    cfg.validate();
    Rng rng(mix_seed(cfg.seed, 0x434c5553ULL));  // "CLUS"

    const Eigen::Index n = cfg.n_ood_per_cluster;
    FeatureDataset out;
    out.features.resize(3 * n, 2);
    out.labels = Eigen::VectorXi::Constant(3 * n, -1);
    out.cluster.resize(3 * n);
    out.ids.reserve(static_cast<std::size_t>(3 * n));

    for (int c = 0; c < 3; ++c) {
        const Eigen::Vector2d& center = cfg.cluster_centers[static_cast<std::size_t>(c)];
        const double sigma = cfg.cluster_sigmas[static_cast<std::size_t>(c)];
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index row = c * n + i;
            out.features(row, 0) = center.x() + sigma * rng.normal();
            out.features(row, 1) = center.y() + sigma * rng.normal();
            out.cluster[row] = c;
            out.ids.push_back(std::string(1, static_cast<char>('a' + c)) + std::to_string(i));
        }
    }
    return out;
}

}  // namespace ood
