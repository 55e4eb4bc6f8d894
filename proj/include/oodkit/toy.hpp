#pragma once

#include "oodkit/dataset.hpp"

#include <array>
#include <cstdint>

namespace ood {

/// Geometry and sampling parameters for the 2D half-moon study.
/// Defaults: unit-radius moons with the standard interleaving offset, and
/// three OOD clusters graded by distance: A far from both moons (every
/// distance-based signal fires), B just off the upper moon's left tip
/// (distance signals fire, class-conditional ones only partially), C a tight
/// blob in the inter-moon gap beyond the upper moon's right tip (so close
/// that only signals sensitive to the class boundary or local label mixing
/// fire reliably).
struct ToyConfig {
    Eigen::Index n_id_per_class = 500;
    Eigen::Index n_ood_per_cluster = 200;
    double noise_sigma = 0.1;
    std::uint64_t seed = 0;
    std::array<Eigen::Vector2d, 3> cluster_centers = {
        Eigen::Vector2d(-3.0, 3.0),     // A: far from both moons
        Eigen::Vector2d(-1.45, -0.25),  // B: off the upper moon's left tip
        Eigen::Vector2d(1.30, 0.0),     // C: inter-moon gap past the upper tip
    };
    std::array<double, 3> cluster_sigmas = {0.15, 0.15, 0.035};

    void validate() const;
};

/// Two interleaved half-moon classes. Class 0 lies on the upper arc
/// (cos t, sin t), class 1 on the lower arc (1 - cos t, 1/2 - sin t),
/// t uniform in [0, pi], both perturbed by isotropic Gaussian noise.
/// Deterministic in cfg.seed.
FeatureDataset half_moons(const ToyConfig& cfg);

/// Three isotropic Gaussian OOD blobs at cfg.cluster_centers. All labels
/// are -1; the cluster column tags rows 0 (A), 1 (B), 2 (C).
FeatureDataset ood_clusters(const ToyConfig& cfg);

}  // namespace ood
