#pragma once

#include "oodkit/dataset.hpp"

#include <cstdint>
#include <vector>

namespace ood {

/// Fully connected net with rectified-linear hidden layers and identity
/// output (logits). weights[l] maps layer l activations to layer l+1
/// pre-activations, so weights[l] is layer_sizes[l+1] x layer_sizes[l].
struct MlpModel {
    std::vector<int> layer_sizes;  // input, hidden..., n_c
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    int input_dim() const { return layer_sizes.front(); }
    int n_classes() const { return layer_sizes.back(); }
    std::size_t n_layers() const { return weights.size(); }
};

struct TrainConfig {
    int epochs = 300;
    int batch_size = 32;
    double learning_rate = 0.05;
    std::uint64_t seed = 0;
    double l2_penalty = 0.0;
};

struct TrainResult {
    MlpModel model;
    double train_accuracy = 0.0;
    double final_loss = 0.0;
};

/// Glorot-uniform initialized model (weights in +-sqrt(6/(fan_in+fan_out)),
/// hidden biases 0.1 to keep rectified units initially live, output biases
/// zero), deterministic in seed.
MlpModel init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed);

/// Mini-batch SGD on softmax cross-entropy. Deterministic in cfg.seed.
/// Throws if the loss becomes non-finite, naming the epoch.
TrainResult train(const FeatureDataset& data, const std::vector<int>& layer_sizes,
                  const TrainConfig& cfg);

struct ForwardResult {
    Vector logits;
    Vector softmax;      // positive entries summing to 1
    Vector penultimate;  // activation of the last hidden layer
};

ForwardResult forward(const MlpModel& model, const Eigen::Ref<const Vector>& x);

/// Numerically safe softmax (max subtraction).
Vector softmax_of(const Eigen::Ref<const Vector>& logits);

/// d/dx of log max_i softmax_i(logits(x)/T). Exact backpropagated gradient.
Vector input_gradient_log_max_softmax(const MlpModel& model, const Eigen::Ref<const Vector>& x,
                                      double temperature);

/// d/dx of the cross-entropy of softmax(logits(x)) against `label`.
Vector input_gradient_cross_entropy(const MlpModel& model, const Eigen::Ref<const Vector>& x,
                                    int label);

/// x + epsilon * sign(grad_x cross_entropy(x, label)).
Vector fgsm(const MlpModel& model, const Eigen::Ref<const Vector>& x, int label, double epsilon);

/// fgsm applied row-wise using each row's own label (all rows must be labeled).
FeatureDataset fgsm_dataset(const MlpModel& model, const FeatureDataset& data, double epsilon);

/// Penultimate features + softmax for every row; ids, labels and cluster
/// tags are carried over.
FeatureDataset extract_features(const MlpModel& model, const FeatureDataset& data);

}  // namespace ood
