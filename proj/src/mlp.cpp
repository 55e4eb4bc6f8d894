#include "oodkit/mlp.hpp"

#include "oodkit/rng.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace ood {

namespace {

void check_layer_sizes(const std::vector<int>& layer_sizes) {
    if (layer_sizes.size() < 2)
        throw std::invalid_argument("mlp: need at least input and output layers");
    for (int s : layer_sizes) {
        if (s < 1) throw std::invalid_argument("mlp: every layer size must be >= 1");
    }
}

/// Forward pass keeping everything the backward pass needs.
/// as[0] = x, as[l+1] = activation after layer l, as.back() = logits.
struct Tape {
    std::vector<Vector> as;
    std::vector<Vector> zs;  // pre-activations, zs[l] = W_l as[l] + b_l
};

Tape forward_tape(const MlpModel& model, const Eigen::Ref<const Vector>& x) {
    if (x.size() != model.input_dim())
        throw std::invalid_argument("forward: input dimension mismatch");
    const std::size_t n_layers = model.n_layers();
    Tape tape;
    tape.as.resize(n_layers + 1);
    tape.zs.resize(n_layers);
    tape.as[0] = x;
    for (std::size_t l = 0; l < n_layers; ++l) {
        tape.zs[l] = model.weights[l] * tape.as[l] + model.biases[l];
        tape.as[l + 1] = (l + 1 < n_layers) ? tape.zs[l].cwiseMax(0.0).eval() : tape.zs[l];
    }
    return tape;
}

/// Backpropagate a cotangent on the logits down to the input. When
/// grad_w/grad_b are non-null the parameter gradients are accumulated
/// into them (they must already have the right shapes).
Vector backward_to_input(const MlpModel& model, const Tape& tape, Vector delta,
                         std::vector<Matrix>* grad_w, std::vector<Vector>* grad_b) {
    Vector grad_x;
    for (std::size_t l = model.n_layers(); l-- > 0;) {
        if (grad_w) (*grad_w)[l] += delta * tape.as[l].transpose();
        if (grad_b) (*grad_b)[l] += delta;
        Vector upstream = model.weights[l].transpose() * delta;
        if (l == 0) {
            grad_x = std::move(upstream);
        } else {
            delta = upstream.cwiseProduct(
                (tape.zs[l - 1].array() > 0.0).cast<double>().matrix());
        }
    }
    return grad_x;
}

double cross_entropy(const Vector& logits, int label) {
    const double zmax = logits.maxCoeff();
    const double lse = zmax + std::log((logits.array() - zmax).exp().sum());
    return lse - logits[label];
}

void check_labels(const FeatureDataset& data, int n_classes, const char* who) {
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        if (data.labels[i] < 0 || data.labels[i] >= n_classes)
            throw std::invalid_argument(std::string(who) + ": row " + std::to_string(i) +
                                        " has no usable label");
    }
}

}  // namespace

MlpModel init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed) {
    check_layer_sizes(layer_sizes);
    Rng rng(mix_seed(seed, 0x494e4954ULL));  // "INIT"
    MlpModel model;
    model.layer_sizes = layer_sizes;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const int fan_in = layer_sizes[l];
        const int fan_out = layer_sizes[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c)
                w(r, c) = limit * (2.0 * rng.uniform() - 1.0);
        model.weights.push_back(std::move(w));
        // Hidden biases start slightly positive so no rectified unit is dead
        // from the first step; the output layer has no such hazard.
        const bool hidden = l + 2 < layer_sizes.size();
        model.biases.push_back(Vector::Constant(fan_out, hidden ? 0.1 : 0.0));
    }
    return model;
}

TrainResult train(const FeatureDataset& data, const std::vector<int>& layer_sizes,
                  const TrainConfig& cfg) {
    check_layer_sizes(layer_sizes);
    if (data.rows() < 1) throw std::invalid_argument("train: empty dataset");
    if (data.dim() != layer_sizes.front())
        throw std::invalid_argument("train: feature dimension does not match input layer");
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (cfg.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
    if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate))
        throw std::invalid_argument("train: learning_rate must be finite and > 0");
    check_labels(data, layer_sizes.back(), "train");

    MlpModel model = init_mlp(layer_sizes, cfg.seed);
    Rng order_rng(mix_seed(cfg.seed, 0x4f524452ULL));  // "ORDR"

    const Eigen::Index n = data.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    std::vector<Matrix> grad_w;
    std::vector<Vector> grad_b;
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
        grad_w.push_back(Matrix::Zero(model.weights[l].rows(), model.weights[l].cols()));
        grad_b.push_back(Vector::Zero(model.biases[l].size()));
    }

    double epoch_loss = 0.0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        epoch_loss = 0.0;
        for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
            const Eigen::Index stop = std::min<Eigen::Index>(start + cfg.batch_size, n);
            const double batch_n = static_cast<double>(stop - start);
            for (std::size_t l = 0; l < model.n_layers(); ++l) {
                grad_w[l].setZero();
                grad_b[l].setZero();
            }
            for (Eigen::Index b = start; b < stop; ++b) {
                const Eigen::Index row = order[static_cast<std::size_t>(b)];
                const Tape tape = forward_tape(model, data.features.row(row).transpose());
                const Vector& logits = tape.as.back();
                epoch_loss += cross_entropy(logits, data.labels[row]);
                Vector delta = softmax_of(logits);
                delta[data.labels[row]] -= 1.0;
                backward_to_input(model, tape, std::move(delta), &grad_w, &grad_b);
            }
            for (std::size_t l = 0; l < model.n_layers(); ++l) {
                model.weights[l] -=
                    cfg.learning_rate * (grad_w[l] / batch_n + cfg.l2_penalty * model.weights[l]);
                model.biases[l] -= cfg.learning_rate * (grad_b[l] / batch_n);
            }
        }
        epoch_loss /= static_cast<double>(n);
        if (!std::isfinite(epoch_loss))
            throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
    }

    TrainResult result;
    result.model = std::move(model);
    result.final_loss = epoch_loss;
    Eigen::Index correct = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const ForwardResult fwd = forward(result.model, data.features.row(i).transpose());
        Eigen::Index pred;
        fwd.logits.maxCoeff(&pred);
        if (static_cast<int>(pred) == data.labels[i]) ++correct;
    }
    result.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return result;
}

ForwardResult forward(const MlpModel& model, const Eigen::Ref<const Vector>& x) {
    const Tape tape = forward_tape(model, x);
    ForwardResult out;
    out.logits = tape.as.back();
    out.softmax = softmax_of(out.logits);
    out.penultimate = tape.as[tape.as.size() - 2];
    return out;
}

Vector softmax_of(const Eigen::Ref<const Vector>& logits) {
    if (logits.size() == 0) throw std::invalid_argument("softmax_of: empty logits");
    const Vector shifted = (logits.array() - logits.maxCoeff()).exp();
    return shifted / shifted.sum();
}

Vector input_gradient_log_max_softmax(const MlpModel& model, const Eigen::Ref<const Vector>& x,
                                      double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        throw std::invalid_argument("input_gradient_log_max_softmax: temperature must be > 0");
    const Tape tape = forward_tape(model, x);
    const Vector& logits = tape.as.back();
    Eigen::Index top;
    logits.maxCoeff(&top);
    // d/dlogits of [logits_top/T - logsumexp(logits/T)]
    Vector delta = -softmax_of(logits / temperature) / temperature;
    delta[top] += 1.0 / temperature;
    return backward_to_input(model, tape, std::move(delta), nullptr, nullptr);
}

Vector input_gradient_cross_entropy(const MlpModel& model, const Eigen::Ref<const Vector>& x,
                                    int label) {
    if (label < 0 || label >= model.n_classes())
        throw std::invalid_argument("input_gradient_cross_entropy: label out of range");
    const Tape tape = forward_tape(model, x);
    Vector delta = softmax_of(tape.as.back());
    delta[label] -= 1.0;
    return backward_to_input(model, tape, std::move(delta), nullptr, nullptr);
}

Vector fgsm(const MlpModel& model, const Eigen::Ref<const Vector>& x, int label, double epsilon) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
        throw std::invalid_argument("fgsm: epsilon must be finite and >= 0");
    const Vector grad = input_gradient_cross_entropy(model, x, label);
    return x + epsilon * grad.array().sign().matrix();
}

FeatureDataset fgsm_dataset(const MlpModel& model, const FeatureDataset& data, double epsilon) {
    check_labels(data, model.n_classes(), "fgsm_dataset");
    FeatureDataset out;
    out.ids = data.ids;
    out.labels = data.labels;
    out.cluster = data.cluster;
    out.features.resize(data.rows(), data.dim());
    for (Eigen::Index i = 0; i < data.rows(); ++i)
        out.features.row(i) =
            fgsm(model, data.features.row(i).transpose(), data.labels[i], epsilon).transpose();
    return out;
}

FeatureDataset extract_features(const MlpModel& model, const FeatureDataset& data) {
    if (data.dim() != model.input_dim())
        throw std::invalid_argument("extract_features: feature dimension mismatch");
    const int penultimate_dim = model.layer_sizes[model.layer_sizes.size() - 2];
    FeatureDataset out;
    out.ids = data.ids;
    out.labels = data.labels;
    out.cluster = data.cluster;
    out.features.resize(data.rows(), penultimate_dim);
    out.softmax.resize(data.rows(), model.n_classes());
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        const ForwardResult fwd = forward(model, data.features.row(i).transpose());
        out.features.row(i) = fwd.penultimate.transpose();
        out.softmax.row(i) = fwd.softmax.transpose();
    }
    return out;
}

}  // namespace ood
