#include "dal/mlp.hpp"

#include <cmath>
#include <numbers>

#include "dal/errors.hpp"
#include "dal/random.hpp"

namespace dal::train {

std::size_t MLPModel::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) n += (layer_dims[l] + 1) * layer_dims[l + 1];
    return n;
}

ParamGrads ParamGrads::zeros_like(const MLPModel& model) {
    ParamGrads g;
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        g.weights.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
        g.biases.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
    }
    return g;
}

ParamGrads& ParamGrads::operator+=(const ParamGrads& other) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        weights[l] += other.weights[l];
        biases[l] += other.biases[l];
    }
    return *this;
}

MLPModel init_model(const std::vector<std::size_t>& layer_dims, std::uint64_t seed) {
    if (layer_dims.size() < 2) throw ConfigurationError("MLP needs at least input and output dimensions");
    for (std::size_t d : layer_dims)
        if (d == 0) throw ConfigurationError("MLP layer dimensions must be positive");
    MLPModel m;
    m.layer_dims = layer_dims;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const auto fan_in = layer_dims[l], fan_out = layer_dims[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-bound, bound);
        m.weights.push_back(std::move(w));
        m.biases.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fan_out)));
    }
    return m;
}

BatchCache forward_batch(const MLPModel& model, const Eigen::MatrixXd& inputs) {
    if (static_cast<std::size_t>(inputs.rows()) != model.input_dim())
        throw DimensionMismatch("forward: input dimension differs from the model");
    BatchCache cache;
    cache.activations.reserve(model.num_layers());
    cache.activations.push_back(inputs);
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        Eigen::MatrixXd z = model.weights[l] * cache.activations.back();
        z.colwise() += model.biases[l];
        if (l + 1 == model.num_layers()) {
            cache.logits = std::move(z);
        } else {
            cache.activations.push_back(z.cwiseMax(0.0));
        }
    }
    return cache;
}

ForwardResult forward(const MLPModel& model, std::span<const double> x) {
    if (x.size() != model.input_dim()) throw DimensionMismatch("forward: input dimension differs from the model");
    for (double v : x)
        if (!std::isfinite(v)) throw InputValidationError("forward: non-finite input");
    const Eigen::MatrixXd in = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    const BatchCache cache = forward_batch(model, in);
    std::vector<double> logits(cache.logits.data(), cache.logits.data() + cache.logits.size());
    ProbVector probs = softmax(logits);
    return {std::move(logits), std::move(probs)};
}

ParamGrads backward_batch(const MLPModel& model, const BatchCache& cache, const Eigen::MatrixXd& grad_logits) {
    if (static_cast<std::size_t>(grad_logits.rows()) != model.num_classes() ||
        grad_logits.cols() != cache.logits.cols())
        throw DimensionMismatch("backward: gradient shape differs from the logits");
    ParamGrads g;
    const std::size_t layers = model.num_layers();
    g.weights.resize(layers);
    g.biases.resize(layers);
    Eigen::MatrixXd delta = grad_logits;
    for (std::size_t l = layers; l-- > 0;) {
        const Eigen::MatrixXd& a_prev = cache.activations[l];
        g.weights[l] = delta * a_prev.transpose();
        g.biases[l] = delta.rowwise().sum();
        if (l == 0) break;
        Eigen::MatrixXd back = model.weights[l].transpose() * delta;
        // ReLU derivative: activations are positive exactly where z > 0.
        delta = back.cwiseProduct((a_prev.array() > 0.0).cast<double>().matrix());
    }
    return g;
}

ParamGrads backward(const MLPModel& model, std::span<const double> x, std::span<const double> grad_logits) {
    if (x.size() != model.input_dim()) throw DimensionMismatch("backward: input dimension differs from the model");
    if (grad_logits.size() != model.num_classes())
        throw DimensionMismatch("backward: gradient length differs from the class count");
    const Eigen::MatrixXd in = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::MatrixXd g =
        Eigen::Map<const Eigen::VectorXd>(grad_logits.data(), static_cast<Eigen::Index>(grad_logits.size()));
    return backward_batch(model, forward_batch(model, in), g);
}

void sgd_step(MLPModel& model, const ParamGrads& grads, ParamGrads& velocity, double lr, double momentum,
              double weight_decay) {
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        velocity.weights[l] = momentum * velocity.weights[l] + (grads.weights[l] + weight_decay * model.weights[l]);
        model.weights[l] -= lr * velocity.weights[l];
        velocity.biases[l] = momentum * velocity.biases[l] + grads.biases[l];
        model.biases[l] -= lr * velocity.biases[l];
    }
}

double cosine_lr(int t, int T, double lr0) {
    if (T <= 0 || t < 1 || t > T) throw ParameterDomainError("cosine_lr: epoch outside [1, T]");
    return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(t - 1) / static_cast<double>(T)));
}

}  // namespace dal::train
