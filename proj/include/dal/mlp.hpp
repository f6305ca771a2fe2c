#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dal/prob.hpp"

namespace dal::train {

/// Fully connected ReLU network with a softmax output.
/// Layer l maps dims[l] -> dims[l+1]; weights[l] is dims[l+1] x dims[l].
struct MLPModel {
    std::vector<std::size_t> layer_dims;
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t num_classes() const { return layer_dims.back(); }
    std::size_t num_layers() const { return weights.size(); }
    std::size_t parameter_count() const;
};

/// Same layout as the model; used for gradients and momentum buffers.
struct ParamGrads {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    static ParamGrads zeros_like(const MLPModel& model);
    ParamGrads& operator+=(const ParamGrads& other);
};

/// Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases.
MLPModel init_model(const std::vector<std::size_t>& layer_dims, std::uint64_t seed);

struct ForwardResult {
    std::vector<double> logits;
    ProbVector probs;
};

ForwardResult forward(const MLPModel& model, std::span<const double> x);

/// Activations kept for a backward pass over a batch stored column-wise.
struct BatchCache {
    std::vector<Eigen::MatrixXd> activations;  // a_0 = inputs, a_l = relu(z_l) for hidden layers
    Eigen::MatrixXd logits;                    // k x batch
};

/// inputs: d x batch.
BatchCache forward_batch(const MLPModel& model, const Eigen::MatrixXd& inputs);

/// Parameter gradients of sum_j L_j given dL_j/dlogits_j in the columns of
/// grad_logits (k x batch).
ParamGrads backward_batch(const MLPModel& model, const BatchCache& cache, const Eigen::MatrixXd& grad_logits);

/// Single-example backward pass.
ParamGrads backward(const MLPModel& model, std::span<const double> x, std::span<const double> grad_logits);

/// v <- momentum v + (g + weight_decay W);  W <- W - lr v.  Biases skip the decay term.
void sgd_step(MLPModel& model, const ParamGrads& grads, ParamGrads& velocity, double lr, double momentum,
              double weight_decay);

/// lr0 * (1 + cos(pi (t-1) / T)) / 2 for epoch t in [1, T].
double cosine_lr(int t, int T, double lr0);

}  // namespace dal::train
