#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "drivemon/types.hpp"

namespace drivemon::nn {

enum class OutputActivation : std::uint8_t { identity = 0, logistic = 1 };

struct LayerParams {
    Matrix W;  // out_dim x in_dim
    Vector b;  // out_dim
};

// Gradients and optimizer accumulators reuse the layer shapes.
using Gradients = std::vector<LayerParams>;

// Dense feed-forward network, ReLU hidden units, scalar regression head
// (identity output) or binary classification head (logistic output).
struct MlpModel {
    std::vector<LayerParams> layers;
    OutputActivation output_activation = OutputActivation::identity;

    int input_dim() const { return static_cast<int>(layers.front().W.cols()); }
    int output_dim() const { return static_cast<int>(layers.back().W.rows()); }
    std::size_t parameter_count() const;
};

// He-uniform weights (+-sqrt(6/fan_in)), zero biases, layer by layer.
MlpModel make_mlp(int input_dim, std::span<const int> hidden_sizes, int output_dim,
                  OutputActivation output_activation, std::uint64_t seed);

Gradients zero_gradients(const MlpModel& model);

// MACs of one per-sample forward pass (sum of W dims); cost-model unit used
// by the deterministic runtime column.
std::size_t forward_macs(const MlpModel& model);

Vector forward(const MlpModel& model, const Vector& x);
// Columns are samples.
Matrix forward_batch(const MlpModel& model, const MatrixRef& X);

double loss_mse(double y, double y_hat);
// p is clamped to [1e-7, 1 - 1e-7] before evaluation.
double loss_bce(double y, double p);

struct BackwardResult {
    double loss = 0.0;
    Gradients grads;
};

// Loss and exact gradients of the batch-mean loss implied by the output head:
// identity -> MSE averaged over outputs and samples, logistic -> mean BCE.
BackwardResult backward(const MlpModel& model, const MatrixRef& X, const MatrixRef& Y);
BackwardResult backward(const MlpModel& model, std::span<const Sample> batch);

// Backprop of sum_i dot(G.col(i), f(X.col(i))) for an identity-output model,
// with G supplied by the caller. Used for penalty terms whose gradient at the
// output is known in closed form.
Gradients backward_given_output_grad(const MlpModel& model, const MatrixRef& X,
                                      const MatrixRef& G);

enum class OptimizerMode : std::uint8_t { sgd_momentum = 0, adam = 1 };

struct OptimizerState {
    OptimizerMode mode = OptimizerMode::sgd_momentum;
    double eta = 1e-3;
    double mu = 0.9;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::int64_t step_count = 0;
    std::vector<LayerParams> prev_delta;  // sgd: last applied parameter delta
    std::vector<LayerParams> m, v;        // adam moment accumulators
};

OptimizerState make_sgd_momentum(const MlpModel& model, double eta, double mu);
OptimizerState make_adam(const MlpModel& model, double eta);

// W_t = W_{t-1} - eta * grad + mu * (W_{t-1} - W_{t-2}); first step uses a
// zero previous delta.
void sgd_momentum_step(MlpModel& model, OptimizerState& opt, const Gradients& grads);
void adam_step(MlpModel& model, OptimizerState& opt, const Gradients& grads);

// Binary checkpoint, bit-exact round trip. Layout documented in the README.
void save_checkpoint(const MlpModel& model, const OptimizerState& opt, const std::string& path);
std::pair<MlpModel, OptimizerState> load_checkpoint(const std::string& path);

}  // namespace drivemon::nn
