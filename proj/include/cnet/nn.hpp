#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "cnet/data.hpp"
#include "cnet/matrix.hpp"
#include "cnet/random.hpp"

namespace cnet {

struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> dims);

    std::size_t size() const { return values.size(); }
    bool operator==(const Tensor&) const = default;
};

enum class Activation : std::uint8_t { Linear = 0, Elu = 1 };

// 1D convolution, cross-correlation convention, "same" zero padding, stride 1.
// For an even kernel the extra padding goes on the right.
struct Conv1DLayer {
    std::size_t out_channels = 0;
    std::size_t in_channels = 0;
    std::size_t kernel_size = 0;
    Tensor weights;  // out_channels x in_channels x kernel_size
    Tensor bias;     // out_channels

    Conv1DLayer() = default;
    Conv1DLayer(std::size_t out, std::size_t in, std::size_t kernel);

    double weight(std::size_t o, std::size_t k, std::size_t t) const {
        return weights.values[(o * in_channels + k) * kernel_size + t];
    }
    std::size_t parameter_count() const { return weights.size() + bias.size(); }
    bool operator==(const Conv1DLayer&) const = default;
};

struct DenseLayer {
    Tensor weights;  // fan_in x fan_out, row-major
    Tensor bias;     // fan_out
    Activation activation = Activation::Linear;

    DenseLayer() = default;
    DenseLayer(std::size_t fan_in, std::size_t fan_out, Activation act);

    std::size_t fan_in() const { return weights.shape.at(0); }
    std::size_t fan_out() const { return weights.shape.at(1); }
    bool operator==(const DenseLayer&) const = default;
};

struct NetConfig {
    std::size_t conv_channels = 16;
    std::size_t kernel_size = 3;
    std::size_t hidden_units = 100;
    double huber_delta = 1.0;
};

// conv -> flatten -> dense ELU -> dense ELU -> dense linear scalar.
struct NeuralNet {
    std::size_t input_size = 0;
    Conv1DLayer conv;
    DenseLayer hidden1;
    DenseLayer hidden2;
    DenseLayer output;
    double huber_delta = 1.0;

    static constexpr std::size_t kTensorCount = 8;

    // Parameter tensors in layer order: conv W, conv b, hidden1 W, b, hidden2 W, b, output W, b.
    std::array<Tensor*, kTensorCount> tensors();
    std::array<const Tensor*, kTensorCount> tensors() const;

    std::size_t parameter_count() const;
    NeuralNet zeros_like() const;
    bool operator==(const NeuralNet&) const = default;
};

// Zero-initialised network with the given architecture.
NeuralNet make_network(std::size_t input_size, const NetConfig& config);

// uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) for every weight and bias of a layer.
void initialize(NeuralNet& net, Rng& rng);

inline double elu(double z) { return z > 0.0 ? z : std::expm1(z); }
inline double elu_derivative(double z) { return z > 0.0 ? 1.0 : std::exp(z); }

// input: in_channels x length. Returns out_channels x length.
Matrix conv1d_forward(const Matrix& input, const Conv1DLayer& layer);

// Adds dLoss/dW and dLoss/db of the conv layer to `grad`, given dLoss/d(output).
void conv1d_backward(const Matrix& input, const Matrix& grad_output, Conv1DLayer& grad);

struct ForwardCache {
    Matrix feature_maps;       // conv output, out_channels x input_size
    std::vector<double> z1, h1, z2, h2;
    double output = 0.0;
};

double forward(const NeuralNet& net, std::span<const double> x, ForwardCache& cache);
double predict(const NeuralNet& net, std::span<const double> x);

double huber_loss(double y, double y_hat, double delta);
// d huber / d y_hat
double huber_gradient(double y, double y_hat, double delta);

double mse(std::span<const double> y, std::span<const double> y_hat);
double mae(std::span<const double> y, std::span<const double> y_hat);

// Accumulates the gradient of the Huber loss of one sample into `grads`
// (shaped like `net`) using the activations in `cache`. Returns the loss.
double backward(const NeuralNet& net, std::span<const double> x, double y, const ForwardCache& cache,
                NeuralNet& grads);

struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step = 0;
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
};

// Zeroed accumulators shaped like `params`.
AdamState make_adam_state(std::span<const Tensor* const> params, double learning_rate = 1e-3);

void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, AdamState& state);

struct TrainConfig {
    std::size_t epochs = 500;
    std::size_t batch_size = 16;
    double learning_rate = 1e-3;
};

struct TrainReport {
    std::vector<double> epoch_loss;     // mean Huber loss per epoch
    double mean_abs_residual = 0.0;     // l_n, over the training rows after the last epoch
};

std::pair<NeuralNet, TrainReport> train_network(const Matrix& X, std::span<const double> y,
                                                const NetConfig& net_config, const TrainConfig& config,
                                                std::uint64_t seed);

std::pair<NeuralNet, TrainReport> train_network(const Dataset& train, const NetConfig& net_config,
                                                const TrainConfig& config, std::uint64_t seed);

}  // namespace cnet
