#include "cnet/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

namespace cnet {

Tensor::Tensor(std::vector<std::size_t> dims) : shape(std::move(dims)) {
    std::size_t total = 1;
    for (std::size_t d : shape) total *= d;
    values.assign(total, 0.0);
}

Conv1DLayer::Conv1DLayer(std::size_t out, std::size_t in, std::size_t kernel)
    : out_channels(out), in_channels(in), kernel_size(kernel), weights({out, in, kernel}), bias({out}) {}

DenseLayer::DenseLayer(std::size_t fan_in, std::size_t fan_out, Activation act)
    : weights({fan_in, fan_out}), bias({fan_out}), activation(act) {}

std::array<Tensor*, NeuralNet::kTensorCount> NeuralNet::tensors() {
    return {&conv.weights, &conv.bias,       &hidden1.weights, &hidden1.bias,
            &hidden2.weights, &hidden2.bias, &output.weights,  &output.bias};
}

std::array<const Tensor*, NeuralNet::kTensorCount> NeuralNet::tensors() const {
    return {&conv.weights, &conv.bias,       &hidden1.weights, &hidden1.bias,
            &hidden2.weights, &hidden2.bias, &output.weights,  &output.bias};
}

std::size_t NeuralNet::parameter_count() const {
    std::size_t total = 0;
    for (const Tensor* t : tensors()) total += t->size();
    return total;
}

NeuralNet NeuralNet::zeros_like() const {
    NeuralNet out = *this;
    for (Tensor* t : out.tensors()) std::fill(t->values.begin(), t->values.end(), 0.0);
    return out;
}

NeuralNet make_network(std::size_t input_size, const NetConfig& config) {
    if (input_size == 0) throw ShapeError("network needs at least one input feature");
    if (config.conv_channels == 0 || config.kernel_size == 0 || config.hidden_units == 0) {
        throw UsageError("conv channels, kernel size and hidden units must be positive");
    }
    if (!(config.huber_delta > 0.0)) throw UsageError("huber delta must be positive");
    NeuralNet net;
    net.input_size = input_size;
    net.conv = Conv1DLayer(config.conv_channels, 1, config.kernel_size);
    net.hidden1 = DenseLayer(config.conv_channels * input_size, config.hidden_units, Activation::Elu);
    net.hidden2 = DenseLayer(config.hidden_units, config.hidden_units, Activation::Elu);
    net.output = DenseLayer(config.hidden_units, 1, Activation::Linear);
    net.huber_delta = config.huber_delta;
    return net;
}

void initialize(NeuralNet& net, Rng& rng) {
    auto fill = [&rng](Tensor& weights, Tensor& bias, std::size_t fan_in) {
        const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
        for (double& w : weights.values) w = rng.uniform(-bound, bound);
        for (double& b : bias.values) b = rng.uniform(-bound, bound);
    };
    fill(net.conv.weights, net.conv.bias, net.conv.in_channels * net.conv.kernel_size);
    fill(net.hidden1.weights, net.hidden1.bias, net.hidden1.fan_in());
    fill(net.hidden2.weights, net.hidden2.bias, net.hidden2.fan_in());
    fill(net.output.weights, net.output.bias, net.output.fan_in());
}

Matrix conv1d_forward(const Matrix& input, const Conv1DLayer& layer) {
    if (input.rows() != layer.in_channels) {
        throw ShapeError("conv1d: input has " + std::to_string(input.rows()) + " channels, layer expects " +
                         std::to_string(layer.in_channels));
    }
    const std::size_t length = input.cols();
    const auto pad = static_cast<std::ptrdiff_t>((layer.kernel_size - 1) / 2);
    Matrix out(layer.out_channels, length);
    for (std::size_t o = 0; o < layer.out_channels; ++o) {
        auto dst = out.row(o);
        std::fill(dst.begin(), dst.end(), layer.bias.values[o]);
        for (std::size_t k = 0; k < layer.in_channels; ++k) {
            const auto src = input.row(k);
            for (std::size_t t = 0; t < layer.kernel_size; ++t) {
                const double w = layer.weight(o, k, t);
                const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(t) - pad;
                const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
                const std::ptrdiff_t hi =
                    std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(length), static_cast<std::ptrdiff_t>(length) - shift);
                for (std::ptrdiff_t p = lo; p < hi; ++p) dst[p] += w * src[p + shift];
            }
        }
    }
    return out;
}

void conv1d_backward(const Matrix& input, const Matrix& grad_output, Conv1DLayer& grad) {
    if (input.rows() != grad.in_channels || grad_output.rows() != grad.out_channels ||
        grad_output.cols() != input.cols()) {
        throw ShapeError("conv1d_backward: shape mismatch");
    }
    const std::size_t length = input.cols();
    const auto pad = static_cast<std::ptrdiff_t>((grad.kernel_size - 1) / 2);
    for (std::size_t o = 0; o < grad.out_channels; ++o) {
        const auto g = grad_output.row(o);
        grad.bias.values[o] += std::accumulate(g.begin(), g.end(), 0.0);
        for (std::size_t k = 0; k < grad.in_channels; ++k) {
            const auto src = input.row(k);
            for (std::size_t t = 0; t < grad.kernel_size; ++t) {
                const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(t) - pad;
                const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
                const std::ptrdiff_t hi =
                    std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(length), static_cast<std::ptrdiff_t>(length) - shift);
                double sum = 0.0;
                for (std::ptrdiff_t p = lo; p < hi; ++p) sum += g[p] * src[p + shift];
                grad.weights.values[(o * grad.in_channels + k) * grad.kernel_size + t] += sum;
            }
        }
    }
}

namespace {

void dense_forward(const DenseLayer& layer, std::span<const double> in, std::vector<double>& z) {
    const std::size_t fan_out = layer.fan_out();
    z.assign(layer.bias.values.begin(), layer.bias.values.end());
    const double* w = layer.weights.values.data();
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double a = in[i];
        const double* wi = w + i * fan_out;
        for (std::size_t j = 0; j < fan_out; ++j) z[j] += a * wi[j];
    }
}

void apply_elu(const std::vector<double>& z, std::vector<double>& h) {
    h.resize(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) h[j] = elu(z[j]);
}

// dW += in (x) dz, db += dz; returns dLoss/d(in) in `d_in` when non-null.
void dense_backward(const DenseLayer& layer, std::span<const double> in, std::span<const double> dz,
                    DenseLayer& grad, std::vector<double>* d_in) {
    const std::size_t fan_out = layer.fan_out();
    for (std::size_t j = 0; j < fan_out; ++j) grad.bias.values[j] += dz[j];
    double* gw = grad.weights.values.data();
    const double* w = layer.weights.values.data();
    if (d_in != nullptr) d_in->assign(in.size(), 0.0);
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double a = in[i];
        double* gwi = gw + i * fan_out;
        for (std::size_t j = 0; j < fan_out; ++j) gwi[j] += a * dz[j];
        if (d_in != nullptr) {
            const double* wi = w + i * fan_out;
            double sum = 0.0;
            for (std::size_t j = 0; j < fan_out; ++j) sum += wi[j] * dz[j];
            (*d_in)[i] = sum;
        }
    }
}

}  // namespace

double forward(const NeuralNet& net, std::span<const double> x, ForwardCache& cache) {
    if (x.size() != net.input_size) {
        throw ShapeError("forward: input has " + std::to_string(x.size()) + " features, network expects " +
                         std::to_string(net.input_size));
    }
    Matrix input(1, x.size());
    std::copy(x.begin(), x.end(), input.row(0).begin());
    cache.feature_maps = conv1d_forward(input, net.conv);
    dense_forward(net.hidden1, cache.feature_maps.values(), cache.z1);
    apply_elu(cache.z1, cache.h1);
    dense_forward(net.hidden2, cache.h1, cache.z2);
    apply_elu(cache.z2, cache.h2);
    std::vector<double> out;
    dense_forward(net.output, cache.h2, out);
    cache.output = out[0];
    return cache.output;
}

double predict(const NeuralNet& net, std::span<const double> x) {
    ForwardCache cache;
    return forward(net, x, cache);
}

double huber_loss(double y, double y_hat, double delta) {
    if (!(delta > 0.0)) throw UsageError("huber delta must be positive");
    const double r = std::abs(y - y_hat);
    if (r <= delta) return 0.5 * r * r;
    return delta * (r - 0.5 * delta);
}

double huber_gradient(double y, double y_hat, double delta) {
    if (!(delta > 0.0)) throw UsageError("huber delta must be positive");
    const double r = y_hat - y;
    if (std::abs(r) <= delta) return r;
    return r > 0.0 ? delta : -delta;
}

namespace {

void check_pair(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size()) throw ShapeError("loss: vectors differ in length");
    if (y.empty()) throw ShapeError("loss: empty vectors");
}

}  // namespace

double mse(std::span<const double> y, std::span<const double> y_hat) {
    check_pair(y, y_hat);
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) sum += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    return sum / static_cast<double>(y.size());
}

double mae(std::span<const double> y, std::span<const double> y_hat) {
    check_pair(y, y_hat);
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) sum += std::abs(y[i] - y_hat[i]);
    return sum / static_cast<double>(y.size());
}

double backward(const NeuralNet& net, std::span<const double> x, double y, const ForwardCache& cache,
                NeuralNet& grads) {
    const double d_out = huber_gradient(y, cache.output, net.huber_delta);
    const double d_output[1] = {d_out};

    std::vector<double> d_h2;
    dense_backward(net.output, cache.h2, d_output, grads.output, &d_h2);
    for (std::size_t j = 0; j < d_h2.size(); ++j) d_h2[j] *= elu_derivative(cache.z2[j]);

    std::vector<double> d_h1;
    dense_backward(net.hidden2, cache.h1, d_h2, grads.hidden2, &d_h1);
    for (std::size_t j = 0; j < d_h1.size(); ++j) d_h1[j] *= elu_derivative(cache.z1[j]);

    std::vector<double> d_maps;
    dense_backward(net.hidden1, cache.feature_maps.values(), d_h1, grads.hidden1, &d_maps);

    Matrix grad_maps(net.conv.out_channels, net.input_size);
    std::copy(d_maps.begin(), d_maps.end(), grad_maps.values().begin());
    Matrix input(1, x.size());
    std::copy(x.begin(), x.end(), input.row(0).begin());
    conv1d_backward(input, grad_maps, grads.conv);

    return huber_loss(y, cache.output, net.huber_delta);
}

AdamState make_adam_state(std::span<const Tensor* const> params, double learning_rate) {
    AdamState state;
    state.learning_rate = learning_rate;
    for (const Tensor* t : params) {
        state.first_moment.emplace_back(t->shape);
        state.second_moment.emplace_back(t->shape);
    }
    return state;
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
        throw ShapeError("adam_step: parameter, gradient and state counts differ");
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(state.beta1, t);
    const double correction2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& theta = params[k]->values;
        const auto& g = grads[k]->values;
        auto& m = state.first_moment[k].values;
        auto& v = state.second_moment[k].values;
        if (g.size() != theta.size() || m.size() != theta.size()) {
            throw ShapeError("adam_step: tensor shapes differ");
        }
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            theta[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
    }
}

std::pair<NeuralNet, TrainReport> train_network(const Matrix& X, std::span<const double> y,
                                                const NetConfig& net_config, const TrainConfig& config,
                                                std::uint64_t seed) {
    const std::size_t n = X.rows();
    if (n == 0) throw DataError("cannot train a network on an empty training set");
    if (y.size() != n) throw ShapeError("train_network: X and y differ in row count");
    if (config.batch_size == 0) throw UsageError("batch size must be positive");

    Rng rng(seed);
    NeuralNet net = make_network(X.cols(), net_config);
    initialize(net, rng);
    NeuralNet grads = net.zeros_like();
    const auto param_ptrs = net.tensors();
    const auto grad_ptrs = std::as_const(grads).tensors();
    auto state = make_adam_state(std::as_const(net).tensors(), config.learning_rate);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    ForwardCache cache;
    TrainReport report;
    report.epoch_loss.reserve(config.epochs);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t stop = std::min(n, start + config.batch_size);
            for (Tensor* t : grads.tensors()) std::fill(t->values.begin(), t->values.end(), 0.0);
            for (std::size_t b = start; b < stop; ++b) {
                const std::size_t i = order[b];
                forward(net, X.row(i), cache);
                epoch_loss += backward(net, X.row(i), y[i], cache, grads);
            }
            if (!std::isfinite(epoch_loss)) {
                std::ostringstream msg;
                msg << "non-finite training loss at epoch " << epoch + 1 << " (batch starting at " << start
                    << "); try a smaller learning rate";
                throw NumericError(msg.str());
            }
            const double scale = 1.0 / static_cast<double>(stop - start);
            for (Tensor* t : grads.tensors()) {
                for (double& g : t->values) g *= scale;
            }
            adam_step(param_ptrs, grad_ptrs, state);
        }
        report.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
    }

    double abs_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) abs_sum += std::abs(forward(net, X.row(i), cache) - y[i]);
    report.mean_abs_residual = abs_sum / static_cast<double>(n);
    if (!std::isfinite(report.mean_abs_residual)) throw NumericError("non-finite training residual after training");
    return {std::move(net), std::move(report)};
}

std::pair<NeuralNet, TrainReport> train_network(const Dataset& train, const NetConfig& net_config,
                                                const TrainConfig& config, std::uint64_t seed) {
    return train_network(train.X, train.y, net_config, config, seed);
}

}  // namespace cnet
