#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "lsd/rng.hpp"
#include "lsd/tensor.hpp"

namespace lsd::nn {

enum class Activation { linear, relu, tanh, sigmoid, softmax };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

/// Apply an activation in place to a (batch, width) tensor. Softmax is row-wise.
template <typename T>
void activate(Tensor<T>& x, Activation act) {
    switch (act) {
        case Activation::linear:
            return;
        case Activation::relu:
            for (auto& v : x.storage()) v = v < T{0} ? T{0} : v;  // NaN passes through
            return;
        case Activation::tanh:
            for (auto& v : x.storage()) v = std::tanh(v);
            return;
        case Activation::sigmoid:
            for (auto& v : x.storage()) v = T{1} / (T{1} + std::exp(-v));
            return;
        case Activation::softmax:
            for (std::size_t r = 0; r < x.rows(); ++r) {
                auto row = x.row(r);
                T mx = row[0];
                for (T v : row) mx = std::max(mx, v);
                double sum = 0.0;
                for (auto& v : row) {
                    v = std::exp(v - mx);
                    sum += v;
                }
                for (auto& v : row) v = static_cast<T>(v / sum);
            }
            return;
    }
}

/// y = act(x W^T + b) with W (out, in), b (out), x (batch, in).
template <typename T>
Tensor<T> dense_preactivation(const Tensor<T>& weights, const Tensor<T>& bias, const Tensor<T>& input) {
    if (weights.rank() != 2 || input.rank() != 2 || bias.rank() != 1 || weights.cols() != input.cols() ||
        bias.shape()[0] != weights.rows()) {
        throw ShapeError("dense layer shape mismatch: weights " + shape_string(weights.shape()) + ", bias " +
                         shape_string(bias.shape()) + ", input " + shape_string(input.shape()));
    }
    Tensor<T> out = Tensor<T>::matrix(input.rows(), weights.rows());
    out.mat().noalias() = input.mat() * weights.mat().transpose();
    out.mat().rowwise() += bias.vec().transpose();
    return out;
}

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& weights, const Tensor<T>& bias, const Tensor<T>& input, Activation act) {
    Tensor<T> out = dense_preactivation(weights, bias, input);
    activate(out, act);
    return out;
}

template <typename T>
struct DenseLayer {
    Tensor<T> weights;  // (out, in)
    Tensor<T> bias;     // (out)
    Activation activation = Activation::linear;

    std::size_t in_dim() const { return weights.cols(); }
    std::size_t out_dim() const { return weights.rows(); }
};

/// Intermediates recorded by a traced forward pass.
template <typename T>
struct ForwardTrace {
    std::vector<Tensor<T>> inputs;       // input to each layer
    std::vector<Tensor<T>> activations;  // post-activation output of each layer

    const Tensor<T>& output() const { return activations.back(); }
};

/// Where a backward seed enters the last layer: at its activated output, or
/// at its pre-activation (logits), which is how fused softmax/sigmoid losses
/// hand over their gradient.
enum class SeedPoint { output, logits };

/// One gradient tensor per parameter, in Network::parameters() order.
template <typename T>
using Gradients = std::vector<Tensor<T>>;

/// A scalar loss value together with its gradient with respect to a network
/// output (or logits).
template <typename T>
struct LossTerm {
    Tensor<T> value;  // must hold exactly one element
    Tensor<T> grad;
    SeedPoint seed = SeedPoint::output;

    double scalar() const { return static_cast<double>(value[0]); }
};

/// Feed-forward stack of dense layers.
template <typename T>
class Network {
public:
    Network() = default;
    explicit Network(std::vector<DenseLayer<T>> layers) : layers_(std::move(layers)) {
        for (std::size_t i = 1; i < layers_.size(); ++i) {
            if (layers_[i].in_dim() != layers_[i - 1].out_dim()) {
                throw ShapeError("layer " + std::to_string(i) + " expects input width " +
                                 std::to_string(layers_[i].in_dim()) + " but previous layer outputs " +
                                 std::to_string(layers_[i - 1].out_dim()));
            }
        }
    }

    const std::vector<DenseLayer<T>>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer<T>>& layers() noexcept { return layers_; }
    std::size_t input_dim() const { return layers_.front().in_dim(); }
    std::size_t output_dim() const { return layers_.back().out_dim(); }

    Tensor<T> forward(const Tensor<T>& x) const {
        check_input(x);
        Tensor<T> h = x;
        for (const auto& layer : layers_) h = dense_forward(layer.weights, layer.bias, h, layer.activation);
        return h;
    }

    Tensor<T> forward(const Tensor<T>& x, ForwardTrace<T>& trace) const {
        check_input(x);
        trace.inputs.clear();
        trace.activations.clear();
        Tensor<T> h = x;
        for (const auto& layer : layers_) {
            trace.inputs.push_back(h);
            h = dense_forward(layer.weights, layer.bias, h, layer.activation);
            trace.activations.push_back(h);
        }
        return h;
    }

    /// Pre-activation of the final layer, computed from a trace.
    Tensor<T> logits(const ForwardTrace<T>& trace) const {
        const auto& last = layers_.back();
        return dense_preactivation(last.weights, last.bias, trace.inputs.back());
    }

    std::vector<Tensor<T>*> parameters() {
        std::vector<Tensor<T>*> out;
        for (auto& l : layers_) {
            out.push_back(&l.weights);
            out.push_back(&l.bias);
        }
        return out;
    }
    std::vector<const Tensor<T>*> parameters() const {
        std::vector<const Tensor<T>*> out;
        for (const auto& l : layers_) {
            out.push_back(&l.weights);
            out.push_back(&l.bias);
        }
        return out;
    }
    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
        return n;
    }

    Gradients<T> zero_gradients() const {
        Gradients<T> g;
        for (const auto* p : parameters()) g.emplace_back(p->shape());
        return g;
    }

    template <typename U>
    Network<U> cast() const {
        std::vector<DenseLayer<U>> out;
        for (const auto& l : layers_) out.push_back({l.weights.template cast<U>(), l.bias.template cast<U>(), l.activation});
        return Network<U>(std::move(out));
    }

    friend bool operator==(const Network& a, const Network& b) {
        if (a.layers_.size() != b.layers_.size()) return false;
        for (std::size_t i = 0; i < a.layers_.size(); ++i) {
            const auto& x = a.layers_[i];
            const auto& y = b.layers_[i];
            if (!(x.weights == y.weights) || !(x.bias == y.bias) || x.activation != y.activation) return false;
        }
        return true;
    }

private:
    void check_input(const Tensor<T>& x) const {
        if (layers_.empty()) throw ShapeError("network has no layers");
        if (x.rank() != 2 || x.cols() != input_dim()) {
            throw ShapeError("network expects input (batch, " + std::to_string(input_dim()) + "), got " +
                             shape_string(x.shape()));
        }
    }

    std::vector<DenseLayer<T>> layers_;
};

/// Multiply an upstream gradient by the activation derivative, given the
/// activated output y. Softmax uses the row-wise Jacobian-vector product.
template <typename T>
void activation_backward(Tensor<T>& grad, const Tensor<T>& y, Activation act) {
    auto& g = grad.storage();
    const auto& o = y.storage();
    switch (act) {
        case Activation::linear:
            return;
        case Activation::relu:
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = o[i] > T{0} ? g[i] : T{0};
            return;
        case Activation::tanh:
            for (std::size_t i = 0; i < g.size(); ++i) g[i] *= T{1} - o[i] * o[i];
            return;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < g.size(); ++i) g[i] *= o[i] * (T{1} - o[i]);
            return;
        case Activation::softmax:
            for (std::size_t r = 0; r < grad.rows(); ++r) {
                auto gr = grad.row(r);
                auto yr = y.row(r);
                double dot = 0.0;
                for (std::size_t c = 0; c < gr.size(); ++c) dot += static_cast<double>(gr[c]) * yr[c];
                for (std::size_t c = 0; c < gr.size(); ++c) gr[c] = static_cast<T>(yr[c] * (gr[c] - dot));
            }
            return;
    }
}

/// Reverse-mode pass through a traced forward. Returns the gradient with
/// respect to the network input. Parameter gradients are accumulated into
/// `grads` when non-null; pass nullptr for frozen networks.
template <typename T>
Tensor<T> backpropagate(const Network<T>& net, const ForwardTrace<T>& trace, std::type_identity_t<Tensor<T>> seed,
                        SeedPoint point, std::type_identity_t<Gradients<T>>* grads) {
    const auto& layers = net.layers();
    if (trace.inputs.size() != layers.size() || trace.activations.size() != layers.size()) {
        throw ShapeError("backward needs a completed traced forward pass");
    }
    if (seed.shape() != trace.output().shape()) {
        throw ShapeError("backward seed " + shape_string(seed.shape()) + " does not match network output " +
                         shape_string(trace.output().shape()));
    }
    if (grads && grads->size() != 2 * layers.size()) throw ShapeError("gradient list does not match parameter list");

    Tensor<T> g = std::move(seed);
    for (std::size_t li = layers.size(); li-- > 0;) {
        const auto& layer = layers[li];
        if (!(li == layers.size() - 1 && point == SeedPoint::logits)) {
            activation_backward(g, trace.activations[li], layer.activation);
        }
        if (grads) {
            (*grads)[2 * li].mat().noalias() += g.mat().transpose() * trace.inputs[li].mat();
            (*grads)[2 * li + 1].vec() += g.mat().colwise().sum().transpose();
        }
        Tensor<T> gin = Tensor<T>::matrix(g.rows(), layer.in_dim());
        gin.mat().noalias() = g.mat() * layer.weights.mat();
        g = std::move(gin);
    }
    return g;
}

/// Gradients of a scalar loss with respect to every parameter.
template <typename T>
Gradients<T> backward(const Network<T>& net, const ForwardTrace<T>& trace, const LossTerm<T>& loss) {
    if (loss.value.size() != 1) {
        throw ShapeError("backward needs a scalar loss, got value of shape " + shape_string(loss.value.shape()));
    }
    Gradients<T> grads = net.zero_gradients();
    backpropagate(net, trace, loss.grad, loss.seed, &grads);
    return grads;
}

struct LayerShape {
    std::size_t width;
    Activation activation;
};

/// he_glorot: He-normal weights for ReLU layers, Glorot-normal elsewhere,
/// zero biases. fan_in_uniform: weights and biases from
/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)), weights before biases per layer.
enum class InitScheme { he_glorot, fan_in_uniform };

template <typename T>
Network<T> make_network(std::size_t input_dim, const std::vector<LayerShape>& shape, SeededRng& rng,
                        InitScheme scheme = InitScheme::he_glorot) {
    std::vector<DenseLayer<T>> layers;
    std::size_t in = input_dim;
    for (const auto& s : shape) {
        DenseLayer<T> layer{Tensor<T>::matrix(s.width, in), Tensor<T>({s.width}), s.activation};
        const auto fan_in = static_cast<double>(in);
        if (scheme == InitScheme::fan_in_uniform) {
            const double bound = 1.0 / std::sqrt(fan_in);
            for (auto& w : layer.weights.storage()) w = static_cast<T>(bound * (2.0 * rng.uniform() - 1.0));
            for (auto& b : layer.bias.storage()) b = static_cast<T>(bound * (2.0 * rng.uniform() - 1.0));
        } else {
            const double stddev = s.activation == Activation::relu
                                      ? std::sqrt(2.0 / fan_in)
                                      : std::sqrt(2.0 / (fan_in + static_cast<double>(s.width)));
            for (auto& w : layer.weights.storage()) w = static_cast<T>(stddev * rng.normal());
        }
        layers.push_back(std::move(layer));
        in = s.width;
    }
    return Network<T>(std::move(layers));
}

/// Index of the largest entry per row; ties go to the lowest index.
template <typename T>
std::vector<std::size_t> argmax_rows(const Tensor<T>& x) {
    std::vector<std::size_t> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto row = x.row(r);
        std::size_t best = 0;
        for (std::size_t c = 1; c < row.size(); ++c) {
            if (row[c] > row[best]) best = c;
        }
        out[r] = best;
    }
    return out;
}

}  // namespace lsd::nn
