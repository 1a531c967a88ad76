#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lsd/nn.hpp"

namespace lsd::nn {

struct AdamConfig {
    double eta = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    /// Generator/discriminator settings (also reused for the encoder).
    static AdamConfig gan() { return {2e-4, 0.9, 0.999, 1e-8}; }
    static AdamConfig classifier() { return {3e-5, 0.5, 0.99, 1e-8}; }

    void validate() const {
        if (!(eta > 0.0) || !(epsilon > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
            throw ConfigError("invalid Adam settings: need eta > 0, epsilon > 0, 0 <= beta1, beta2 < 1");
        }
    }
};

template <typename T>
struct AdamState {
    AdamConfig config;
    std::uint64_t step = 0;
    std::vector<Tensor<T>> first_moment;
    std::vector<Tensor<T>> second_moment;

    AdamState() = default;
    AdamState(const AdamConfig& cfg, const std::vector<const Tensor<T>*>& params) : config(cfg) {
        cfg.validate();
        for (const auto* p : params) {
            first_moment.emplace_back(p->shape());
            second_moment.emplace_back(p->shape());
        }
    }
    AdamState(const AdamConfig& cfg, const std::vector<Tensor<T>*>& params)
        : AdamState(cfg, std::vector<const Tensor<T>*>(params.begin(), params.end())) {}
};

/// One bias-corrected Adam update. Rejects non-finite gradients before
/// touching any parameter.
template <typename T>
void adam_step(const std::vector<Tensor<T>*>& params, const Gradients<T>& grads, AdamState<T>& state) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
        throw ShapeError("adam_step: parameter, gradient and state lists differ in length");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->shape() != grads[i].shape() || params[i]->shape() != state.first_moment[i].shape()) {
            throw ShapeError("adam_step: shape mismatch at parameter " + std::to_string(i) + ": " +
                             shape_string(params[i]->shape()) + " vs gradient " + shape_string(grads[i].shape()));
        }
        if (!grads[i].all_finite()) {
            throw NumericError("adam_step: non-finite gradient in parameter " + std::to_string(i));
        }
    }
    const auto& cfg = state.config;
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    const T b1 = static_cast<T>(cfg.beta1);
    const T b2 = static_cast<T>(cfg.beta2);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i]->storage();
        const auto& g = grads[i].storage();
        auto& m = state.first_moment[i].storage();
        auto& v = state.second_moment[i].storage();
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = b1 * m[j] + (T{1} - b1) * g[j];
            v[j] = b2 * v[j] + (T{1} - b2) * g[j] * g[j];
            const double m_hat = static_cast<double>(m[j]) / c1;
            const double v_hat = static_cast<double>(v[j]) / c2;
            p[j] = static_cast<T>(static_cast<double>(p[j]) - cfg.eta * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
        }
    }
}

}  // namespace lsd::nn
