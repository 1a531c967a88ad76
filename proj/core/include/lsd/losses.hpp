#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "lsd/nn.hpp"

namespace lsd::nn {

template <typename T>
Tensor<T> scalar_tensor(double v) {
    return Tensor<T>({1}, std::vector<T>{static_cast<T>(v)});
}

/// (labels.size(), classes) one-hot matrix.
template <typename T>
Tensor<T> one_hot(std::span<const std::size_t> labels, std::size_t classes) {
    Tensor<T> out = Tensor<T>::matrix(labels.size(), classes);
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] >= classes) throw ShapeError("label " + std::to_string(labels[r]) + " out of range");
        out(r, labels[r]) = T{1};
    }
    return out;
}

/// Mean over the batch of -log softmax(logits)[true class]. The gradient is
/// taken with respect to the logits: (softmax - onehot) / batch.
template <typename T>
LossTerm<T> cross_entropy(const Tensor<T>& logits, const Tensor<T>& onehot) {
    if (logits.shape() != onehot.shape() || logits.rank() != 2) {
        throw ShapeError("cross_entropy shape mismatch: logits " + shape_string(logits.shape()) + ", onehot " +
                         shape_string(onehot.shape()));
    }
    const std::size_t batch = logits.rows();
    const std::size_t classes = logits.cols();
    Tensor<T> grad = Tensor<T>::matrix(batch, classes);
    double total = 0.0;
    for (std::size_t r = 0; r < batch; ++r) {
        auto lr = logits.row(r);
        auto yr = onehot.row(r);
        std::size_t truth = classes;
        for (std::size_t c = 0; c < classes; ++c) {
            if (yr[c] == T{1}) {
                if (truth != classes) truth = classes + 1;
                else truth = c;
            } else if (yr[c] != T{0}) {
                truth = classes + 1;
            }
        }
        if (truth >= classes) throw ShapeError("cross_entropy: onehot row " + std::to_string(r) + " is not one-hot");
        double mx = lr[0];
        for (T v : lr) mx = std::max(mx, static_cast<double>(v));
        double sum = 0.0;
        for (T v : lr) sum += std::exp(static_cast<double>(v) - mx);
        const double log_z = mx + std::log(sum);
        total += log_z - static_cast<double>(lr[truth]);
        auto gr = grad.row(r);
        for (std::size_t c = 0; c < classes; ++c) {
            const double p = std::exp(static_cast<double>(lr[c]) - log_z);
            gr[c] = static_cast<T>((p - (c == truth ? 1.0 : 0.0)) / static_cast<double>(batch));
        }
    }
    return {scalar_tensor<T>(total / static_cast<double>(batch)), std::move(grad), SeedPoint::logits};
}

struct GanLosses {
    double discriminator;
    double generator;
};

inline constexpr double kProbabilityClamp = 1e-7;

/// Jensen-Shannon discriminator loss and non-saturating generator loss from
/// sigmoid outputs. Probabilities are clamped to [1e-7, 1 - 1e-7] so the
/// values stay finite.
template <typename T>
GanLosses gan_losses(const Tensor<T>& disc_real, const Tensor<T>& disc_fake) {
    if (disc_real.size() != disc_fake.size() || disc_real.empty()) {
        throw ShapeError("gan_losses batch mismatch: real " + shape_string(disc_real.shape()) + ", fake " +
                         shape_string(disc_fake.shape()));
    }
    auto clamp = [](double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); };
    double real_term = 0.0, fake_term = 0.0, gen_term = 0.0;
    for (T p : disc_real.storage()) real_term -= std::log(clamp(p));
    for (T p : disc_fake.storage()) {
        fake_term -= std::log(1.0 - clamp(p));
        gen_term -= std::log(clamp(p));
    }
    const double n = static_cast<double>(disc_real.size());
    return {(real_term + fake_term) / n, gen_term / n};
}

/// Discriminator loss over the stacked batch [real; fake] (shape (2B, 1)),
/// seeded at the discriminator logits: d/da of -log s(a) is -(1 - p), of
/// -log(1 - s(a)) is p.
template <typename T>
LossTerm<T> discriminator_loss(const Tensor<T>& stacked_probs, std::size_t real_count) {
    if (stacked_probs.rank() != 2 || stacked_probs.cols() != 1 || stacked_probs.rows() != 2 * real_count) {
        throw ShapeError("discriminator_loss expects (2B, 1) probabilities, got " +
                         shape_string(stacked_probs.shape()));
    }
    Tensor<T> real = stacked_probs.slice_rows(0, real_count);
    Tensor<T> fake = stacked_probs.slice_rows(real_count, 2 * real_count);
    const GanLosses l = gan_losses(real, fake);
    Tensor<T> grad = Tensor<T>::matrix(2 * real_count, 1);
    const double n = static_cast<double>(real_count);
    for (std::size_t i = 0; i < real_count; ++i) {
        grad[i] = static_cast<T>(-(1.0 - static_cast<double>(real[i])) / n);
        grad[real_count + i] = static_cast<T>(static_cast<double>(fake[i]) / n);
    }
    return {scalar_tensor<T>(l.discriminator), std::move(grad), SeedPoint::logits};
}

/// Non-saturating generator loss -mean(log D(G(z))), seeded at the
/// discriminator logits.
template <typename T>
LossTerm<T> generator_loss(const Tensor<T>& disc_fake) {
    const GanLosses l = gan_losses(disc_fake, disc_fake);
    Tensor<T> grad(disc_fake.shape());
    const double n = static_cast<double>(disc_fake.size());
    for (std::size_t i = 0; i < disc_fake.size(); ++i) {
        grad[i] = static_cast<T>(-(1.0 - static_cast<double>(disc_fake[i])) / n);
    }
    return {scalar_tensor<T>(l.generator), std::move(grad), SeedPoint::logits};
}

template <typename T>
struct KlTerm {
    double value;
    Tensor<T> grad_mu;
    Tensor<T> grad_log_sigma;
};

/// KL(N(mu, sigma^2) || N(0, 1)) summed over latent coordinates and averaged
/// over the batch: 0.5 * (mu^2 + sigma^2 - 1 - 2 log sigma).
template <typename T>
KlTerm<T> kl_gauss(const Tensor<T>& mu, const Tensor<T>& log_sigma) {
    if (mu.shape() != log_sigma.shape() || mu.rank() != 2) {
        throw ShapeError("kl_gauss shape mismatch: mu " + shape_string(mu.shape()) + ", log_sigma " +
                         shape_string(log_sigma.shape()));
    }
    const double batch = static_cast<double>(mu.rows());
    KlTerm<T> out{0.0, Tensor<T>(mu.shape()), Tensor<T>(mu.shape())};
    double total = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double m = mu[i];
        const double ls = log_sigma[i];
        const double s2 = std::exp(2.0 * ls);
        total += 0.5 * (m * m + s2 - 1.0 - 2.0 * ls);
        out.grad_mu[i] = static_cast<T>(m / batch);
        out.grad_log_sigma[i] = static_cast<T>((s2 - 1.0) / batch);
    }
    out.value = total / batch;
    return out;
}

/// Mean over batch and pixels of max(0, 1 - x_true * x_pred).
template <typename T>
LossTerm<T> hinge_recon(const Tensor<T>& x_true, const Tensor<T>& x_pred) {
    if (x_true.shape() != x_pred.shape()) {
        throw ShapeError("hinge_recon shape mismatch: " + shape_string(x_true.shape()) + " vs " +
                         shape_string(x_pred.shape()));
    }
    const double n = static_cast<double>(x_true.size());
    Tensor<T> grad(x_pred.shape());
    double total = 0.0;
    for (std::size_t i = 0; i < x_true.size(); ++i) {
        const double margin = 1.0 - static_cast<double>(x_true[i]) * static_cast<double>(x_pred[i]);
        if (margin > 0.0) {
            total += margin;
            grad[i] = static_cast<T>(-static_cast<double>(x_true[i]) / n);
        }
    }
    return {scalar_tensor<T>(total / n), std::move(grad), SeedPoint::output};
}

/// Mean squared error; the selectable alternative to hinge_recon.
template <typename T>
LossTerm<T> mse_recon(const Tensor<T>& x_true, const Tensor<T>& x_pred) {
    if (x_true.shape() != x_pred.shape()) {
        throw ShapeError("mse_recon shape mismatch: " + shape_string(x_true.shape()) + " vs " +
                         shape_string(x_pred.shape()));
    }
    const double n = static_cast<double>(x_true.size());
    Tensor<T> grad(x_pred.shape());
    double total = 0.0;
    for (std::size_t i = 0; i < x_true.size(); ++i) {
        const double d = static_cast<double>(x_pred[i]) - static_cast<double>(x_true[i]);
        total += d * d;
        grad[i] = static_cast<T>(2.0 * d / n);
    }
    return {scalar_tensor<T>(total / n), std::move(grad), SeedPoint::output};
}

}  // namespace lsd::nn
