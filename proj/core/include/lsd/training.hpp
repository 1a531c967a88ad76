#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "lsd/adam.hpp"
#include "lsd/models.hpp"

namespace lsd::training {

enum class ReconLoss { hinge, mse };

struct TrainConfig {
    std::size_t batch_size = 25;
    std::size_t epochs = 30;
    std::size_t latent_dim = 100;
    std::size_t labels = models::kLabelCount;
    double lambda = 100.0;
    double kl_weight = 1.0;
    double recon_weight = 1.0;
    ReconLoss recon = ReconLoss::hinge;
    nn::AdamConfig gan_adam = nn::AdamConfig::gan();
    nn::AdamConfig classifier_adam = nn::AdamConfig::classifier();
    nn::AdamConfig encoder_adam = nn::AdamConfig::gan();
    std::uint64_t seed = 0;

    /// batch_size >= 1, latent_dim a multiple of labels, Adam settings valid.
    void validate() const;
};

using ProgressFn = std::function<void(std::string_view)>;

struct GanEpoch {
    std::size_t epoch;
    double loss_discriminator;
    double loss_generator;
};

struct GanRun {
    models::Model generator;
    models::Model discriminator;
    std::vector<GanEpoch> history;
};

/// Alternating discriminator/generator Adam updates, one pair per batch.
/// Latents are N(0, I_M). Data order is reshuffled each epoch from rng and
/// the last partial batch is dropped.
GanRun train_gan(const TensorF& images, const TrainConfig& cfg, SeededRng& rng, const ProgressFn& progress = {});

struct ClassifierEpoch {
    std::size_t epoch;
    double loss;
    double train_accuracy;
};

struct ClassifierRun {
    models::Model classifier;
    std::vector<ClassifierEpoch> history;
};

ClassifierRun train_classifier(const TensorF& images, std::span<const std::size_t> labels, const TrainConfig& cfg,
                               SeededRng& rng, const ProgressFn& progress = {});

struct EncoderEpoch {
    std::size_t epoch;
    double loss;
    double kl;
    double recon;
    double classification;
};

struct EncoderRun {
    models::Model encoder;
    std::vector<EncoderEpoch> history;
};

/// Trains only the encoder against a frozen generator (decoder) and frozen
/// classifier. Per batch:
///   loss = kl_weight * KL + recon_weight * recon(x, G(z)) + lambda * CE(C(G(z)), label)
/// with z = mu + sigma * eps.
EncoderRun train_encoder(const TensorF& images, std::span<const std::size_t> labels, const models::Model& generator,
                         const models::Model& classifier, const TrainConfig& cfg, SeededRng& rng,
                         const ProgressFn& progress = {});

/// Fraction of rows whose classifier argmax equals the label (batched).
double classifier_accuracy(const models::Model& classifier, const TensorF& images, std::span<const std::size_t> labels);

}  // namespace lsd::training
