#include "lsd/training.hpp"

#include <cmath>
#include <sstream>

#include "lsd/error.hpp"
#include "lsd/losses.hpp"

namespace lsd::training {

using models::Model;
using models::NetworkSpec;

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (labels < 1 || latent_dim < 1) throw ConfigError("latent_dim and labels must be positive");
    if (latent_dim % labels != 0) {
        throw ConfigError("latent_dim " + std::to_string(latent_dim) + " must be a multiple of the label count " +
                          std::to_string(labels));
    }
    if (!std::isfinite(lambda) || lambda < 0.0) throw ConfigError("lambda must be finite and >= 0");
    gan_adam.validate();
    classifier_adam.validate();
    encoder_adam.validate();
}

namespace {

std::size_t batch_count(std::size_t n, std::size_t batch) {
    if (n < batch) {
        throw ConfigError("training set of " + std::to_string(n) + " images is smaller than batch_size " +
                          std::to_string(batch));
    }
    return n / batch;
}

void check_finite(double v, const char* what, std::size_t epoch, std::size_t batch) {
    if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg << "non-finite " << what << " at epoch " << epoch << ", batch " << batch;
        throw NumericError(msg.str());
    }
}

template <typename T>
void step(const std::vector<Tensor<T>*>& params, const nn::Gradients<T>& grads, nn::AdamState<T>& state,
          const char* net, std::size_t epoch, std::size_t batch) {
    try {
        nn::adam_step(params, grads, state);
    } catch (const NumericError& e) {
        std::ostringstream msg;
        msg << net << " update rejected at epoch " << epoch << ", batch " << batch << ": " << e.what();
        throw NumericError(msg.str());
    }
}

std::vector<std::size_t> batch_indices(const std::vector<std::size_t>& order, std::size_t b, std::size_t size) {
    return {order.begin() + static_cast<std::ptrdiff_t>(b * size),
            order.begin() + static_cast<std::ptrdiff_t>((b + 1) * size)};
}

void check_images(const TensorF& images) {
    if (images.rank() != 2) throw ShapeError("training images must be (N, d), got " + shape_string(images.shape()));
}

void check_labels(const TensorF& images, std::span<const std::size_t> labels, std::size_t classes) {
    check_images(images);
    if (labels.size() != images.rows()) {
        throw ShapeError("image/label count mismatch: " + std::to_string(images.rows()) + " vs " +
                         std::to_string(labels.size()));
    }
    for (auto l : labels) {
        if (l >= classes) throw ShapeError("label " + std::to_string(l) + " out of range");
    }
}

}  // namespace

GanRun train_gan(const TensorF& images, const TrainConfig& cfg, SeededRng& rng, const ProgressFn& progress) {
    cfg.validate();
    check_images(images);
    GanRun run{Model::initialize(NetworkSpec::generator(cfg.latent_dim, images.cols()), rng, cfg.seed),
               Model::initialize(NetworkSpec::discriminator(images.cols()), rng, cfg.seed), {}};
    const std::size_t batches = cfg.epochs ? batch_count(images.rows(), cfg.batch_size) : 0;
    auto& gen = run.generator.net;
    auto& disc = run.discriminator.net;
    nn::AdamState<float> gen_state(cfg.gan_adam, gen.parameters());
    nn::AdamState<float> disc_state(cfg.gan_adam, disc.parameters());
    const std::size_t b = cfg.batch_size;

    nn::ForwardTrace<float> gen_trace, disc_trace;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto order = rng.permutation(images.rows());
        double sum_d = 0.0, sum_g = 0.0;
        for (std::size_t bi = 0; bi < batches; ++bi) {
            const auto idx = batch_indices(order, bi, b);
            const TensorF real = images.gather_rows(idx);
            const TensorF z = rng.normal_tensor<float>(b, cfg.latent_dim);
            const TensorF fake = gen.forward(z, gen_trace);

            // Discriminator on [real; fake].
            const TensorF probs = disc.forward(vstack(real, fake), disc_trace);
            const auto d_loss = nn::discriminator_loss(probs, b);
            check_finite(d_loss.scalar(), "discriminator loss", epoch, bi);
            step(disc.parameters(), nn::backward(disc, disc_trace, d_loss), disc_state, "discriminator", epoch, bi);

            // Generator through the updated discriminator.
            const TensorF fake_probs = disc.forward(fake, disc_trace);
            const auto g_loss = nn::generator_loss(fake_probs);
            check_finite(g_loss.scalar(), "generator loss", epoch, bi);
            TensorF dfake = nn::backpropagate(disc, disc_trace, g_loss.grad, g_loss.seed, nullptr);
            auto g_grads = gen.zero_gradients();
            nn::backpropagate(gen, gen_trace, std::move(dfake), nn::SeedPoint::output, &g_grads);
            step(gen.parameters(), g_grads, gen_state, "generator", epoch, bi);

            sum_d += d_loss.scalar();
            sum_g += g_loss.scalar();
        }
        const GanEpoch rec{epoch, sum_d / static_cast<double>(batches), sum_g / static_cast<double>(batches)};
        run.history.push_back(rec);
        if (progress) {
            std::ostringstream msg;
            msg << "gan epoch " << epoch << "/" << cfg.epochs << " loss_D=" << rec.loss_discriminator
                << " loss_G=" << rec.loss_generator;
            progress(msg.str());
        }
    }
    for (Model* m : {&run.generator, &run.discriminator}) {
        m->epochs_completed = cfg.epochs;
        m->hyperparameters = {{"batch_size", std::to_string(cfg.batch_size)},
                              {"adam_eta", std::to_string(cfg.gan_adam.eta)},
                              {"adam_beta1", std::to_string(cfg.gan_adam.beta1)},
                              {"adam_beta2", std::to_string(cfg.gan_adam.beta2)},
                              {"latent_dim", std::to_string(cfg.latent_dim)},
                              {"loss", "jensen_shannon_nonsaturating"}};
    }
    return run;
}

ClassifierRun train_classifier(const TensorF& images, std::span<const std::size_t> labels, const TrainConfig& cfg,
                               SeededRng& rng, const ProgressFn& progress) {
    cfg.validate();
    check_labels(images, labels, cfg.labels);
    ClassifierRun run{Model::initialize(NetworkSpec::classifier(cfg.labels, images.cols()), rng, cfg.seed), {}};
    auto& net = run.classifier.net;
    nn::AdamState<float> state(cfg.classifier_adam, net.parameters());
    const std::size_t batches = cfg.epochs ? batch_count(images.rows(), cfg.batch_size) : 0;
    nn::ForwardTrace<float> trace;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto order = rng.permutation(images.rows());
        double sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t bi = 0; bi < batches; ++bi) {
            const auto idx = batch_indices(order, bi, cfg.batch_size);
            std::vector<std::size_t> y(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) y[i] = labels[idx[i]];
            const TensorF probs = net.forward(images.gather_rows(idx), trace);
            const auto pred = nn::argmax_rows(probs);
            for (std::size_t i = 0; i < y.size(); ++i) correct += pred[i] == y[i];
            const auto loss = nn::cross_entropy(net.logits(trace), nn::one_hot<float>(y, cfg.labels));
            check_finite(loss.scalar(), "classifier loss", epoch, bi);
            step(net.parameters(), nn::backward(net, trace, loss), state, "classifier", epoch, bi);
            sum += loss.scalar();
        }
        const ClassifierEpoch rec{epoch, sum / static_cast<double>(batches),
                                  static_cast<double>(correct) / static_cast<double>(batches * cfg.batch_size)};
        run.history.push_back(rec);
        if (progress) {
            std::ostringstream msg;
            msg << "classifier epoch " << epoch << "/" << cfg.epochs << " loss=" << rec.loss
                << " train_acc=" << rec.train_accuracy;
            progress(msg.str());
        }
    }
    run.classifier.epochs_completed = cfg.epochs;
    run.classifier.hyperparameters = {{"batch_size", std::to_string(cfg.batch_size)},
                                      {"adam_eta", std::to_string(cfg.classifier_adam.eta)},
                                      {"adam_beta1", std::to_string(cfg.classifier_adam.beta1)},
                                      {"adam_beta2", std::to_string(cfg.classifier_adam.beta2)},
                                      {"loss", "cross_entropy"}};
    return run;
}

EncoderRun train_encoder(const TensorF& images, std::span<const std::size_t> labels, const Model& generator,
                         const Model& classifier, const TrainConfig& cfg, SeededRng& rng, const ProgressFn& progress) {
    cfg.validate();
    check_labels(images, labels, cfg.labels);
    if (generator.spec.role != models::Role::generator || classifier.spec.role != models::Role::classifier) {
        throw ConfigError("train_encoder needs a generator and a classifier");
    }
    if (generator.spec.input_dim != cfg.latent_dim) {
        throw ShapeError("generator latent width " + std::to_string(generator.spec.input_dim) +
                         " does not match latent_dim " + std::to_string(cfg.latent_dim));
    }
    EncoderRun run{Model::initialize(NetworkSpec::encoder(cfg.latent_dim, images.cols()), rng, cfg.seed), {}};
    auto& enc = run.encoder.net;
    const auto& gen = generator.net;
    const auto& clf = classifier.net;
    nn::AdamState<float> state(cfg.encoder_adam, enc.parameters());
    const std::size_t batches = cfg.epochs ? batch_count(images.rows(), cfg.batch_size) : 0;
    const std::size_t m = cfg.latent_dim;
    const std::size_t b = cfg.batch_size;
    nn::ForwardTrace<float> enc_trace, gen_trace, clf_trace;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto order = rng.permutation(images.rows());
        EncoderEpoch rec{epoch, 0.0, 0.0, 0.0, 0.0};
        for (std::size_t bi = 0; bi < batches; ++bi) {
            const auto idx = batch_indices(order, bi, b);
            std::vector<std::size_t> y(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) y[i] = labels[idx[i]];
            const TensorF x = images.gather_rows(idx);

            const auto heads = models::split_heads(enc.forward(x, enc_trace));
            const TensorF eps = rng.normal_tensor<float>(b, m);
            TensorF sigma(heads.mu.shape()), z(heads.mu.shape());
            for (std::size_t i = 0; i < z.size(); ++i) {
                sigma[i] = std::exp(heads.log_sigma[i]);
                z[i] = heads.mu[i] + sigma[i] * eps[i];
            }
            const TensorF x_hat = gen.forward(z, gen_trace);
            clf.forward(x_hat, clf_trace);

            const auto kl = nn::kl_gauss(heads.mu, heads.log_sigma);
            const auto recon = cfg.recon == ReconLoss::hinge ? nn::hinge_recon(x, x_hat) : nn::mse_recon(x, x_hat);
            const auto ce = nn::cross_entropy(clf.logits(clf_trace), nn::one_hot<float>(y, cfg.labels));
            const double total = cfg.kl_weight * kl.value + cfg.recon_weight * recon.scalar() + cfg.lambda * ce.scalar();
            check_finite(total, "encoder loss", epoch, bi);

            TensorF dx_hat = nn::backpropagate(clf, clf_trace, ce.grad, ce.seed, nullptr);
            dx_hat.vec() *= static_cast<float>(cfg.lambda);
            dx_hat.vec() += static_cast<float>(cfg.recon_weight) * recon.grad.vec();
            const TensorF dz = nn::backpropagate(gen, gen_trace, std::move(dx_hat), nn::SeedPoint::output, nullptr);

            TensorF seed = TensorF::matrix(b, 2 * m);
            const float klw = static_cast<float>(cfg.kl_weight);
            for (std::size_t r = 0; r < b; ++r) {
                for (std::size_t c = 0; c < m; ++c) {
                    const std::size_t i = r * m + c;
                    seed(r, c) = dz[i] + klw * kl.grad_mu[i];
                    seed(r, m + c) = dz[i] * sigma[i] * eps[i] + klw * kl.grad_log_sigma[i];
                }
            }
            auto grads = enc.zero_gradients();
            nn::backpropagate(enc, enc_trace, std::move(seed), nn::SeedPoint::output, &grads);
            step(enc.parameters(), grads, state, "encoder", epoch, bi);

            rec.loss += total;
            rec.kl += kl.value;
            rec.recon += recon.scalar();
            rec.classification += ce.scalar();
        }
        if (batches) {
            const double n = static_cast<double>(batches);
            rec.loss /= n;
            rec.kl /= n;
            rec.recon /= n;
            rec.classification /= n;
        }
        run.history.push_back(rec);
        if (progress) {
            std::ostringstream msg;
            msg << "encoder epoch " << epoch << "/" << cfg.epochs << " loss=" << rec.loss << " kl=" << rec.kl
                << " recon=" << rec.recon << " ce=" << rec.classification;
            progress(msg.str());
        }
    }
    run.encoder.epochs_completed = cfg.epochs;
    run.encoder.hyperparameters = {{"batch_size", std::to_string(cfg.batch_size)},
                                   {"adam_eta", std::to_string(cfg.encoder_adam.eta)},
                                   {"adam_beta1", std::to_string(cfg.encoder_adam.beta1)},
                                   {"adam_beta2", std::to_string(cfg.encoder_adam.beta2)},
                                   {"lambda", std::to_string(cfg.lambda)},
                                   {"kl_weight", std::to_string(cfg.kl_weight)},
                                   {"recon_weight", std::to_string(cfg.recon_weight)},
                                   {"recon_loss", cfg.recon == ReconLoss::hinge ? "hinge" : "mse"},
                                   {"latent_dim", std::to_string(cfg.latent_dim)}};
    return run;
}

double classifier_accuracy(const Model& classifier, const TensorF& images, std::span<const std::size_t> labels) {
    if (images.rows() != labels.size()) throw ShapeError("image/label count mismatch");
    constexpr std::size_t chunk = 500;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < images.rows(); begin += chunk) {
        const std::size_t end = std::min(images.rows(), begin + chunk);
        const auto c = models::classify(classifier, images.slice_rows(begin, end));
        for (std::size_t i = begin; i < end; ++i) correct += c.labels[i - begin] == labels[i];
    }
    return static_cast<double>(correct) / static_cast<double>(images.rows());
}

}  // namespace lsd::training
