#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lsd/training.hpp"

namespace lsd::config {

/// Every knob of a pipeline run. Keys in config files use the field names.
struct RunConfig {
    std::filesystem::path data_dir = "data/mnist";
    std::filesystem::path out_dir = "runs/default";
    std::uint64_t seed = 42;
    std::size_t train_limit = 0;  // 0 = whole split
    std::size_t test_limit = 0;

    std::size_t latent_dim = 100;
    std::size_t batch_size = 25;
    std::size_t gan_epochs = 50;
    std::size_t classifier_epochs = 30;
    std::size_t encoder_epochs = 30;
    double lambda = 100.0;
    double kl_weight = 1.0;
    double recon_weight = 1.0;
    std::string recon_loss = "hinge";
    double gan_eta = 2e-4;
    double gan_beta1 = 0.9;
    double gan_beta2 = 0.999;
    double classifier_eta = 3e-5;
    double classifier_beta1 = 0.5;
    double classifier_beta2 = 0.99;
    double encoder_eta = 2e-4;
    double encoder_beta1 = 0.9;
    double encoder_beta2 = 0.999;
    double adam_epsilon = 1e-8;

    std::size_t sets_per_label = 0;  // 0 = latent_dim / 10
    std::size_t set_size = 1000;
    double min_accept_probability = 0.0;
    std::size_t sample_window = 100000;

    std::size_t trials = 20;
    std::vector<std::size_t> keep{1, 2, 3, 4, 10};
    bool renorm = false;
    std::size_t denoise_count = 10;

    double dtheta = 0.52359877559829887;  // pi / 6
    std::size_t steps = 3;
    std::size_t rotate_count = 10;

    /// n with the 0 default resolved.
    std::size_t resolved_sets() const;
    /// Throws ConfigError on inconsistent values (n * l != M, empty keep list, ...).
    void validate() const;
    training::TrainConfig train_config(std::size_t epochs) const;

    /// One "key = value" line per field, in declaration order.
    std::string resolved() const;
};

/// Sets one key from its textual value; unknown keys and malformed values throw ConfigError.
void set_value(RunConfig& cfg, std::string_view key, std::string_view value);

/// Applies a key = value file ('#' comments, blank lines allowed) on top of cfg.
void apply_file(RunConfig& cfg, const std::filesystem::path& path);
void apply_text(RunConfig& cfg, std::string_view text, std::string_view origin);

std::vector<std::string> known_keys();

/// Exclusive lock on an output directory, released on destruction.
class DirectoryLock {
public:
    explicit DirectoryLock(const std::filesystem::path& dir);
    ~DirectoryLock();
    DirectoryLock(const DirectoryLock&) = delete;
    DirectoryLock& operator=(const DirectoryLock&) = delete;

private:
    std::filesystem::path path_;
    int fd_ = -1;
};

}  // namespace lsd::config
