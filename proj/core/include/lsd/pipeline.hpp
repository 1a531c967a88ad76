#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "lsd/basis.hpp"
#include "lsd/config.hpp"

namespace lsd::pipeline {

/// File names inside the output directory.
namespace artifact {
inline constexpr const char* generator = "generator.lsdc";
inline constexpr const char* discriminator = "discriminator.lsdc";
inline constexpr const char* classifier = "classifier.lsdc";
inline constexpr const char* encoder = "encoder.lsdc";
inline constexpr const char* basis = "basis.lsdb";
inline constexpr const char* means = "means.csv";
inline constexpr const char* accuracy = "accuracy.csv";
inline constexpr const char* cumulative = "cumulative.csv";
inline constexpr const char* rank_profiles = "rank_profiles.csv";
inline constexpr const char* rank_pdfs = "rank_pdfs.csv";
inline constexpr const char* lsd_summary = "lsd_summary.csv";
inline constexpr const char* classifier_eval = "classifier_eval.csv";
inline constexpr const char* convergence = "convergence.csv";
inline constexpr const char* rotation = "rotation.csv";
inline constexpr const char* rotation_summary = "rotation_summary.csv";
}  // namespace artifact

using Log = std::function<void(std::string_view)>;

void train_gan(const config::RunConfig& cfg, const Log& log);
void train_classifier(const config::RunConfig& cfg, const Log& log);
void train_encoder(const config::RunConfig& cfg, const Log& log);
void build_basis(const config::RunConfig& cfg, const Log& log);
void lsd_classify(const config::RunConfig& cfg, const Log& log);
void denoise(const config::RunConfig& cfg, const Log& log);
void rotate(const config::RunConfig& cfg, const Log& log);

struct CheckResult {
    std::string name;
    bool passed;
    std::string detail;
};

/// Invariant suite over the basis in cfg.out_dir (plus the generator, means
/// and cumulative table when present).
std::vector<CheckResult> verify(const config::RunConfig& cfg, const Log& log);

/// All seven producing stages in order.
void run_all(const config::RunConfig& cfg, const Log& log);

void write_means(const std::filesystem::path& path, std::span<const basis::MeanVector> means);
std::vector<basis::MeanVector> read_means(const std::filesystem::path& path);

}  // namespace lsd::pipeline
