#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lsd/config.hpp"
#include "lsd/error.hpp"
#include "lsd/pipeline.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> data;
    std::optional<std::size_t> epochs;
    std::optional<double> lambda;
    std::optional<std::size_t> latent_dim;
    std::optional<std::size_t> sets_per_label;
    std::optional<std::size_t> set_size;
    std::optional<std::string> keep;
    std::optional<double> dtheta;
    std::optional<std::size_t> steps;
    std::optional<std::size_t> trials;
    bool renorm = false;
    std::vector<std::string> sets;
};

lsd::config::RunConfig resolve(const Overrides& o, const std::string& command) {
    using lsd::config::set_value;
    lsd::config::RunConfig cfg;
    if (!o.config.empty()) lsd::config::apply_file(cfg, o.config);
    for (const auto& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw lsd::ConfigError("--set expects key=value, got '" + kv + "'");
        set_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.seed) cfg.seed = *o.seed;
    if (o.out) cfg.out_dir = *o.out;
    if (o.data) cfg.data_dir = *o.data;
    if (o.epochs) {
        if (command == "train-gan" || command == "pipeline") cfg.gan_epochs = *o.epochs;
        if (command == "train-classifier" || command == "pipeline") cfg.classifier_epochs = *o.epochs;
        if (command == "train-encoder" || command == "pipeline") cfg.encoder_epochs = *o.epochs;
    }
    if (o.lambda) cfg.lambda = *o.lambda;
    if (o.latent_dim) cfg.latent_dim = *o.latent_dim;
    if (o.sets_per_label) cfg.sets_per_label = *o.sets_per_label;
    if (o.set_size) cfg.set_size = *o.set_size;
    if (o.keep) set_value(cfg, "keep", *o.keep);
    if (o.dtheta) cfg.dtheta = *o.dtheta;
    if (o.steps) cfg.steps = *o.steps;
    if (o.trials) cfg.trials = *o.trials;
    if (o.renorm) cfg.renorm = true;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latent space decomposition of a trained generative model"};
    app.require_subcommand(1);
    app.fallthrough();

    Overrides o;
    app.add_option("--config", o.config, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "root random seed");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--data", o.data, "directory holding the four IDX files");
    app.add_option("--epochs", o.epochs, "epochs for the training stage(s) being run");
    app.add_option("--lambda", o.lambda, "classification weight in the encoder loss");
    app.add_option("--latent-dim", o.latent_dim, "latent dimension M");
    app.add_option("--sets-per-label", o.sets_per_label, "latent sets per label n");
    app.add_option("--set-size", o.set_size, "vectors per latent set V");
    app.add_option("--keep", o.keep, "comma-separated component counts for denoise");
    app.add_option("--dtheta", o.dtheta, "rotation step in radians");
    app.add_option("--steps", o.steps, "rotation steps per label transition");
    app.add_option("--trials", o.trials, "encoder-noise trials for lsd-classify");
    app.add_flag("--renorm", o.renorm, "renormalize truncated latents before decoding");
    app.add_option("--set", o.sets, "override any config key (key=value), repeatable");

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"train-gan", "train generator and discriminator"},
        {"train-classifier", "train the image classifier"},
        {"train-encoder", "train the encoder against the frozen generator and classifier"},
        {"build-basis", "collect latent sets and build the quasi-eigenbasis"},
        {"lsd-classify", "spectral classification, cumulative top-n and rank profiles"},
        {"denoise", "decode truncated spectral expansions"},
        {"rotate", "label-changing rotation trajectories"},
        {"verify", "check basis and operator invariants"},
        {"pipeline", "run every producing stage in order"},
        {"print-config", "print the resolved configuration"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();
    const lsd::pipeline::Log log = [&](std::string_view msg) { std::cerr << "[" << command << "] " << msg << "\n"; };

    try {
        const auto cfg = resolve(o, command);
        if (command == "print-config") {
            cfg.validate();
            std::cout << cfg.resolved();
        } else if (command == "train-gan") {
            lsd::pipeline::train_gan(cfg, log);
        } else if (command == "train-classifier") {
            lsd::pipeline::train_classifier(cfg, log);
        } else if (command == "train-encoder") {
            lsd::pipeline::train_encoder(cfg, log);
        } else if (command == "build-basis") {
            lsd::pipeline::build_basis(cfg, log);
        } else if (command == "lsd-classify") {
            lsd::pipeline::lsd_classify(cfg, log);
        } else if (command == "denoise") {
            lsd::pipeline::denoise(cfg, log);
        } else if (command == "rotate") {
            lsd::pipeline::rotate(cfg, log);
        } else if (command == "pipeline") {
            lsd::pipeline::run_all(cfg, log);
        } else if (command == "verify") {
            bool all = true;
            for (const auto& r : lsd::pipeline::verify(cfg, log)) {
                std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
                all = all && r.passed;
            }
            return all ? 0 : 1;
        }
    } catch (const lsd::Error& e) {
        std::cerr << "lsd " << command << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "lsd " << command << ": unexpected failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
