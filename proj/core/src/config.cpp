#include "lsd/config.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>

#include "lsd/csv.hpp"
#include "lsd/error.hpp"

namespace lsd::config {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(value) + "' as " +
                      std::string(expected));
}

template <typename T>
T parse_number(std::string_view key, std::string_view value, std::string_view expected) {
    T out{};
    const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) bad_value(key, value, expected);
    return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    bad_value(key, value, "a boolean");
}

std::vector<std::size_t> parse_list(std::string_view key, std::string_view value) {
    std::vector<std::size_t> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        const auto comma = value.find(',', start);
        const auto item = trim(value.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        out.push_back(parse_number<std::size_t>(key, item, "a comma-separated list of integers"));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

struct Field {
    const char* name;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

Field size_field(const char* name, std::size_t RunConfig::*member) {
    return {name,
            [=](RunConfig& c, std::string_view v) { c.*member = parse_number<std::size_t>(name, v, "a non-negative integer"); },
            [=](const RunConfig& c) { return std::to_string(c.*member); }};
}

Field real_field(const char* name, double RunConfig::*member) {
    return {name, [=](RunConfig& c, std::string_view v) { c.*member = parse_number<double>(name, v, "a real number"); },
            [=](const RunConfig& c) { return io::format_number(c.*member); }};
}

Field path_field(const char* name, std::filesystem::path RunConfig::*member) {
    return {name, [=](RunConfig& c, std::string_view v) { c.*member = std::filesystem::path(std::string(v)); },
            [=](const RunConfig& c) { return (c.*member).string(); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        path_field("data_dir", &RunConfig::data_dir),
        path_field("out_dir", &RunConfig::out_dir),
        {"seed", [](RunConfig& c, std::string_view v) { c.seed = parse_number<std::uint64_t>("seed", v, "an unsigned integer"); },
         [](const RunConfig& c) { return std::to_string(c.seed); }},
        size_field("train_limit", &RunConfig::train_limit),
        size_field("test_limit", &RunConfig::test_limit),
        size_field("latent_dim", &RunConfig::latent_dim),
        size_field("batch_size", &RunConfig::batch_size),
        size_field("gan_epochs", &RunConfig::gan_epochs),
        size_field("classifier_epochs", &RunConfig::classifier_epochs),
        size_field("encoder_epochs", &RunConfig::encoder_epochs),
        real_field("lambda", &RunConfig::lambda),
        real_field("kl_weight", &RunConfig::kl_weight),
        real_field("recon_weight", &RunConfig::recon_weight),
        {"recon_loss",
         [](RunConfig& c, std::string_view v) {
             if (v != "hinge" && v != "mse") bad_value("recon_loss", v, "'hinge' or 'mse'");
             c.recon_loss = std::string(v);
         },
         [](const RunConfig& c) { return c.recon_loss; }},
        real_field("gan_eta", &RunConfig::gan_eta),
        real_field("gan_beta1", &RunConfig::gan_beta1),
        real_field("gan_beta2", &RunConfig::gan_beta2),
        real_field("classifier_eta", &RunConfig::classifier_eta),
        real_field("classifier_beta1", &RunConfig::classifier_beta1),
        real_field("classifier_beta2", &RunConfig::classifier_beta2),
        real_field("encoder_eta", &RunConfig::encoder_eta),
        real_field("encoder_beta1", &RunConfig::encoder_beta1),
        real_field("encoder_beta2", &RunConfig::encoder_beta2),
        real_field("adam_epsilon", &RunConfig::adam_epsilon),
        size_field("sets_per_label", &RunConfig::sets_per_label),
        size_field("set_size", &RunConfig::set_size),
        real_field("min_accept_probability", &RunConfig::min_accept_probability),
        size_field("sample_window", &RunConfig::sample_window),
        size_field("trials", &RunConfig::trials),
        {"keep", [](RunConfig& c, std::string_view v) { c.keep = parse_list("keep", v); },
         [](const RunConfig& c) {
             std::string s;
             for (std::size_t i = 0; i < c.keep.size(); ++i) s += (i ? "," : "") + std::to_string(c.keep[i]);
             return s;
         }},
        {"renorm", [](RunConfig& c, std::string_view v) { c.renorm = parse_bool("renorm", v); },
         [](const RunConfig& c) { return std::string(c.renorm ? "true" : "false"); }},
        size_field("denoise_count", &RunConfig::denoise_count),
        real_field("dtheta", &RunConfig::dtheta),
        size_field("steps", &RunConfig::steps),
        size_field("rotate_count", &RunConfig::rotate_count),
    };
    return table;
}

}  // namespace

std::size_t RunConfig::resolved_sets() const {
    return sets_per_label != 0 ? sets_per_label : latent_dim / models::kLabelCount;
}

void RunConfig::validate() const {
    const std::size_t l = models::kLabelCount;
    if (latent_dim == 0 || latent_dim % l != 0) {
        throw ConfigError("latent_dim must be a positive multiple of " + std::to_string(l) + ", got " +
                          std::to_string(latent_dim));
    }
    if (resolved_sets() * l != latent_dim) {
        throw ConfigError("sets_per_label * labels must equal latent_dim: " + std::to_string(resolved_sets()) + " * " +
                          std::to_string(l) + " != " + std::to_string(latent_dim));
    }
    if (set_size == 0) throw ConfigError("set_size must be at least 1");
    if (trials == 0) throw ConfigError("trials must be at least 1");
    if (keep.empty()) throw ConfigError("keep list is empty");
    for (auto k : keep) {
        if (k == 0 || k > latent_dim) {
            throw ConfigError("keep entry " + std::to_string(k) + " outside [1, " + std::to_string(latent_dim) + "]");
        }
    }
    if (steps == 0) throw ConfigError("steps must be at least 1");
    if (!(dtheta > 0.0)) throw ConfigError("dtheta must be positive");
    if (min_accept_probability < 0.0 || min_accept_probability >= 1.0) {
        throw ConfigError("min_accept_probability must lie in [0, 1)");
    }
    train_config(1).validate();
}

training::TrainConfig RunConfig::train_config(std::size_t epochs) const {
    training::TrainConfig t;
    t.batch_size = batch_size;
    t.epochs = epochs;
    t.latent_dim = latent_dim;
    t.lambda = lambda;
    t.kl_weight = kl_weight;
    t.recon_weight = recon_weight;
    t.recon = recon_loss == "mse" ? training::ReconLoss::mse : training::ReconLoss::hinge;
    t.gan_adam = {gan_eta, gan_beta1, gan_beta2, adam_epsilon};
    t.classifier_adam = {classifier_eta, classifier_beta1, classifier_beta2, adam_epsilon};
    t.encoder_adam = {encoder_eta, encoder_beta1, encoder_beta2, adam_epsilon};
    t.seed = seed;
    return t;
}

std::string RunConfig::resolved() const {
    std::string out;
    for (const auto& f : fields()) out += std::string(f.name) + " = " + f.get(*this) + "\n";
    return out;
}

void set_value(RunConfig& cfg, std::string_view key, std::string_view value) {
    for (const auto& f : fields()) {
        if (key == f.name) {
            f.set(cfg, trim(value));
            return;
        }
    }
    throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void apply_text(RunConfig& cfg, std::string_view text, std::string_view origin) {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        ++line_no;
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        try {
            set_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void apply_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    apply_text(cfg, ss.str(), path.string());
}

std::vector<std::string> known_keys() {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.emplace_back(f.name);
    return out;
}

DirectoryLock::DirectoryLock(const std::filesystem::path& dir) : path_(dir / ".lsd.lock") {
    std::filesystem::create_directories(dir);
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error("cannot open lock file '" + path_.string() + "': " + std::strerror(errno));
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw ConfigError("output directory '" + dir.string() + "' is locked by another lsd process");
    }
}

DirectoryLock::~DirectoryLock() {
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
}

}  // namespace lsd::config
