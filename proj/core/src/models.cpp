#include "lsd/models.hpp"

#include <cmath>
#include <sstream>

#include "lsd/binary_io.hpp"
#include "lsd/error.hpp"

namespace lsd::models {

using nn::Activation;

std::string_view to_string(Role r) {
    switch (r) {
        case Role::generator:
            return "generator";
        case Role::discriminator:
            return "discriminator";
        case Role::encoder:
            return "encoder";
        case Role::classifier:
            return "classifier";
    }
    return "generator";
}

Role parse_role(std::string_view name) {
    for (Role r : {Role::generator, Role::discriminator, Role::encoder, Role::classifier}) {
        if (to_string(r) == name) return r;
    }
    throw FormatError("unknown network role '" + std::string(name) + "'");
}

void NetworkSpec::validate() const {
    if (input_dim == 0 || layers.empty()) throw ConfigError("network spec needs an input width and at least one layer");
    for (const auto& l : layers) {
        if (l.width == 0) throw ConfigError("layer widths must be positive");
    }
    const Activation head = layers.back().activation;
    auto fail = [&](const std::string& what) {
        throw ConfigError(std::string(to_string(role)) + " spec: " + what);
    };
    switch (role) {
        case Role::generator:
            if (head != Activation::tanh) fail("final activation must be tanh");
            break;
        case Role::discriminator:
            if (head != Activation::sigmoid || output_dim() != 1) fail("head must be a single sigmoid unit");
            break;
        case Role::encoder:
            if (head != Activation::linear || output_dim() % 2 != 0) fail("head must be linear with 2M outputs");
            break;
        case Role::classifier:
            if (head != Activation::softmax) fail("final activation must be softmax");
            break;
    }
}

NetworkSpec NetworkSpec::generator(std::size_t latent_dim, std::size_t image_dim) {
    return {Role::generator, latent_dim, {{256, Activation::relu}, {512, Activation::relu}, {image_dim, Activation::tanh}}};
}

NetworkSpec NetworkSpec::discriminator(std::size_t image_dim) {
    return {Role::discriminator, image_dim, {{512, Activation::relu}, {256, Activation::relu}, {1, Activation::sigmoid}}};
}

NetworkSpec NetworkSpec::encoder(std::size_t latent_dim, std::size_t image_dim) {
    return {Role::encoder, image_dim, {{512, Activation::relu}, {2 * latent_dim, Activation::linear}}};
}

NetworkSpec NetworkSpec::classifier(std::size_t labels, std::size_t image_dim) {
    return {Role::classifier,
            image_dim,
            {{256, Activation::relu}, {128, Activation::relu}, {labels, Activation::softmax}}};
}

bool operator==(const NetworkSpec& a, const NetworkSpec& b) {
    if (a.role != b.role || a.input_dim != b.input_dim || a.layers.size() != b.layers.size()) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        if (a.layers[i].width != b.layers[i].width || a.layers[i].activation != b.layers[i].activation) return false;
    }
    return true;
}

Model Model::initialize(const NetworkSpec& spec, SeededRng& rng, std::uint64_t seed) {
    spec.validate();
    Model m;
    m.spec = spec;
    // The adversarial pair starts small; He scales let the discriminator saturate within one epoch.
    const bool adversarial = spec.role == Role::generator || spec.role == Role::discriminator;
    m.net = nn::make_network<float>(spec.input_dim, spec.layers, rng,
                                    adversarial ? nn::InitScheme::fan_in_uniform : nn::InitScheme::he_glorot);
    m.seed = seed;
    return m;
}

namespace {

void require_role(const Model& m, Role r) {
    if (m.spec.role != r) {
        throw ConfigError("expected a " + std::string(to_string(r)) + " model, got " + std::string(to_string(m.spec.role)));
    }
}

void require_input(const Model& m, const TensorF& x, const char* what) {
    if (x.rank() != 2 || x.cols() != m.spec.input_dim) {
        throw ShapeError(std::string(what) + ": input " + shape_string(x.shape()) + " does not match checkpoint input width " +
                         std::to_string(m.spec.input_dim));
    }
}

}  // namespace

TensorF generate(const Model& generator, const TensorF& z) {
    require_role(generator, Role::generator);
    require_input(generator, z, "generate");
    return generator.net.forward(z);
}

EncoderHeads split_heads(const TensorF& out) {
    const std::size_t m = out.cols() / 2;
    EncoderHeads h{TensorF::matrix(out.rows(), m), TensorF::matrix(out.rows(), m)};
    h.mu.mat() = out.mat().leftCols(static_cast<Eigen::Index>(m));
    h.log_sigma.mat() = out.mat().rightCols(static_cast<Eigen::Index>(m));
    return h;
}

EncoderHeads encoder_heads(const Model& encoder, const TensorF& x) {
    require_role(encoder, Role::encoder);
    require_input(encoder, x, "encode");
    return split_heads(encoder.net.forward(x));
}

Encoding encode_with_noise(const Model& encoder, const TensorF& x, const TensorF& eps) {
    EncoderHeads h = encoder_heads(encoder, x);
    if (eps.shape() != h.mu.shape()) {
        throw ShapeError("encode: noise " + shape_string(eps.shape()) + " does not match latent batch " +
                         shape_string(h.mu.shape()));
    }
    Encoding e{TensorF(h.mu.shape()), std::move(h.mu), TensorF(h.log_sigma.shape())};
    for (std::size_t i = 0; i < e.z.size(); ++i) {
        e.sigma[i] = std::exp(h.log_sigma[i]);
        e.z[i] = e.mu[i] + e.sigma[i] * eps[i];
    }
    return e;
}

Encoding encode(const Model& encoder, const TensorF& x, SeededRng& rng, EncodeOptions options) {
    const std::size_t m = encoder.spec.output_dim() / 2;
    TensorF eps = rng.normal_tensor<float>(x.rank() == 2 ? x.rows() : 1, m);
    Encoding e = encode_with_noise(encoder, x, eps);
    if (options.zero_sigma) {
        e.sigma.fill(0.0f);
        e.z = e.mu;
    }
    return e;
}

Classification classify(const Model& classifier, const TensorF& x) {
    require_role(classifier, Role::classifier);
    require_input(classifier, x, "classify");
    Classification c{classifier.net.forward(x), {}};
    c.labels = nn::argmax_rows(c.probabilities);
    return c;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[4] = {'L', 'S', 'D', 'C'};

std::string layers_string(const NetworkSpec& spec) {
    std::string s;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(spec.layers[i].width) + ":" + std::string(nn::to_string(spec.layers[i].activation));
    }
    return s;
}

std::string shapes_string(const nn::Network<float>& net) {
    std::string s;
    bool first = true;
    for (const auto* p : net.parameters()) {
        if (!first) s += ',';
        first = false;
        if (p->rank() == 2) s += std::to_string(p->rows()) + "x" + std::to_string(p->cols());
        else s += std::to_string(p->size());
    }
    return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& s, const std::string& key) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw FormatError("checkpoint header: bad integer for '" + key + "': '" + s + "'");
    }
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Model& model) {
    std::ostringstream header;
    header << "role = " << to_string(model.spec.role) << '\n';
    header << "input_dim = " << model.spec.input_dim << '\n';
    header << "layers = " << layers_string(model.spec) << '\n';
    header << "shapes = " << shapes_string(model.net) << '\n';
    header << "parameter_count = " << model.net.parameter_count() << '\n';
    header << "epochs_completed = " << model.epochs_completed << '\n';
    header << "seed = " << model.seed << '\n';
    for (const auto& [k, v] : model.hyperparameters) header << "hp." << k << " = " << v << '\n';
    const std::string text = header.str();

    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    io::put_u32(out, kCheckpointVersion);
    io::put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    out.reserve(out.size() + 4 * model.net.parameter_count());
    for (const auto* p : model.net.parameters()) {
        for (float v : p->storage()) io::put_raw(out, v);
    }
    return out;
}

Model deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
    io::ByteReader in(bytes, "checkpoint");
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError("not a checkpoint: missing LSDC magic");
    }
    in.skip(4);
    const std::uint32_t version = in.u32();
    if (version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
    }
    const std::uint32_t header_len = in.u32();
    if (in.remaining() < header_len) throw FormatError("checkpoint: truncated header");
    const std::string text = in.text(header_len);

    std::map<std::string, std::string> kv;
    for (const auto& line : split(text, '\n')) {
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("checkpoint header: malformed line '" + line + "'");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    auto get = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw FormatError("checkpoint header: missing key '" + key + "'");
        return it->second;
    };

    Model m;
    m.spec.role = parse_role(get("role"));
    m.spec.input_dim = parse_u64(get("input_dim"), "input_dim");
    for (const auto& item : split(get("layers"), ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw FormatError("checkpoint header: bad layer entry '" + item + "'");
        m.spec.layers.push_back({parse_u64(item.substr(0, colon), "layers"), nn::parse_activation(item.substr(colon + 1))});
    }
    try {
        m.spec.validate();
    } catch (const ConfigError& e) {
        throw FormatError(std::string("checkpoint header: ") + e.what());
    }
    m.epochs_completed = parse_u64(get("epochs_completed"), "epochs_completed");
    m.seed = parse_u64(get("seed"), "seed");
    for (const auto& [k, v] : kv) {
        if (k.rfind("hp.", 0) == 0) m.hyperparameters[k.substr(3)] = v;
    }

    // Shape list must agree with the declared layers.
    std::vector<std::size_t> declared;
    std::size_t in_dim = m.spec.input_dim;
    std::string expected_shapes;
    for (const auto& l : m.spec.layers) {
        if (!expected_shapes.empty()) expected_shapes += ',';
        expected_shapes += std::to_string(l.width) + "x" + std::to_string(in_dim) + "," + std::to_string(l.width);
        declared.push_back(l.width * in_dim);
        declared.push_back(l.width);
        in_dim = l.width;
    }
    if (get("shapes") != expected_shapes) {
        throw FormatError("checkpoint header: shape list '" + get("shapes") + "' does not match layers (expected '" +
                          expected_shapes + "')");
    }
    std::size_t total = 0;
    for (auto n : declared) total += n;
    const std::uint64_t count = parse_u64(get("parameter_count"), "parameter_count");
    if (count != total) {
        throw FormatError("checkpoint header: parameter_count " + std::to_string(count) + " does not match shape list (" +
                          std::to_string(total) + ")");
    }
    if (in.remaining() != 4 * count) {
        throw FormatError("payload length mismatch: header declares " + std::to_string(count) + " weights, payload has " +
                          std::to_string(in.remaining() / 4) + (in.remaining() % 4 ? " (+ partial value)" : ""));
    }

    SeededRng dummy(0);
    m.net = nn::make_network<float>(m.spec.input_dim, m.spec.layers, dummy);
    for (auto* p : m.net.parameters()) {
        for (auto& v : p->storage()) v = in.raw<float>();
    }
    return m;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
    io::write_file(path, serialize_checkpoint(model));
}

Model load_checkpoint(const std::filesystem::path& path) {
    return deserialize_checkpoint(io::read_file(path));
}

std::uint64_t parameter_hash(const nn::Network<float>& net) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const auto* p : net.parameters()) h = io::fnv1a(p->data(), p->size() * sizeof(float), h);
    return h;
}

}  // namespace lsd::models
