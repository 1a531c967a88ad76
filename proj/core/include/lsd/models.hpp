#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lsd/nn.hpp"
#include "lsd/rng.hpp"

namespace lsd::models {

inline constexpr std::size_t kImageSide = 28;
inline constexpr std::size_t kImageDim = kImageSide * kImageSide;
inline constexpr std::size_t kLabelCount = 10;

enum class Role { generator, discriminator, encoder, classifier };

std::string_view to_string(Role r);
Role parse_role(std::string_view name);

/// Architecture of one of the four networks.
struct NetworkSpec {
    Role role = Role::generator;
    std::size_t input_dim = 0;
    std::vector<nn::LayerShape> layers;

    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().width; }

    /// Throws ConfigError when the role's head contract is violated.
    void validate() const;

    /// M -> 256 -> 512 -> d (relu, relu, tanh).
    static NetworkSpec generator(std::size_t latent_dim, std::size_t image_dim = kImageDim);
    /// d -> 512 -> 256 -> 1 (relu, relu, sigmoid).
    static NetworkSpec discriminator(std::size_t image_dim = kImageDim);
    /// d -> 512 -> 2M (relu, linear); columns [0, M) are mu, [M, 2M) log sigma.
    static NetworkSpec encoder(std::size_t latent_dim, std::size_t image_dim = kImageDim);
    /// d -> 256 -> 128 -> l (relu, relu, softmax).
    static NetworkSpec classifier(std::size_t labels = kLabelCount, std::size_t image_dim = kImageDim);

    friend bool operator==(const NetworkSpec& a, const NetworkSpec& b);
};

/// A network together with the metadata stored in its checkpoint.
struct Model {
    NetworkSpec spec;
    nn::Network<float> net;
    std::map<std::string, std::string> hyperparameters;
    std::uint64_t epochs_completed = 0;
    std::uint64_t seed = 0;

    static Model initialize(const NetworkSpec& spec, SeededRng& rng, std::uint64_t seed = 0);
};

/// Images G(z) for a (batch, M) latent batch; entries lie in [-1, 1].
TensorF generate(const Model& generator, const TensorF& z);

struct Encoding {
    TensorF z;
    TensorF mu;
    TensorF sigma;
};

/// mu and log sigma heads of the encoder, split from one forward pass.
struct EncoderHeads {
    TensorF mu;
    TensorF log_sigma;
};

EncoderHeads encoder_heads(const Model& encoder, const TensorF& x);
EncoderHeads split_heads(const TensorF& encoder_output);

/// z = mu + sigma * eps with eps supplied by the caller (one row per image).
Encoding encode_with_noise(const Model& encoder, const TensorF& x, const TensorF& eps);

struct EncodeOptions {
    /// Test hook: force sigma to zero so z == mu.
    bool zero_sigma = false;
};

/// Reparameterized encoding with eps ~ N(0, I) drawn row by row from rng.
Encoding encode(const Model& encoder, const TensorF& x, SeededRng& rng, EncodeOptions options = {});

struct Classification {
    TensorF probabilities;
    std::vector<std::size_t> labels;
};

/// Softmax probabilities and argmax labels (ties to the lowest index).
Classification classify(const Model& classifier, const TensorF& x);

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// LSDC checkpoint:
///   "LSDC" | u32 version | u32 header_bytes | header text | f32 payload
/// All integers and floats little-endian. The header is "key = value" lines:
/// role, input_dim, layers (width:activation,...), shapes (RxC or N per
/// parameter), parameter_count, epochs_completed, seed and hp.<name> entries.
/// The payload holds every parameter row-major in layer order (W0, b0, W1, ...).
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

std::vector<std::uint8_t> serialize_checkpoint(const Model& model);
Model deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

/// FNV-1a over the serialized parameters; used for frozen-network checks.
std::uint64_t parameter_hash(const nn::Network<float>& net);

}  // namespace lsd::models
