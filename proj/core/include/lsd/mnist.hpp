#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "lsd/tensor.hpp"

namespace lsd::data {

enum class Split { train, test };

/// Images normalized to [-1, 1] (byte / 127.5 - 1), one row per image.
struct MnistDataset {
    TensorF images;
    std::vector<std::size_t> labels;
    Split split = Split::train;

    std::size_t size() const { return labels.size(); }
    /// First n examples (all when n == 0 or n >= size()).
    MnistDataset head(std::size_t n) const;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

inline float normalize_pixel(std::uint8_t b) { return static_cast<float>(b) / 127.5f - 1.0f; }

struct IdxImages {
    std::uint32_t count = 0;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<std::uint8_t> pixels;
};

IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);
void write_idx_images(const std::filesystem::path& path, const IdxImages& images);
void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);

/// Loads one split from the four standard IDX files in `dir`
/// (train-images-idx3-ubyte, train-labels-idx1-ubyte, t10k-...).
MnistDataset load_mnist_split(const std::filesystem::path& dir, Split split);
/// (train, test)
std::pair<MnistDataset, MnistDataset> load_mnist(const std::filesystem::path& dir);

}  // namespace lsd::data
