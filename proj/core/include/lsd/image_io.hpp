#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lsd/tensor.hpp"

namespace lsd::io {

/// clamp(round((x + 1) * 127.5), 0, 255)
std::uint8_t pixel_byte(float x);

struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;
};

/// Tiles square images (one per row of `images`, row-major cells) into a
/// rows x cols grid separated by 1-pixel white gutters. Empty cells stay black.
GrayImage image_grid(const TensorF& images, std::size_t rows, std::size_t cols);

/// Linear grayscale rendering of a matrix (min -> 0, max -> 255), each entry
/// drawn as a cell x cell block.
GrayImage heatmap(const Eigen::MatrixXd& m, std::size_t cell = 4);

/// Binary PGM (P5, maxval 255).
std::vector<std::uint8_t> encode_pgm(const GrayImage& image);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

void write_image_grid(const TensorF& images, std::size_t rows, std::size_t cols, const std::filesystem::path& path);

}  // namespace lsd::io
