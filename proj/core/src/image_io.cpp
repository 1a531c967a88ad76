#include "lsd/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lsd/binary_io.hpp"
#include "lsd/error.hpp"

namespace lsd::io {

std::uint8_t pixel_byte(float x) {
    const double v = std::round((static_cast<double>(x) + 1.0) * 127.5);
    return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

GrayImage image_grid(const TensorF& images, std::size_t rows, std::size_t cols) {
    if (images.rank() != 2) throw ShapeError("image grid expects (N, d) images");
    const std::size_t count = images.rows();
    if (rows * cols < count || rows == 0 || cols == 0) {
        throw ShapeError("grid of " + std::to_string(rows) + "x" + std::to_string(cols) + " cannot hold " +
                         std::to_string(count) + " images");
    }
    const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(images.cols()))));
    if (side * side != images.cols()) throw ShapeError("images must be square, got width " + std::to_string(images.cols()));

    GrayImage g;
    g.width = cols * side + (cols - 1);
    g.height = rows * side + (rows - 1);
    g.pixels.assign(g.width * g.height, 255);
    for (std::size_t cell = 0; cell < rows * cols; ++cell) {
        const std::size_t x0 = (cell % cols) * (side + 1);
        const std::size_t y0 = (cell / cols) * (side + 1);
        for (std::size_t y = 0; y < side; ++y) {
            for (std::size_t x = 0; x < side; ++x) {
                g.pixels[(y0 + y) * g.width + x0 + x] = cell < count ? pixel_byte(images(cell, y * side + x)) : 0;
            }
        }
    }
    return g;
}

GrayImage heatmap(const Eigen::MatrixXd& m, std::size_t cell) {
    GrayImage g;
    g.width = static_cast<std::size_t>(m.cols()) * cell;
    g.height = static_cast<std::size_t>(m.rows()) * cell;
    g.pixels.assign(g.width * g.height, 0);
    if (m.size() == 0) return g;
    const double lo = m.minCoeff();
    const double hi = m.maxCoeff();
    const double span = hi > lo ? hi - lo : 1.0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const auto v = static_cast<std::uint8_t>(std::lround(255.0 * (m(r, c) - lo) / span));
            for (std::size_t y = 0; y < cell; ++y) {
                for (std::size_t x = 0; x < cell; ++x) {
                    g.pixels[(static_cast<std::size_t>(r) * cell + y) * g.width + static_cast<std::size_t>(c) * cell + x] = v;
                }
            }
        }
    }
    return g;
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& image) {
    const std::string header = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), image.pixels.begin(), image.pixels.end());
    return out;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) { write_file(path, encode_pgm(image)); }

void write_image_grid(const TensorF& images, std::size_t rows, std::size_t cols, const std::filesystem::path& path) {
    write_pgm(path, image_grid(images, rows, cols));
}

}  // namespace lsd::io
