#include "lsd/mnist.hpp"

#include "lsd/binary_io.hpp"
#include "lsd/error.hpp"

namespace lsd::data {

namespace {

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t at, const std::filesystem::path& path) {
    if (b.size() < at + 4) throw FormatError("'" + path.string() + "': truncated IDX header");
    return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
           std::uint32_t{b[at + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

std::string hex(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08X", v);
    return buf;
}

}  // namespace

MnistDataset MnistDataset::head(std::size_t n) const {
    if (n == 0 || n >= size()) return *this;
    return {images.slice_rows(0, n), std::vector<std::size_t>(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n)),
            split};
}

IdxImages read_idx_images(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    const std::uint32_t magic = read_be32(bytes, 0, path);
    if (magic != kIdxImagesMagic) {
        throw FormatError("'" + path.string() + "': wrong magic " + hex(magic) + " for an IDX image file (expected " +
                          hex(kIdxImagesMagic) + ")");
    }
    IdxImages img{read_be32(bytes, 4, path), read_be32(bytes, 8, path), read_be32(bytes, 12, path), {}};
    const std::size_t expected = std::size_t{img.count} * img.rows * img.cols;
    if (bytes.size() - 16 < expected) {
        throw FormatError("'" + path.string() + "': truncated file, header declares " + std::to_string(img.count) +
                          " images but only " + std::to_string(bytes.size() - 16) + " pixel bytes are present");
    }
    img.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(expected));
    return img;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    const std::uint32_t magic = read_be32(bytes, 0, path);
    if (magic != kIdxLabelsMagic) {
        throw FormatError("'" + path.string() + "': wrong magic " + hex(magic) + " for an IDX label file (expected " +
                          hex(kIdxLabelsMagic) + ")");
    }
    const std::uint32_t count = read_be32(bytes, 4, path);
    if (bytes.size() - 8 < count) {
        throw FormatError("'" + path.string() + "': truncated file, header declares " + std::to_string(count) +
                          " labels but only " + std::to_string(bytes.size() - 8) + " are present");
    }
    return {bytes.begin() + 8, bytes.begin() + 8 + count};
}

void write_idx_images(const std::filesystem::path& path, const IdxImages& images) {
    std::vector<std::uint8_t> out;
    put_be32(out, kIdxImagesMagic);
    put_be32(out, images.count);
    put_be32(out, images.rows);
    put_be32(out, images.cols);
    out.insert(out.end(), images.pixels.begin(), images.pixels.end());
    io::write_file(path, out);
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
    std::vector<std::uint8_t> out;
    put_be32(out, kIdxLabelsMagic);
    put_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.insert(out.end(), labels.begin(), labels.end());
    io::write_file(path, out);
}

MnistDataset load_mnist_split(const std::filesystem::path& dir, Split split) {
    const std::string prefix = split == Split::train ? "train" : "t10k";
    const auto images = read_idx_images(dir / (prefix + "-images-idx3-ubyte"));
    const auto labels = read_idx_labels(dir / (prefix + "-labels-idx1-ubyte"));
    if (images.count != labels.size()) {
        throw FormatError(prefix + " split: count mismatch, " + std::to_string(images.count) + " images vs " +
                          std::to_string(labels.size()) + " labels");
    }
    if (images.count == 0 || images.rows == 0 || images.cols == 0) throw FormatError(prefix + " split is empty");
    MnistDataset ds;
    ds.split = split;
    const std::size_t d = std::size_t{images.rows} * images.cols;
    ds.images = TensorF::matrix(images.count, d);
    for (std::size_t i = 0; i < images.pixels.size(); ++i) ds.images[i] = normalize_pixel(images.pixels[i]);
    ds.labels.assign(labels.begin(), labels.end());
    for (auto l : ds.labels) {
        if (l >= 10) throw FormatError(prefix + " split: label " + std::to_string(l) + " outside [0, 10)");
    }
    return ds;
}

std::pair<MnistDataset, MnistDataset> load_mnist(const std::filesystem::path& dir) {
    return {load_mnist_split(dir, Split::train), load_mnist_split(dir, Split::test)};
}

}  // namespace lsd::data
