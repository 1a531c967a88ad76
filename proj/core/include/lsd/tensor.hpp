#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lsd/error.hpp"

namespace lsd {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
    std::string out = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(shape[i]);
    }
    return out + ")";
}

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense row-major n-dimensional array. Rank-2 tensors are (rows, cols) and
/// can be viewed as Eigen matrices without copying.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T{0}) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
        check_shape();
    }

    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        check_shape();
        if (shape_size(shape_) != data_.size()) {
            throw ShapeError("tensor shape " + shape_string(shape_) + " needs " + std::to_string(shape_size(shape_)) +
                             " values, got " + std::to_string(data_.size()));
        }
    }

    static Tensor matrix(std::size_t rows, std::size_t cols, T fill = T{0}) { return Tensor({rows, cols}, fill); }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::size_t rows() const {
        require_rank(2);
        return shape_[0];
    }
    std::size_t cols() const {
        require_rank(2);
        return shape_[1];
    }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }
    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    std::vector<T>& storage() noexcept { return data_; }
    const std::vector<T>& storage() const noexcept { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }
    T& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    std::span<T> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

    Eigen::Map<RowMatrix<T>> mat() {
        require_rank(2);
        return {data_.data(), static_cast<Eigen::Index>(shape_[0]), static_cast<Eigen::Index>(shape_[1])};
    }
    Eigen::Map<const RowMatrix<T>> mat() const {
        require_rank(2);
        return {data_.data(), static_cast<Eigen::Index>(shape_[0]), static_cast<Eigen::Index>(shape_[1])};
    }
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> vec() {
        return {data_.data(), static_cast<Eigen::Index>(data_.size())};
    }
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> vec() const {
        return {data_.data(), static_cast<Eigen::Index>(data_.size())};
    }

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

    bool all_finite() const {
        for (T v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    /// Copy of rows [begin, end) of a rank-2 tensor.
    Tensor slice_rows(std::size_t begin, std::size_t end) const {
        require_rank(2);
        if (begin > end || end > shape_[0]) throw ShapeError("row slice out of range for " + shape_string(shape_));
        const std::size_t c = shape_[1];
        return Tensor({end - begin, c}, std::vector<T>(data_.begin() + begin * c, data_.begin() + end * c));
    }

    /// Gather rows by index.
    Tensor gather_rows(std::span<const std::size_t> indices) const {
        const std::size_t c = cols();
        Tensor out({indices.size(), c});
        for (std::size_t i = 0; i < indices.size(); ++i) {
            if (indices[i] >= shape_[0]) throw ShapeError("row index out of range for " + shape_string(shape_));
            std::copy_n(data_.begin() + indices[i] * c, c, out.data_.begin() + i * c);
        }
        return out;
    }

    template <typename U>
    Tensor<U> cast() const {
        std::vector<U> out(data_.size());
        std::transform(data_.begin(), data_.end(), out.begin(), [](T v) { return static_cast<U>(v); });
        return Tensor<U>(shape_, std::move(out));
    }

    friend bool operator==(const Tensor& a, const Tensor& b) { return a.shape_ == b.shape_ && a.data_ == b.data_; }

private:
    void check_shape() const {
        for (std::size_t d : shape_) {
            if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape_));
        }
    }
    void require_rank(std::size_t r) const {
        if (shape_.size() != r) {
            throw ShapeError("expected rank-" + std::to_string(r) + " tensor, got shape " + shape_string(shape_));
        }
    }

    Shape shape_;
    std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

/// Stack rank-2 tensors with equal column counts vertically.
template <typename T>
Tensor<T> vstack(const Tensor<T>& top, const Tensor<T>& bottom) {
    if (top.cols() != bottom.cols()) {
        throw ShapeError("vstack column mismatch: " + shape_string(top.shape()) + " vs " +
                         shape_string(bottom.shape()));
    }
    std::vector<T> data(top.storage());
    data.insert(data.end(), bottom.storage().begin(), bottom.storage().end());
    return Tensor<T>({top.rows() + bottom.rows(), top.cols()}, std::move(data));
}

}  // namespace lsd
