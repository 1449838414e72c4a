#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hqfnn {

/// Dense row-major tensor of doubles.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
        : shape_(std::move(shape)), data_(count(shape_), fill) {}
    Tensor(std::vector<std::size_t> shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != count(shape_)) throw std::invalid_argument("tensor data does not match its shape");
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    template <typename... I>
    double& operator()(I... idx) { return data_[offset({static_cast<std::size_t>(idx)...})]; }
    template <typename... I>
    double operator()(I... idx) const { return data_[offset({static_cast<std::size_t>(idx)...})]; }

    /// Contiguous view of the sub-tensor at leading index i.
    std::span<double> slice(std::size_t i) {
        const std::size_t stride = data_.size() / shape_.at(0);
        return {data_.data() + i * stride, stride};
    }
    std::span<const double> slice(std::size_t i) const {
        const std::size_t stride = data_.size() / shape_.at(0);
        return {data_.data() + i * stride, stride};
    }

    static std::size_t count(const std::vector<std::size_t>& shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    }

private:
    std::size_t offset(std::initializer_list<std::size_t> idx) const {
        std::size_t off = 0;
        std::size_t axis = 0;
        for (std::size_t i : idx) off = off * shape_[axis++] + i;
        return off;
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

}  // namespace hqfnn
