#pragma once

#include <cstddef>
#include <vector>

#include "subtrain/rng.hpp"

namespace subtrain {

// Dense row-major N-d array of doubles. Carrier for images, activations,
// parameters, and gradients. The value count always equals the product of
// the extents; every constructor and operation checks it.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_[axis]; }
    std::size_t size() const { return values_.size(); }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    // Same values, new shape; the total size must match.
    Tensor reshaped(std::vector<std::size_t> new_shape) const;

    // Copy of rows [begin, end) along the first axis.
    Tensor slice(std::size_t begin, std::size_t end) const;

    Tensor& operator+=(const Tensor& other);
    Tensor& operator-=(const Tensor& other);
    Tensor& operator*=(double scalar);

    bool all_finite() const;
    double sum() const;

    static std::size_t shape_size(const std::vector<std::size_t>& shape);

private:
    std::vector<std::size_t> shape_;
    std::vector<double> values_;
};

// All-zero tensor; shape must be nonempty with positive extents.
Tensor zeros(std::vector<std::size_t> shape);

// Glorot (Xavier) uniform draw over [-L, L] with L = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out,
                      std::vector<std::size_t> shape, SeededRng& rng);

} // namespace subtrain
