#include "subtrain/tensor.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "subtrain/errors.hpp"

namespace subtrain {

std::size_t Tensor::shape_size(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) {
        if (e == 0) throw ConfigError("tensor extent must be positive");
        n *= e;
    }
    return n;
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), values_(shape_size(shape_), 0.0) {
    if (shape_.empty()) throw ConfigError("tensor shape must be nonempty");
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (shape_.empty()) throw ConfigError("tensor shape must be nonempty");
    if (values_.size() != shape_size(shape_))
        throw ConfigError("tensor value count does not match shape");
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
    if (shape_size(new_shape) != values_.size())
        throw ConfigError("reshape changes total size");
    return Tensor(std::move(new_shape), values_);
}

Tensor Tensor::slice(std::size_t begin, std::size_t end) const {
    if (shape_.empty() || begin > end || end > shape_[0])
        throw ConfigError("slice range out of bounds");
    std::size_t row = values_.size() / shape_[0];
    std::vector<std::size_t> out_shape = shape_;
    out_shape[0] = end - begin;
    if (out_shape[0] == 0) throw ConfigError("empty slice");
    std::vector<double> out(values_.begin() + static_cast<std::ptrdiff_t>(begin * row),
                            values_.begin() + static_cast<std::ptrdiff_t>(end * row));
    return Tensor(std::move(out_shape), std::move(out));
}

Tensor& Tensor::operator+=(const Tensor& other) {
    if (shape_ != other.shape_) throw ConfigError("shape mismatch in +=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
    if (shape_ != other.shape_) throw ConfigError("shape mismatch in -=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
}

Tensor& Tensor::operator*=(double scalar) {
    for (double& v : values_) v *= scalar;
    return *this;
}

bool Tensor::all_finite() const {
    for (double v : values_)
        if (!std::isfinite(v)) return false;
    return true;
}

double Tensor::sum() const {
    return std::accumulate(values_.begin(), values_.end(), 0.0);
}

Tensor zeros(std::vector<std::size_t> shape) {
    return Tensor(std::move(shape));
}

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out,
                      std::vector<std::size_t> shape, SeededRng& rng) {
    if (fan_in == 0 || fan_out == 0)
        throw ConfigError("glorot_uniform: fan values must be positive");
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i)
        t[i] = rng.next_uniform(-limit, limit);
    return t;
}

} // namespace subtrain
