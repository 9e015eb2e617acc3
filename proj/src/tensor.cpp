#include "ads3d/tensor.hpp"

#include "ads3d/error.hpp"

#include <algorithm>

namespace ads3d::nn {

std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string to_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), values_(numel(shape_), fill) {
    for (auto d : shape_)
        if (d == 0) throw Error("bad_shape", "tensor dims must be >= 1, got " + to_string(shape_));
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
    if (numel(shape_) != values_.size())
        throw Error("bad_shape", "shape " + to_string(shape_) + " does not match " +
                                     std::to_string(values_.size()) + " values");
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> index) const {
    if (index.size() != shape_.size()) throw Error("bad_shape", "index rank mismatch");
    std::size_t off = 0;
    std::size_t axis = 0;
    for (auto i : index) {
        if (i >= shape_[axis]) throw Error("bad_shape", "index out of range");
        off = off * shape_[axis] + i;
        ++axis;
    }
    return off;
}

double& Tensor::at(std::initializer_list<std::size_t> index) { return values_[offset(index)]; }
double Tensor::at(std::initializer_list<std::size_t> index) const { return values_[offset(index)]; }

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

Tensor Tensor::reshaped(Shape shape) const {
    if (numel(shape) != values_.size())
        throw Error("bad_shape", "cannot reshape " + to_string(shape_) + " to " + to_string(shape));
    return Tensor(std::move(shape), values_);
}

} // namespace ads3d::nn
