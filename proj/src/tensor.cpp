#include "blockprune/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace blockprune {

std::string to_string(const Shape3& s) {
    std::ostringstream os;
    os << "(" << s.c << "," << s.h << "," << s.w << ")";
    return os.str();
}

std::int64_t shape_numel(const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (auto d : shape) {
        if (d < 0) throw std::invalid_argument("negative tensor dimension");
        n *= d;
    }
    return n;
}

std::string shape_string(const std::vector<std::int64_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << "]";
    return os.str();
}

Tensor::Tensor(std::vector<std::int64_t> shape, float fill)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_numel(shape_)), fill) {}

Tensor::Tensor(std::vector<std::int64_t> shape, std::vector<float> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
    if (shape_numel(shape_) != static_cast<std::int64_t>(data_.size()))
        throw std::invalid_argument("tensor value count does not match shape " + shape_string(shape_));
}

Shape3 Tensor::sample_shape() const {
    if (shape_.size() != 4) throw std::logic_error("sample_shape needs a rank-4 tensor");
    return {static_cast<int>(shape_[1]), static_cast<int>(shape_[2]), static_cast<int>(shape_[3])};
}

float* Tensor::sample(std::int64_t n) {
    return data_.data() + n * (shape_numel(shape_) / shape_.at(0));
}

const float* Tensor::sample(std::int64_t n) const {
    return data_.data() + n * (shape_numel(shape_) / shape_.at(0));
}

void Tensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::reshape(std::vector<std::int64_t> shape) {
    if (shape_numel(shape) != numel())
        throw std::invalid_argument("reshape " + shape_string(shape_) + " -> " + shape_string(shape));
    shape_ = std::move(shape);
}

Tensor slice_batch(const Tensor& t, std::int64_t begin, std::int64_t count) {
    if (t.rank() == 0 || begin < 0 || begin + count > t.dim(0))
        throw std::out_of_range("slice_batch range");
    auto shape = t.shape();
    const std::int64_t per = t.numel() / std::max<std::int64_t>(t.dim(0), 1);
    shape[0] = count;
    std::vector<float> v(t.data() + begin * per, t.data() + (begin + count) * per);
    return Tensor(std::move(shape), std::move(v));
}

}  // namespace blockprune
