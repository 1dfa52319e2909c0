#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace blockprune {

/// Per-sample feature map shape (channels, height, width).
struct Shape3 {
    int c = 0;
    int h = 0;
    int w = 0;

    std::int64_t numel() const { return static_cast<std::int64_t>(c) * h * w; }
    friend bool operator==(const Shape3&, const Shape3&) = default;
};

std::string to_string(const Shape3& s);

/// Dense row-major float32 tensor. Owns its storage.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::int64_t> shape, float fill = 0.0f);
    Tensor(std::initializer_list<std::int64_t> shape, float fill = 0.0f)
        : Tensor(std::vector<std::int64_t>(shape), fill) {}
    Tensor(std::vector<std::int64_t> shape, std::vector<float> values);

    /// N×C×H×W batch tensor.
    static Tensor batch(std::int64_t n, const Shape3& s, float fill = 0.0f) {
        return Tensor({n, s.c, s.h, s.w}, fill);
    }

    const std::vector<std::int64_t>& shape() const { return shape_; }
    std::int64_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t rank() const { return shape_.size(); }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::span<float> values() { return data_; }
    std::span<const float> values() const { return data_; }

    float& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    float operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    /// Per-sample shape of a rank-4 tensor.
    Shape3 sample_shape() const;
    /// Pointer to the start of sample n along the leading axis.
    float* sample(std::int64_t n);
    const float* sample(std::int64_t n) const;

    void fill(float v);
    void reshape(std::vector<std::int64_t> shape);

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::vector<std::int64_t> shape_;
    std::vector<float> data_;
};

std::int64_t shape_numel(const std::vector<std::int64_t>& shape);
std::string shape_string(const std::vector<std::int64_t>& shape);

/// Copies samples [begin, begin+count) of a rank-4 tensor.
Tensor slice_batch(const Tensor& t, std::int64_t begin, std::int64_t count);

}  // namespace blockprune
