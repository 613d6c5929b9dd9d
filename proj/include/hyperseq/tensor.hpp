#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "hyperseq/common.hpp"

namespace hyperseq::ad {

/// Dense row-major double tensor. Rank 0 (scalar), 1 and 2 are what the
/// toolkit uses in practice.
class Tensor {
public:
    Tensor() = default;

    static Tensor scalar(double v) {
        Tensor t;
        t.data_.assign(1, v);
        return t;
    }

    static Tensor zeros(std::vector<std::size_t> shape) {
        Tensor t;
        t.shape_ = std::move(shape);
        std::size_t n = 1;
        for (std::size_t s : t.shape_) n *= s;
        t.data_.assign(n, 0.0);
        return t;
    }

    static Tensor from_vec(Vec v) {
        Tensor t;
        t.shape_ = {v.size()};
        t.data_ = std::move(v);
        return t;
    }

    static Tensor matrix(std::size_t rows, std::size_t cols, Vec data) {
        if (data.size() != rows * cols) throw invalid_input("Tensor::matrix: size mismatch");
        Tensor t;
        t.shape_ = {rows, cols};
        t.data_ = std::move(data);
        return t;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    bool is_scalar() const { return shape_.empty() && data_.size() == 1; }

    std::size_t rows() const { return shape_.at(0); }
    std::size_t cols() const { return shape_.at(1); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    Vec& data() { return data_; }
    const Vec& data() const { return data_; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    Tensor like_zeros() const {
        Tensor t;
        t.shape_ = shape_;
        t.data_.assign(data_.size(), 0.0);
        return t;
    }

private:
    std::vector<std::size_t> shape_;  // empty => scalar
    Vec data_;
};

}  // namespace hyperseq::ad
