#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "geomnet/errors.hpp"
#include "geomnet/rng.hpp"

namespace geomnet {

// Dense row-major shape, rank 1..4, every dim >= 1.
class Shape {
  public:
    Shape() = default;  // scalar-like [1]
    Shape(std::initializer_list<std::int64_t> dims);
    explicit Shape(std::span<const std::int64_t> dims);

    int rank() const { return rank_; }
    std::int64_t dim(int axis) const;
    std::int64_t elem_count() const { return count_; }

    bool operator==(const Shape& other) const;
    bool operator!=(const Shape& other) const { return !(*this == other); }

    std::string str() const;  // e.g. "[2,3,4]"

  private:
    std::array<std::int64_t, 4> dims_{1, 1, 1, 1};
    int rank_ = 1;
    std::int64_t count_ = 1;
};

// Dense tensor of 64-bit floats, row-major (last dim fastest).
class Tensor {
  public:
    Tensor() = default;  // single zero element, shape [1]
    explicit Tensor(const Shape& shape, double fill = 0.0);

    const Shape& shape() const { return shape_; }
    std::int64_t size() const { return shape_.elem_count(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    double& operator[](std::int64_t flat) { return data_[static_cast<std::size_t>(flat)]; }
    double operator[](std::int64_t flat) const { return data_[static_cast<std::size_t>(flat)]; }

    // Rank-checked element access; flat index of (i,j,k) under shape [a,b,c]
    // is (i*b + j)*c + k.
    double& at(std::int64_t i);
    double& at(std::int64_t i, std::int64_t j);
    double& at(std::int64_t i, std::int64_t j, std::int64_t k);
    double& at(std::int64_t i, std::int64_t j, std::int64_t k, std::int64_t l);
    double at(std::int64_t i) const { return const_cast<Tensor*>(this)->at(i); }
    double at(std::int64_t i, std::int64_t j) const { return const_cast<Tensor*>(this)->at(i, j); }
    double at(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return const_cast<Tensor*>(this)->at(i, j, k);
    }
    double at(std::int64_t i, std::int64_t j, std::int64_t k, std::int64_t l) const {
        return const_cast<Tensor*>(this)->at(i, j, k, l);
    }

    // Same elements, new shape; element counts must agree.
    Tensor reshaped(const Shape& shape) const;

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

  private:
    Shape shape_{};
    std::vector<double> data_ = std::vector<double>(1, 0.0);
};

Tensor tensor_filled(const Shape& shape, double value);

// Elements drawn uniformly from [lo,hi), consumed in row-major order.
Tensor tensor_uniform(const Shape& shape, double lo, double hi, Rng& rng);

// [m,k] x [k,n] -> [m,n]; per output element the sum runs over the inner
// index in ascending order.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);  // rank-2

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double c);
Tensor neg(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor ln(const Tensor& a);  // throws DomainError on a non-positive element

double dot(const Tensor& a, const Tensor& b);  // flat inner product, ascending index

}  // namespace geomnet
