#include "geomnet/tensor.hpp"

#include <cmath>
#include <sstream>

namespace geomnet {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
    }
}

}  // namespace

Shape::Shape(std::initializer_list<std::int64_t> dims)
    : Shape(std::span<const std::int64_t>(dims.begin(), dims.size())) {}

Shape::Shape(std::span<const std::int64_t> dims) {
    if (dims.empty() || dims.size() > 4) {
        throw ShapeError("shape rank must be 1..4, got " + std::to_string(dims.size()));
    }
    rank_ = static_cast<int>(dims.size());
    count_ = 1;
    for (int i = 0; i < rank_; ++i) {
        if (dims[static_cast<std::size_t>(i)] < 1) {
            throw ShapeError("shape dims must be >= 1, got " +
                             std::to_string(dims[static_cast<std::size_t>(i)]) + " at axis " +
                             std::to_string(i));
        }
        dims_[static_cast<std::size_t>(i)] = dims[static_cast<std::size_t>(i)];
        count_ *= dims_[static_cast<std::size_t>(i)];
    }
}

std::int64_t Shape::dim(int axis) const {
    if (axis < 0 || axis >= rank_) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for rank " +
                         std::to_string(rank_));
    }
    return dims_[static_cast<std::size_t>(axis)];
}

bool Shape::operator==(const Shape& other) const {
    if (rank_ != other.rank_) return false;
    for (int i = 0; i < rank_; ++i) {
        if (dims_[static_cast<std::size_t>(i)] != other.dims_[static_cast<std::size_t>(i)])
            return false;
    }
    return true;
}

std::string Shape::str() const {
    std::ostringstream os;
    os << '[';
    for (int i = 0; i < rank_; ++i) {
        if (i) os << ',';
        os << dims_[static_cast<std::size_t>(i)];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(const Shape& shape, double fill)
    : shape_(shape), data_(static_cast<std::size_t>(shape.elem_count()), fill) {}

double& Tensor::at(std::int64_t i) {
    if (shape_.rank() != 1) throw ShapeError("at(i) on tensor of shape " + shape_.str());
    if (i < 0 || i >= shape_.dim(0)) throw ShapeError("index out of range");
    return data_[static_cast<std::size_t>(i)];
}

double& Tensor::at(std::int64_t i, std::int64_t j) {
    if (shape_.rank() != 2) throw ShapeError("at(i,j) on tensor of shape " + shape_.str());
    if (i < 0 || i >= shape_.dim(0) || j < 0 || j >= shape_.dim(1))
        throw ShapeError("index out of range");
    return data_[static_cast<std::size_t>(i * shape_.dim(1) + j)];
}

double& Tensor::at(std::int64_t i, std::int64_t j, std::int64_t k) {
    if (shape_.rank() != 3) throw ShapeError("at(i,j,k) on tensor of shape " + shape_.str());
    if (i < 0 || i >= shape_.dim(0) || j < 0 || j >= shape_.dim(1) || k < 0 || k >= shape_.dim(2))
        throw ShapeError("index out of range");
    return data_[static_cast<std::size_t>((i * shape_.dim(1) + j) * shape_.dim(2) + k)];
}

double& Tensor::at(std::int64_t i, std::int64_t j, std::int64_t k, std::int64_t l) {
    if (shape_.rank() != 4) throw ShapeError("at(i,j,k,l) on tensor of shape " + shape_.str());
    if (i < 0 || i >= shape_.dim(0) || j < 0 || j >= shape_.dim(1) || k < 0 ||
        k >= shape_.dim(2) || l < 0 || l >= shape_.dim(3))
        throw ShapeError("index out of range");
    return data_[static_cast<std::size_t>(((i * shape_.dim(1) + j) * shape_.dim(2) + k) *
                                              shape_.dim(3) +
                                          l)];
}

Tensor Tensor::reshaped(const Shape& shape) const {
    if (shape.elem_count() != size()) {
        throw ShapeError("reshape " + shape_.str() + " -> " + shape.str() +
                         ": element count mismatch");
    }
    Tensor out(shape);
    out.data_ = data_;
    return out;
}

Tensor tensor_filled(const Shape& shape, double value) { return Tensor(shape, value); }

Tensor tensor_uniform(const Shape& shape, double lo, double hi, Rng& rng) {
    Tensor out(shape);
    for (auto& v : out.values()) v = rng.uniform(lo, hi);
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape().rank() != 2 || b.shape().rank() != 2) {
        throw ShapeError("matmul needs rank-2 operands, got " + a.shape().str() + " and " +
                         b.shape().str());
    }
    const std::int64_t m = a.shape().dim(0);
    const std::int64_t k = a.shape().dim(1);
    const std::int64_t n = b.shape().dim(1);
    if (b.shape().dim(0) != k) {
        throw ShapeError("matmul inner dims disagree: " + a.shape().str() + " x " +
                         b.shape().str());
    }
    Tensor out(Shape{m, n});
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    // i,t,j ordering: each out[i][j] accumulates over t ascending, and the
    // j loop vectorizes.
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t t = 0; t < k; ++t) {
            const double ait = pa[i * k + t];
            const double* brow = pb + t * n;
            double* orow = po + i * n;
            for (std::int64_t j = 0; j < n; ++j) orow[j] += ait * brow[j];
        }
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    if (a.shape().rank() != 2) {
        throw ShapeError("transpose needs a rank-2 tensor, got " + a.shape().str());
    }
    const std::int64_t m = a.shape().dim(0);
    const std::int64_t n = a.shape().dim(1);
    Tensor out(Shape{n, m});
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < n; ++j) out[j * m + i] = a[i * n + j];
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

Tensor scale(const Tensor& a, double c) {
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a[i] * c;
    return out;
}

Tensor neg(const Tensor& a) {
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.size(); ++i) out[i] = -a[i];
    return out;
}

Tensor exp(const Tensor& a) {
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.size(); ++i) out[i] = std::exp(a[i]);
    return out;
}

Tensor ln(const Tensor& a) {
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.size(); ++i) {
        if (!(a[i] > 0.0)) {
            throw DomainError("ln of non-positive element " + std::to_string(a[i]) +
                              " at flat index " + std::to_string(i));
        }
        out[i] = std::log(a[i]);
    }
    return out;
}

double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double acc = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace geomnet
