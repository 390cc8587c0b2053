#pragma once

#include "ttc/common.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace ttc {

using cplx = std::complex<double>;

// Dense order-3 tensor of size n1 x n2 x n3. Storage is frontal-slice-major
// with column-major slices: offset(i1,i2,i3) = i3*n1*n2 + i2*n1 + i1.
// Frontal slice k is the n1 x n2 matrix T(:,:,k).
template <typename T>
class Tensor3 {
public:
    Tensor3() : n1_(0), n2_(0), n3_(0) {}

    Tensor3(std::size_t n1, std::size_t n2, std::size_t n3, T fill = T{})
        : n1_(n1), n2_(n2), n3_(n3), values_(n1 * n2 * n3, fill) {
        if (n1 == 0 || n2 == 0 || n3 == 0)
            throw DimError("Tensor3: all dims must be >= 1");
    }

    Tensor3(std::size_t n1, std::size_t n2, std::size_t n3, std::vector<T> values)
        : n1_(n1), n2_(n2), n3_(n3), values_(std::move(values)) {
        if (n1 == 0 || n2 == 0 || n3 == 0)
            throw DimError("Tensor3: all dims must be >= 1");
        if (values_.size() != n1 * n2 * n3)
            throw DimError("Tensor3: value count does not match dims");
    }

    std::size_t n1() const { return n1_; }
    std::size_t n2() const { return n2_; }
    std::size_t n3() const { return n3_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    std::size_t offset(std::size_t i1, std::size_t i2, std::size_t i3) const {
        return i3 * n1_ * n2_ + i2 * n1_ + i1;
    }

    T& operator()(std::size_t i1, std::size_t i2, std::size_t i3) {
        return values_[offset(i1, i2, i3)];
    }
    const T& operator()(std::size_t i1, std::size_t i2, std::size_t i3) const {
        return values_[offset(i1, i2, i3)];
    }

    T& operator[](std::size_t i) { return values_[i]; }
    const T& operator[](std::size_t i) const { return values_[i]; }

    std::vector<T>& values() { return values_; }
    const std::vector<T>& values() const { return values_; }
    T* data() { return values_.data(); }
    const T* data() const { return values_.data(); }

    bool same_dims(const Tensor3& o) const {
        return n1_ == o.n1_ && n2_ == o.n2_ && n3_ == o.n3_;
    }

    std::string dims_str() const {
        return std::to_string(n1_) + "x" + std::to_string(n2_) + "x" +
               std::to_string(n3_);
    }

private:
    std::size_t n1_, n2_, n3_;
    std::vector<T> values_;
};

using DenseTensor = Tensor3<double>;
using ComplexTensor = Tensor3<cplx>;

// A binary {0,1} mask shares the dense carrier.
using MaskTensor = DenseTensor;

// Row-major dense matrix, used for unfoldings and tube transforms.
template <typename T>
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    T& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const {
        return values_[r * cols_ + c];
    }

    std::vector<T>& values() { return values_; }
    const std::vector<T>& values() const { return values_; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
        return m;
    }

private:
    std::size_t rows_, cols_;
    std::vector<T> values_;
};

// Fixed left-to-right summation order, so norms are bitwise reproducible.
template <typename T>
inline double frobenius_norm(const Tensor3<T>& t) {
    double s = 0.0;
    for (const T& v : t.values()) s += std::norm(v);
    return std::sqrt(s);
}

template <typename T>
inline Tensor3<T> hadamard(const Tensor3<T>& a, const Tensor3<T>& b) {
    if (!a.same_dims(b))
        throw DimError("hadamard: dims " + a.dims_str() + " vs " + b.dims_str());
    Tensor3<T> out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
    return out;
}

template <typename T>
inline Tensor3<T> add(const Tensor3<T>& a, const Tensor3<T>& b) {
    if (!a.same_dims(b))
        throw DimError("add: dims " + a.dims_str() + " vs " + b.dims_str());
    Tensor3<T> out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

template <typename T>
inline Tensor3<T> sub(const Tensor3<T>& a, const Tensor3<T>& b) {
    if (!a.same_dims(b))
        throw DimError("sub: dims " + a.dims_str() + " vs " + b.dims_str());
    Tensor3<T> out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}

// ||a - b||_F / max(1, ||b||_F)
template <typename T>
inline double relative_error(const Tensor3<T>& a, const Tensor3<T>& b) {
    if (!a.same_dims(b))
        throw DimError("relative_error: dims " + a.dims_str() + " vs " + b.dims_str());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a[i] - b[i]);
        den += std::norm(b[i]);
    }
    return std::sqrt(num) / std::max(1.0, std::sqrt(den));
}

inline DenseTensor random_uniform_tensor(std::size_t n1, std::size_t n2,
                                         std::size_t n3, Rng& rng,
                                         double lo = 0.0, double hi = 1.0) {
    DenseTensor t(n1, n2, n3);
    for (auto& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

}  // namespace ttc
