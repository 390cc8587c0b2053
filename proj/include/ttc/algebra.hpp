#pragma once

#include "ttc/tensor.hpp"

#include <cmath>
#include <numbers>

namespace ttc {

// Mode-3 unfolding: row i3 of the result is the column-major vectorization of
// frontal slice i3, i.e. entry (i3, i1 + i2*n1) = t(i1,i2,i3).
template <typename T>
inline Matrix<T> mode3_unfold(const Tensor3<T>& t) {
    Matrix<T> m(t.n3(), t.n1() * t.n2());
    for (std::size_t i3 = 0; i3 < t.n3(); ++i3)
        for (std::size_t i2 = 0; i2 < t.n2(); ++i2)
            for (std::size_t i1 = 0; i1 < t.n1(); ++i1)
                m(i3, i1 + i2 * t.n1()) = t(i1, i2, i3);
    return m;
}

template <typename T>
inline Tensor3<T> mode3_fold(const Matrix<T>& m, std::size_t n1, std::size_t n2,
                             std::size_t n3) {
    if (m.rows() != n3 || m.cols() != n1 * n2)
        throw DimError("mode3_fold: matrix is " + std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()) + ", expected " +
                       std::to_string(n3) + "x" + std::to_string(n1 * n2));
    Tensor3<T> t(n1, n2, n3);
    for (std::size_t i3 = 0; i3 < n3; ++i3)
        for (std::size_t i2 = 0; i2 < n2; ++i2)
            for (std::size_t i1 = 0; i1 < n1; ++i1)
                t(i1, i2, i3) = m(i3, i1 + i2 * n1);
    return t;
}

// Mode-3 tensor-matrix product: out(i1,i2,j) = sum_k t(i1,i2,k) * a(j,k).
// Equivalent to folding a * mode3_unfold(t).
template <typename T, typename U>
inline auto mode3_product(const Tensor3<T>& t, const Matrix<U>& a)
    -> Tensor3<decltype(T{} * U{})> {
    if (a.cols() != t.n3())
        throw DimError("mode3_product: matrix has " + std::to_string(a.cols()) +
                       " cols, tensor n3 = " + std::to_string(t.n3()));
    using R = decltype(T{} * U{});
    Tensor3<R> out(t.n1(), t.n2(), a.rows());
    const std::size_t slice = t.n1() * t.n2();
    for (std::size_t j = 0; j < a.rows(); ++j)
        for (std::size_t k = 0; k < t.n3(); ++k) {
            const U w = a(j, k);
            const T* src = t.data() + k * slice;
            R* dst = out.data() + j * slice;
            for (std::size_t i = 0; i < slice; ++i) dst[i] += src[i] * w;
        }
    return out;
}

// Unnormalized DFT matrix: F(j,k) = exp(-2*pi*i*j*k/n).
inline Matrix<cplx> dft_matrix(std::size_t n) {
    Matrix<cplx> f(n, n);
    const double w = -2.0 * std::numbers::pi / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
            const double ang = w * static_cast<double>(j * k % n);
            f(j, k) = cplx(std::cos(ang), std::sin(ang));
        }
    return f;
}

// Inverse DFT matrix: (1/n) * exp(+2*pi*i*j*k/n).
inline Matrix<cplx> idft_matrix(std::size_t n) {
    Matrix<cplx> f(n, n);
    const double w = 2.0 * std::numbers::pi / static_cast<double>(n);
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
            const double ang = w * static_cast<double>(j * k % n);
            f(j, k) = cplx(inv * std::cos(ang), inv * std::sin(ang));
        }
    return f;
}

template <typename T>
inline ComplexTensor dft_mode3(const Tensor3<T>& t) {
    return mode3_product(t, dft_matrix(t.n3()));
}

inline ComplexTensor idft_mode3(const ComplexTensor& c) {
    return mode3_product(c, idft_matrix(c.n3()));
}

// Face-wise product: slice k of the result is X^(k) * Y^(k).
template <typename T>
inline Tensor3<T> facewise_product(const Tensor3<T>& x, const Tensor3<T>& y) {
    if (x.n2() != y.n1() || x.n3() != y.n3())
        throw DimError("facewise_product: dims " + x.dims_str() + " vs " +
                       y.dims_str());
    Tensor3<T> out(x.n1(), y.n2(), x.n3());
    for (std::size_t k = 0; k < x.n3(); ++k)
        for (std::size_t j = 0; j < y.n2(); ++j)
            for (std::size_t m = 0; m < x.n2(); ++m) {
                const T w = y(m, j, k);
                for (std::size_t i = 0; i < x.n1(); ++i)
                    out(i, j, k) += x(i, m, k) * w;
            }
    return out;
}

// Extract the imaginary Frobenius mass relative to max(1, ||Re||_F).
inline double imaginary_residue(const ComplexTensor& c) {
    double im = 0.0, re = 0.0;
    for (const cplx& v : c.values()) {
        im += v.imag() * v.imag();
        re += v.real() * v.real();
    }
    return std::sqrt(im) / std::max(1.0, std::sqrt(re));
}

inline DenseTensor real_part(const ComplexTensor& c) {
    DenseTensor out(c.n1(), c.n2(), c.n3());
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
    return out;
}

// T-product A * B = IDFT( DFT(A) facewise DFT(B) ). Real inputs must come
// back real; a residue above tol is a numerical failure.
inline DenseTensor t_product(const DenseTensor& a, const DenseTensor& b,
                             double imag_tol = 1e-10) {
    if (a.n2() != b.n1() || a.n3() != b.n3())
        throw DimError("t_product: dims " + a.dims_str() + " vs " + b.dims_str());
    ComplexTensor prod = facewise_product(dft_mode3(a), dft_mode3(b));
    ComplexTensor back = idft_mode3(prod);
    const double residue = imaginary_residue(back);
    if (residue > imag_tol)
        throw NumericError("t_product: imaginary residue " +
                           std::to_string(residue) + " exceeds tolerance");
    return real_part(back);
}

// Identity element of the t-product: first frontal slice I, others zero.
inline DenseTensor tube_identity(std::size_t n, std::size_t n3) {
    DenseTensor t(n, n, n3);
    for (std::size_t i = 0; i < n; ++i) t(i, i, 0) = 1.0;
    return t;
}

// Every frontal slice an identity matrix (the fixed input of the face-wise
// generators).
inline DenseTensor slice_identity(std::size_t n, std::size_t n3) {
    DenseTensor t(n, n, n3);
    for (std::size_t k = 0; k < n3; ++k)
        for (std::size_t i = 0; i < n; ++i) t(i, i, k) = 1.0;
    return t;
}

}  // namespace ttc
