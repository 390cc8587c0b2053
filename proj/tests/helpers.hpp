#pragma once

#include "ttc/algebra.hpp"
#include "ttc/common.hpp"
#include "ttc/tensor.hpp"

#include <cstdint>

namespace ttc::testing {

inline DenseTensor rand_tensor(std::size_t n1, std::size_t n2, std::size_t n3,
                               std::uint64_t seed, double lo = -1.0,
                               double hi = 1.0) {
    Rng rng(seed);
    return random_uniform_tensor(n1, n2, n3, rng, lo, hi);
}

// Brute-force t-product straight from the block-circulant definition:
// C(i1,i2,k) = sum_j sum_m A(i1,j,m) * B(j,i2,(k-m) mod n3).
// Independent of the FFT path under test.
inline DenseTensor t_product_circulant(const DenseTensor& a,
                                       const DenseTensor& b) {
    const std::size_t n3 = a.n3();
    DenseTensor c(a.n1(), b.n2(), n3);
    for (std::size_t k = 0; k < n3; ++k)
        for (std::size_t i2 = 0; i2 < b.n2(); ++i2)
            for (std::size_t i1 = 0; i1 < a.n1(); ++i1) {
                double acc = 0.0;
                for (std::size_t j = 0; j < a.n2(); ++j)
                    for (std::size_t m = 0; m < n3; ++m)
                        acc += a(i1, j, m) * b(j, i2, (k + n3 - m) % n3);
                c(i1, i2, k) = acc;
            }
    return c;
}

// Dense row-major matrix product for unfold-based oracles.
template <typename T>
inline Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
    Matrix<T> c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const T v = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += v * b(k, j);
        }
    return c;
}

inline double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline bool bitwise_equal(const DenseTensor& a, const DenseTensor& b) {
    if (!a.same_dims(b)) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

}  // namespace ttc::testing
