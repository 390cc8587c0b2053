#pragma once

#include "ttc/algebra.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <vector>

namespace ttc {

// Thin SVD of one frontal slice: slice = u * diag(sigma) * v^H,
// sigma nonincreasing and nonnegative.
struct SliceSvd {
    Matrix<cplx> u;               // n1 x r
    std::vector<double> sigma;    // r = min(n1, n2)
    Matrix<cplx> v;               // n2 x r
};

namespace detail {

inline Eigen::MatrixXcd to_eigen_slice(const ComplexTensor& c, std::size_t k) {
    Eigen::MatrixXcd m(c.n1(), c.n2());
    for (std::size_t j = 0; j < c.n2(); ++j)
        for (std::size_t i = 0; i < c.n1(); ++i)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                c(i, j, k);
    return m;
}

inline Matrix<cplx> from_eigen(const Eigen::MatrixXcd& m) {
    Matrix<cplx> out(static_cast<std::size_t>(m.rows()),
                     static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = m(i, j);
    return out;
}

}  // namespace detail

// Per-slice thin SVD of a (transform-domain) tensor.
inline std::vector<SliceSvd> slice_svd(const ComplexTensor& c) {
    std::vector<SliceSvd> out;
    out.reserve(c.n3());
    for (std::size_t k = 0; k < c.n3(); ++k) {
        Eigen::MatrixXcd m = detail::to_eigen_slice(c, k);
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
            m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (svd.info() != Eigen::Success)
            throw NumericError("slice_svd: SVD did not converge on slice " +
                               std::to_string(k));
        SliceSvd s;
        s.u = detail::from_eigen(svd.matrixU());
        s.v = detail::from_eigen(svd.matrixV());
        const auto& sv = svd.singularValues();
        s.sigma.assign(sv.data(), sv.data() + sv.size());
        out.push_back(std::move(s));
    }
    return out;
}

// Tubal rank: max over transform-domain slices of the count of singular
// values above tol * sigma_max, where sigma_max ranges over the whole
// transformed tensor.
inline std::size_t tubal_rank(const DenseTensor& a, double tol = 1e-8) {
    if (tol <= 0.0) throw DimError("tubal_rank: tol must be > 0");
    const std::vector<SliceSvd> svds = slice_svd(dft_mode3(a));
    double sigma_max = 0.0;
    for (const SliceSvd& s : svds)
        for (double sv : s.sigma) sigma_max = std::max(sigma_max, sv);
    std::size_t rank = 0;
    for (const SliceSvd& s : svds) {
        std::size_t r = 0;
        for (double sv : s.sigma)
            if (sv > tol * sigma_max) ++r;
        rank = std::max(rank, r);
    }
    return rank;
}

}  // namespace ttc
