#pragma once

#include "ttc/svd.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ttc {

struct AdmmParams {
    double rho = 1e-2;
    double rho_growth = 1.05;
    double rho_max = 1e10;
    long max_iterations = 500;
    double tol = 1e-6;  // relative change of the iterate
};

// Soft-threshold the singular values of every frontal slice: sigma_i ->
// max(sigma_i - tau, 0), with U and V unchanged.
inline ComplexTensor svt_slices(const ComplexTensor& c, double tau) {
    if (tau < 0.0) throw DimError("svt_slices: tau must be >= 0");
    const std::vector<SliceSvd> svds = slice_svd(c);
    ComplexTensor out(c.n1(), c.n2(), c.n3());
    for (std::size_t k = 0; k < c.n3(); ++k) {
        const SliceSvd& s = svds[k];
        const std::size_t r = s.sigma.size();
        for (std::size_t p = 0; p < r; ++p) {
            const double sv = std::max(s.sigma[p] - tau, 0.0);
            if (sv == 0.0) continue;
            for (std::size_t j = 0; j < c.n2(); ++j) {
                const cplx vj = std::conj(s.v(j, p)) * sv;
                for (std::size_t i = 0; i < c.n1(); ++i)
                    out(i, j, k) += s.u(i, p) * vj;
            }
        }
    }
    return out;
}

// Tensor nuclear norm: mean over transform slices of the slice nuclear norms.
inline double tnn_value(const DenseTensor& t) {
    const std::vector<SliceSvd> svds = slice_svd(dft_mode3(t));
    double s = 0.0;
    for (const SliceSvd& sl : svds)
        for (double sv : sl.sigma) s += sv;
    return s / static_cast<double>(t.n3());
}

struct TnnResult {
    DenseTensor completed;
    long iterations = 0;
    bool converged = false;
    double final_change = 0.0;
    std::vector<double> early_objective;  // TNN of the SVT iterate, first 10 its
};

// Classic tensor-nuclear-norm completion by ADMM: alternate a per-Fourier-
// slice SVT shrinkage with exact projection onto the observed entries.
// The returned tensor matches the observations bitwise.
inline TnnResult tnn_admm_complete(const DenseTensor& o, const MaskTensor& m,
                                   const AdmmParams& params = {}) {
    if (!o.same_dims(m))
        throw DimError("tnn_admm_complete: dims " + o.dims_str() + " vs " +
                       m.dims_str());
    for (double v : m.values())
        if (v != 0.0 && v != 1.0)
            throw DimError("tnn_admm_complete: mask must be binary");
    if (params.rho <= 0.0 || params.rho_growth < 1.0 || params.tol <= 0.0)
        throw DimError("tnn_admm_complete: bad ADMM parameters");

    const std::size_t n = o.size();
    DenseTensor x = hadamard(o, m);  // start from the observed data
    DenseTensor lambda(o.n1(), o.n2(), o.n3());
    double rho = params.rho;

    TnnResult result;
    DenseTensor prev = x;
    for (long it = 1; it <= params.max_iterations; ++it) {
        // Y-step: prox of the TNN at X + Lambda/rho, threshold 1/rho.
        DenseTensor target = x;
        for (std::size_t i = 0; i < n; ++i) target[i] += lambda[i] / rho;
        ComplexTensor shrunk = svt_slices(dft_mode3(target), 1.0 / rho);
        DenseTensor y = real_part(idft_mode3(shrunk));
        if (it <= 10) result.early_objective.push_back(tnn_value(y));

        // X-step: exact data consistency on observed entries.
        for (std::size_t i = 0; i < n; ++i)
            x[i] = m[i] != 0.0 ? o[i] : y[i] - lambda[i] / rho;

        for (std::size_t i = 0; i < n; ++i) lambda[i] += rho * (x[i] - y[i]);
        rho = std::min(rho * params.rho_growth, params.rho_max);

        result.iterations = it;
        // stop only once the splitting agrees and the iterate has settled
        const double primal = relative_error(x, y);
        result.final_change = std::max(relative_error(x, prev), primal);
        if (result.final_change <= params.tol) {
            result.converged = true;
            break;
        }
        prev = x;
    }
    result.completed = std::move(x);
    return result;
}

}  // namespace ttc
