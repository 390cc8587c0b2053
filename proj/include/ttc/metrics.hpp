#pragma once

#include "ttc/tensor.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace ttc {

struct MetricsReport {
    std::vector<double> psnr_band;  // dB, +inf when the band matches exactly
    std::vector<double> ssim_band;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
};

// Per-band PSNR against a [0,1] reference (peak 1.0):
// 10*log10(1 / MSE_band), +inf on an exact band.
inline std::vector<double> psnr_bands(const DenseTensor& x,
                                      const DenseTensor& ref) {
    if (!x.same_dims(ref))
        throw DimError("psnr: dims " + x.dims_str() + " vs " + ref.dims_str());
    const std::size_t slice = x.n1() * x.n2();
    std::vector<double> out(x.n3());
    for (std::size_t k = 0; k < x.n3(); ++k) {
        double mse = 0.0;
        const double* a = x.data() + k * slice;
        const double* b = ref.data() + k * slice;
        for (std::size_t i = 0; i < slice; ++i) {
            const double d = a[i] - b[i];
            mse += d * d;
        }
        mse /= static_cast<double>(slice);
        out[k] = mse == 0.0 ? std::numeric_limits<double>::infinity()
                            : 10.0 * std::log10(1.0 / mse);
    }
    return out;
}

// Volume PSNR: one MSE over all entries.
inline double psnr_volume(const DenseTensor& x, const DenseTensor& ref) {
    if (!x.same_dims(ref))
        throw DimError("psnr: dims " + x.dims_str() + " vs " + ref.dims_str());
    double mse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - ref[i];
        mse += d * d;
    }
    mse /= static_cast<double>(x.size());
    return mse == 0.0 ? std::numeric_limits<double>::infinity()
                      : 10.0 * std::log10(1.0 / mse);
}

namespace detail {

// 11x11 Gaussian window, sigma 1.5, normalized to sum 1.
inline const std::vector<double>& ssim_window() {
    static const std::vector<double> w = [] {
        const int half = 5;
        std::vector<double> v(11 * 11);
        double sum = 0.0;
        for (int j = -half; j <= half; ++j)
            for (int i = -half; i <= half; ++i) {
                const double g = std::exp(-(i * i + j * j) / (2.0 * 1.5 * 1.5));
                v[(j + half) * 11 + (i + half)] = g;
                sum += g;
            }
        for (double& g : v) g /= sum;
        return v;
    }();
    return w;
}

}  // namespace detail

// Single-scale SSIM of one band pair: Gaussian-weighted moments over every
// valid 11x11 window, K1 = 0.01, K2 = 0.03, dynamic range 1.0, then the mean
// over windows.
inline double ssim_band(const DenseTensor& x, const DenseTensor& ref,
                        std::size_t band) {
    constexpr int win = 11;
    const std::size_t n1 = x.n1(), n2 = x.n2();
    if (n1 < win || n2 < win)
        throw DimError("ssim: band " + x.dims_str() + " smaller than " +
                       std::to_string(win) + "x" + std::to_string(win) +
                       " window");
    const double c1 = 0.01 * 0.01;
    const double c2 = 0.03 * 0.03;
    const std::vector<double>& w = detail::ssim_window();
    const std::size_t slice = n1 * n2;
    const double* a = x.data() + band * slice;
    const double* b = ref.data() + band * slice;

    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t j0 = 0; j0 + win <= n2; ++j0)
        for (std::size_t i0 = 0; i0 + win <= n1; ++i0) {
            double mu_a = 0.0, mu_b = 0.0;
            for (int v = 0; v < win; ++v)
                for (int u = 0; u < win; ++u) {
                    const double wt = w[v * win + u];
                    mu_a += wt * a[(j0 + v) * n1 + (i0 + u)];
                    mu_b += wt * b[(j0 + v) * n1 + (i0 + u)];
                }
            double var_a = 0.0, var_b = 0.0, cov = 0.0;
            for (int v = 0; v < win; ++v)
                for (int u = 0; u < win; ++u) {
                    const double wt = w[v * win + u];
                    const double da = a[(j0 + v) * n1 + (i0 + u)] - mu_a;
                    const double db = b[(j0 + v) * n1 + (i0 + u)] - mu_b;
                    var_a += wt * da * da;
                    var_b += wt * db * db;
                    cov += wt * da * db;
                }
            const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            const double den =
                (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += num / den;
            ++count;
        }
    return total / static_cast<double>(count);
}

inline std::vector<double> ssim_bands(const DenseTensor& x,
                                      const DenseTensor& ref) {
    if (!x.same_dims(ref))
        throw DimError("ssim: dims " + x.dims_str() + " vs " + ref.dims_str());
    std::vector<double> out(x.n3());
    for (std::size_t k = 0; k < x.n3(); ++k) out[k] = ssim_band(x, ref, k);
    return out;
}

// Band-mean PSNR and SSIM report (the HSI convention).
inline MetricsReport evaluate_metrics(const DenseTensor& x,
                                      const DenseTensor& ref) {
    MetricsReport r;
    r.psnr_band = psnr_bands(x, ref);
    r.ssim_band = ssim_bands(x, ref);
    double ps = 0.0, ss = 0.0;
    for (double v : r.psnr_band) ps += v;
    for (double v : r.ssim_band) ss += v;
    r.mean_psnr = ps / static_cast<double>(r.psnr_band.size());
    r.mean_ssim = ss / static_cast<double>(r.ssim_band.size());
    return r;
}

}  // namespace ttc
