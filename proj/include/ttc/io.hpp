#pragma once

#include "ttc/algebra.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ttc {

// --- .dtt tensor files ------------------------------------------------------
//
// bytes 0-3   ASCII "DTT1"
// byte  4     order (3 or 4)
// then        order x u32 little-endian dims
// then        prod(dims) x f32 little-endian values, slice-major and
//             column-major within a slice; order 4 appends the fourth index
//             as the slowest. Values are stored at f32 precision.

namespace detail {

inline void put_u32(std::ofstream& f, std::uint32_t v) {
    const std::array<unsigned char, 4> b{
        static_cast<unsigned char>(v & 0xff),
        static_cast<unsigned char>((v >> 8) & 0xff),
        static_cast<unsigned char>((v >> 16) & 0xff),
        static_cast<unsigned char>((v >> 24) & 0xff)};
    f.write(reinterpret_cast<const char*>(b.data()), 4);
}

inline std::uint32_t get_u32(std::ifstream& f) {
    std::array<unsigned char, 4> b{};
    f.read(reinterpret_cast<char*>(b.data()), 4);
    if (!f) throw IoError("tensor file truncated");
    return static_cast<std::uint32_t>(b[0]) |
           (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_f32(std::ofstream& f, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(f, bits);
}

inline float get_f32(std::ifstream& f) {
    const std::uint32_t bits = get_u32(f);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace detail

// Order-4 shape note kept alongside a folded tensor: the merged third mode
// runs i3 fastest, i4 slowest.
struct LoadedTensor {
    DenseTensor data;  // order-4 inputs arrive folded to (n1, n2, n3*n4)
    std::optional<std::pair<std::uint32_t, std::uint32_t>> order4;  // (n3, n4)
};

inline void save_tensor(const DenseTensor& t, const std::string& path,
                        std::optional<std::pair<std::uint32_t, std::uint32_t>>
                            order4 = std::nullopt) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f.write("DTT1", 4);
    const unsigned char order = order4 ? 4 : 3;
    f.write(reinterpret_cast<const char*>(&order), 1);
    detail::put_u32(f, static_cast<std::uint32_t>(t.n1()));
    detail::put_u32(f, static_cast<std::uint32_t>(t.n2()));
    if (order4) {
        if (static_cast<std::size_t>(order4->first) * order4->second != t.n3())
            throw DimError("save_tensor: order-4 dims do not match folded n3");
        detail::put_u32(f, order4->first);
        detail::put_u32(f, order4->second);
    } else {
        detail::put_u32(f, static_cast<std::uint32_t>(t.n3()));
    }
    for (double v : t.values()) detail::put_f32(f, static_cast<float>(v));
    if (!f) throw IoError("short write to " + path);
}

inline LoadedTensor load_tensor_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::string(magic, 4) != "DTT1")
        throw IoError(path + ": bad magic (not a DTT1 tensor file)");
    unsigned char order = 0;
    f.read(reinterpret_cast<char*>(&order), 1);
    if (!f || (order != 3 && order != 4))
        throw IoError(path + ": unsupported tensor order");
    std::vector<std::uint32_t> dims(order);
    std::size_t total = 1;
    for (auto& d : dims) {
        d = detail::get_u32(f);
        if (d == 0) throw IoError(path + ": zero dimension");
        const std::size_t next = total * d;
        if (next / d != total || next > (std::size_t{1} << 34))
            throw IoError(path + ": dimension overflow");
        total = next;
    }
    std::vector<double> values(total);
    for (auto& v : values) v = static_cast<double>(detail::get_f32(f));
    LoadedTensor out;
    if (order == 3) {
        out.data = DenseTensor(dims[0], dims[1], dims[2], std::move(values));
    } else {
        // The linear layout of an order-4 file equals its mode-(3,4) folding.
        out.data = DenseTensor(dims[0], dims[1],
                               static_cast<std::size_t>(dims[2]) * dims[3],
                               std::move(values));
        out.order4 = {dims[2], dims[3]};
    }
    return out;
}

inline DenseTensor load_tensor(const std::string& path) {
    return load_tensor_file(path).data;
}

// --- masks ------------------------------------------------------------------

// Exactly round(sr * N) observed entries, drawn without replacement.
inline MaskTensor gen_random_mask(std::size_t n1, std::size_t n2,
                                  std::size_t n3, double sr,
                                  std::uint64_t seed) {
    if (!(sr > 0.0 && sr <= 1.0))
        throw DimError("gen_random_mask: sr must be in (0, 1]");
    const std::size_t total = n1 * n2 * n3;
    const std::size_t keep =
        static_cast<std::size_t>(std::llround(sr * static_cast<double>(total)));
    std::vector<std::size_t> idx(total);
    for (std::size_t i = 0; i < total; ++i) idx[i] = i;
    Rng rng(seed);
    // Partial Fisher-Yates: the first `keep` slots end up observed.
    for (std::size_t i = 0; i < keep && i < total; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
        std::swap(idx[i], idx[j]);
    }
    MaskTensor m(n1, n2, n3);
    for (std::size_t i = 0; i < keep; ++i) m[idx[i]] = 1.0;
    return m;
}

// Whole mode-3 fibers kept or dropped: exactly round(sr * n1 * n2) observed
// spatial positions, constant along mode 3.
inline MaskTensor gen_tube_mask(std::size_t n1, std::size_t n2, std::size_t n3,
                                double sr, std::uint64_t seed) {
    if (!(sr > 0.0 && sr <= 1.0))
        throw DimError("gen_tube_mask: sr must be in (0, 1]");
    const std::size_t spatial = n1 * n2;
    const std::size_t keep = static_cast<std::size_t>(
        std::llround(sr * static_cast<double>(spatial)));
    std::vector<std::size_t> idx(spatial);
    for (std::size_t i = 0; i < spatial; ++i) idx[i] = i;
    Rng rng(seed);
    for (std::size_t i = 0; i < keep && i < spatial; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(spatial - i));
        std::swap(idx[i], idx[j]);
    }
    MaskTensor m(n1, n2, n3);
    for (std::size_t i = 0; i < keep; ++i) {
        const std::size_t i1 = idx[i] % n1;
        const std::size_t i2 = idx[i] / n1;
        for (std::size_t k = 0; k < n3; ++k) m(i1, i2, k) = 1.0;
    }
    return m;
}

inline double sampling_rate(const MaskTensor& m) {
    double ones = 0.0;
    for (double v : m.values()) ones += v;
    return ones / static_cast<double>(m.size());
}

// --- normalization ----------------------------------------------------------

struct BandRange {
    double min = 0.0, max = 0.0;
};

// Affine map of every frontal slice onto [0,1]; a constant band maps to
// zeros. The stored (min, max) pairs invert the transform.
inline std::pair<DenseTensor, std::vector<BandRange>> normalize_bands(
    const DenseTensor& t) {
    DenseTensor out = t;
    std::vector<BandRange> ranges(t.n3());
    const std::size_t slice = t.n1() * t.n2();
    for (std::size_t k = 0; k < t.n3(); ++k) {
        double lo = t[k * slice], hi = t[k * slice];
        for (std::size_t i = 0; i < slice; ++i) {
            lo = std::min(lo, t[k * slice + i]);
            hi = std::max(hi, t[k * slice + i]);
        }
        ranges[k] = {lo, hi};
        const double span = hi - lo;
        for (std::size_t i = 0; i < slice; ++i)
            out[k * slice + i] =
                span == 0.0 ? 0.0 : (t[k * slice + i] - lo) / span;
    }
    return {std::move(out), std::move(ranges)};
}

inline DenseTensor denormalize_bands(const DenseTensor& t,
                                     const std::vector<BandRange>& ranges) {
    if (ranges.size() != t.n3())
        throw DimError("denormalize_bands: range count mismatch");
    DenseTensor out = t;
    const std::size_t slice = t.n1() * t.n2();
    for (std::size_t k = 0; k < t.n3(); ++k)
        for (std::size_t i = 0; i < slice; ++i)
            out[k * slice + i] =
                t[k * slice + i] * (ranges[k].max - ranges[k].min) +
                ranges[k].min;
    return out;
}

// --- synthetic data ---------------------------------------------------------

// t_product of seeded nonnegative factors, scaled by the global maximum so
// values land in [0,1]. Pure scaling keeps the tubal rank exactly r.
inline DenseTensor synth_low_tubal_rank(std::size_t n1, std::size_t n2,
                                        std::size_t n3, std::size_t r,
                                        std::uint64_t seed) {
    if (r < 1 || r > std::min(n1, n2))
        throw DimError("synth_low_tubal_rank: need 1 <= r <= min(n1, n2)");
    Rng rng(seed);
    DenseTensor g = random_uniform_tensor(n1, r, n3, rng);
    DenseTensor h = random_uniform_tensor(r, n2, n3, rng);
    DenseTensor t = t_product(g, h);
    double hi = 0.0;
    for (double v : t.values()) hi = std::max(hi, std::abs(v));
    if (hi > 0.0)
        for (double& v : t.values()) v /= hi;
    return t;
}

// Smooth volume: a seeded sum of low-frequency spatial cosines, each with its
// own smooth band profile, normalized into [0,1]. Deliberately exceeds a
// small tubal rank so factorization baselines must truncate it.
inline DenseTensor synth_smooth(std::size_t n1, std::size_t n2, std::size_t n3,
                                std::uint64_t seed, std::size_t components = 6) {
    if (components < 1) throw DimError("synth_smooth: components must be >= 1");
    Rng rng(seed);
    DenseTensor t(n1, n2, n3);
    const double pi = std::numbers::pi;
    for (std::size_t p = 0; p < components; ++p) {
        const double fu = rng.uniform(0.5, 2.5);
        const double fv = rng.uniform(0.5, 2.5);
        const double fw = rng.uniform(0.5, 1.5);
        const double phase_s = rng.uniform(0.0, 2.0 * pi);
        const double phase_b = rng.uniform(0.0, 2.0 * pi);
        const double amp = rng.uniform(0.4, 1.0);
        for (std::size_t k = 0; k < n3; ++k) {
            const double band = std::cos(
                2.0 * pi * fw * static_cast<double>(k) / static_cast<double>(n3) +
                phase_b);
            for (std::size_t j = 0; j < n2; ++j)
                for (std::size_t i = 0; i < n1; ++i)
                    t(i, j, k) += amp * band *
                                  std::cos(2.0 * pi *
                                               (fu * static_cast<double>(i) /
                                                    static_cast<double>(n1) +
                                                fv * static_cast<double>(j) /
                                                    static_cast<double>(n2)) +
                                           phase_s);
        }
    }
    double lo = t[0], hi = t[0];
    for (double v : t.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo;
    for (double& v : t.values()) v = span == 0.0 ? 0.0 : (v - lo) / span;
    return t;
}

// --- order-4 folding --------------------------------------------------------

// Merge modes 3 and 4; i3 varies fastest within the merged axis. With the
// slice-major layout this is a pure reindexing of the same buffer.
inline DenseTensor fold4(const std::vector<double>& values, std::size_t n1,
                         std::size_t n2, std::size_t n3, std::size_t n4) {
    if (values.size() != n1 * n2 * n3 * n4)
        throw DimError("fold4: value count does not match dims");
    return DenseTensor(n1, n2, n3 * n4, values);
}

inline std::size_t fold4_index(std::size_t i3, std::size_t i4, std::size_t n3) {
    return i4 * n3 + i3;
}

inline std::vector<double> unfold4(const DenseTensor& t, std::size_t n3,
                                   std::size_t n4) {
    if (t.n3() != n3 * n4) throw DimError("unfold4: merged dim mismatch");
    return t.values();
}

// --- image export -----------------------------------------------------------

// Binary PPM (P6), 8-bit; values clamped to [0,1], scaled by 255 and rounded
// half-up.
inline void export_ppm(const DenseTensor& t, std::size_t band_r,
                       std::size_t band_g, std::size_t band_b,
                       const std::string& path) {
    if (band_r >= t.n3() || band_g >= t.n3() || band_b >= t.n3())
        throw DimError("export_ppm: band index out of range (n3 = " +
                       std::to_string(t.n3()) + ")");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f << "P6\n" << t.n2() << " " << t.n1() << "\n255\n";
    auto byte_of = [](double v) {
        v = std::min(std::max(v, 0.0), 1.0);
        return static_cast<unsigned char>(std::floor(v * 255.0 + 0.5));
    };
    const std::array<std::size_t, 3> bands{band_r, band_g, band_b};
    for (std::size_t i = 0; i < t.n1(); ++i)
        for (std::size_t j = 0; j < t.n2(); ++j)
            for (std::size_t b : bands) {
                const unsigned char c = byte_of(t(i, j, b));
                f.write(reinterpret_cast<const char*>(&c), 1);
            }
    if (!f) throw IoError("short write to " + path);
}

// --- CSV --------------------------------------------------------------------

inline void write_loss_csv(const std::vector<std::pair<long, double>>& trajectory,
                           const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << "iteration,loss\n";
    char buf[64];
    for (const auto& [it, loss] : trajectory) {
        std::snprintf(buf, sizeof(buf), "%ld,%.17g\n", it, loss);
        f << buf;
    }
    if (!f) throw IoError("short write to " + path);
}

}  // namespace ttc
