#pragma once

#include "ttc/algebra.hpp"
#include "ttc/autodiff.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_set>
#include <vector>

namespace ttc {

// Parameter partition: the latent generator's weights vs the tube
// transform's weights.
enum class ParamGroup { generator, transform };

// Named trainable tensors plus their initial values. Leaves for one
// optimization step are materialized in store order, so iteration is
// deterministic.
class ParameterStore {
public:
    int add(std::string name, DenseTensor value, ParamGroup group) {
        if (!names_.insert(name).second)
            throw DimError("ParameterStore: duplicate name " + name);
        entries_.push_back({std::move(name), std::move(value), group});
        return static_cast<int>(entries_.size()) - 1;
    }

    std::size_t count() const { return entries_.size(); }

    DenseTensor& value(std::size_t i) { return entries_[i].value; }
    const DenseTensor& value(std::size_t i) const { return entries_[i].value; }
    const std::string& name(std::size_t i) const { return entries_[i].name; }
    ParamGroup group(std::size_t i) const { return entries_[i].group; }

    int find(const std::string& name) const {
        for (std::size_t i = 0; i < entries_.size(); ++i)
            if (entries_[i].name == name) return static_cast<int>(i);
        return -1;
    }

    std::size_t total_parameters() const {
        std::size_t n = 0;
        for (const auto& e : entries_) n += e.value.size();
        return n;
    }

    std::vector<Node> make_leaves(Tape& tape) const {
        std::vector<Node> nodes;
        nodes.reserve(entries_.size());
        for (const auto& e : entries_) nodes.push_back(tape.leaf(e.value, true));
        return nodes;
    }

private:
    struct Entry {
        std::string name;
        DenseTensor value;
        ParamGroup group;
    };
    std::vector<Entry> entries_;
    std::unordered_set<std::string> names_;
};

// He-style fan-in scaled uniform init: entries uniform on +-sqrt(6/fan_in).
inline DenseTensor he_uniform(std::size_t n1, std::size_t n2, std::size_t n3,
                              std::size_t fan_in, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    DenseTensor t(n1, n2, n3);
    for (auto& v : t.values()) v = rng.uniform(-bound, bound);
    return t;
}

// Fixed input noise: i.i.d. uniform on [0, 0.1], deterministic per seed.
inline DenseTensor init_noise(std::size_t n1, std::size_t n2, std::size_t n3,
                              std::uint64_t seed) {
    Rng rng(seed);
    return random_uniform_tensor(n1, n2, n3, rng, 0.0, 0.1);
}

struct UNetConfig {
    std::size_t depth = 2;          // encoder/decoder scales
    std::size_t base_channels = 32;
    std::size_t kernel = 3;         // odd
    std::size_t channels = 0;       // in == out channels (latent depth)
    double slope = 0.01;
};

struct FcnConfig {
    std::size_t layers = 2;             // K
    std::vector<std::size_t> widths;    // K-1 hidden widths; empty -> default
    std::size_t in_width = 0;
    std::size_t out_width = 0;
    double slope = 0.01;
};

struct FaceWiseFactorConfig {
    std::vector<std::size_t> ranks;  // r_0 = n2, ..., r_L = n1
    std::size_t n3 = 0;
    double slope = 0.01;
};

namespace detail {

struct ConvLayer {
    int w = -1, b = -1;
    int stride = 1, pad = 0;
};

}  // namespace detail

// Latent generator: L stride-2 conv scales down, nearest-neighbor upsampling
// with encoder skip concatenation back up, 1x1 projection to the latent
// depth. Channels double per scale from base_channels. Preserves shape.
class UNetGenerator {
public:
    UNetGenerator() = default;

    UNetGenerator(const UNetConfig& cfg, ParameterStore& store, Rng& rng,
                  const std::string& prefix = "g")
        : cfg_(cfg) {
        if (cfg.depth < 1 || cfg.channels < 1 || cfg.kernel % 2 == 0)
            throw DimError("UNetConfig: depth/channels >= 1, kernel odd");
        const std::size_t k = cfg.kernel;
        const int pad = static_cast<int>(k - 1) / 2;
        auto ch = [&](std::size_t s) {
            return s == 0 ? cfg.channels : cfg.base_channels << (s - 1);
        };
        for (std::size_t s = 1; s <= cfg.depth; ++s)
            enc_.push_back(conv_param(store, rng, prefix + ".enc" + std::to_string(s),
                                      k, ch(s - 1), ch(s), 2, pad));
        for (std::size_t s = cfg.depth; s >= 1; --s) {
            const std::size_t in_ch = ch(s) + (s == 1 ? cfg.channels : ch(s - 1));
            const std::size_t out_ch = s == 1 ? cfg.base_channels : ch(s - 1);
            dec_.push_back(conv_param(store, rng, prefix + ".dec" + std::to_string(s),
                                      k, in_ch, out_ch, 1, pad));
        }
        out_ = conv_param(store, rng, prefix + ".out", 1, cfg.base_channels,
                          cfg.channels, 1, 0);
    }

    // Input spatial dims must be divisible by 2^depth; the recovery driver
    // pads beforehand.
    Node forward(Tape& tape, const std::vector<Node>& params, Node in) const {
        const DenseTensor& x = tape.value(in);
        const std::size_t scale = std::size_t{1} << cfg_.depth;
        if (x.n1() % scale != 0 || x.n2() % scale != 0)
            throw DimError("UNetGenerator: spatial dims " + x.dims_str() +
                           " not divisible by 2^" + std::to_string(cfg_.depth));
        if (x.n3() != cfg_.channels)
            throw DimError("UNetGenerator: expected " +
                           std::to_string(cfg_.channels) + " channels");
        std::vector<Node> skips{in};
        Node h = in;
        for (const auto& l : enc_) {
            h = tape.leaky_relu(
                tape.conv2d(h, params[l.w], params[l.b], l.stride, l.pad),
                cfg_.slope);
            skips.push_back(h);
        }
        Node d = h;
        for (std::size_t i = 0; i < dec_.size(); ++i) {
            const std::size_t s = cfg_.depth - i;
            d = tape.upsample_nearest2(d);
            d = tape.channel_concat(d, skips[s - 1]);
            d = tape.leaky_relu(
                tape.conv2d(d, params[dec_[i].w], params[dec_[i].b], 1,
                            dec_[i].pad),
                cfg_.slope);
        }
        return tape.conv2d(d, params[out_.w], params[out_.b], 1, 0);
    }

    // Closed-form audit of the trainable scalar count.
    std::size_t expected_parameters() const {
        auto ch = [&](std::size_t s) {
            return s == 0 ? cfg_.channels : cfg_.base_channels << (s - 1);
        };
        const std::size_t kk = cfg_.kernel * cfg_.kernel;
        std::size_t n = 0;
        for (std::size_t s = 1; s <= cfg_.depth; ++s)
            n += kk * ch(s - 1) * ch(s) + ch(s);
        for (std::size_t s = cfg_.depth; s >= 1; --s) {
            const std::size_t in_ch = ch(s) + (s == 1 ? cfg_.channels : ch(s - 1));
            const std::size_t out_ch = s == 1 ? cfg_.base_channels : ch(s - 1);
            n += kk * in_ch * out_ch + out_ch;
        }
        n += cfg_.base_channels * cfg_.channels + cfg_.channels;
        return n;
    }

private:
    UNetConfig cfg_;
    std::vector<detail::ConvLayer> enc_, dec_;
    detail::ConvLayer out_;

    static detail::ConvLayer conv_param(ParameterStore& store, Rng& rng,
                                        const std::string& name, std::size_t k,
                                        std::size_t in_ch, std::size_t out_ch,
                                        int stride, int pad) {
        detail::ConvLayer l;
        l.w = store.add(name + ".w",
                        he_uniform(k * k, in_ch, out_ch, k * k * in_ch, rng),
                        ParamGroup::generator);
        l.b = store.add(name + ".b", DenseTensor(1, 1, out_ch),
                        ParamGroup::generator);
        l.stride = stride;
        l.pad = pad;
        return l;
    }
};

// Tube transform: the same small fully connected network applied to every
// mode-3 fiber. K = 1 degenerates to a single linear map.
class FcnTransform {
public:
    FcnTransform() = default;

    FcnTransform(const FcnConfig& cfg, ParameterStore& store, Rng& rng,
                 const std::string& prefix = "f")
        : slope_(cfg.slope) {
        if (cfg.layers < 1 || cfg.in_width < 1 || cfg.out_width < 1)
            throw DimError("FcnConfig: layers/in/out must be >= 1");
        std::vector<std::size_t> widths = cfg.widths;
        if (widths.empty() && cfg.layers > 1)
            widths.assign(cfg.layers - 1, std::max(cfg.in_width, cfg.out_width));
        if (widths.size() != cfg.layers - 1)
            throw DimError("FcnConfig: need layers-1 hidden widths");
        std::size_t in = cfg.in_width;
        for (std::size_t i = 0; i < cfg.layers; ++i) {
            const std::size_t out = i + 1 < cfg.layers ? widths[i] : cfg.out_width;
            const std::string name = prefix + ".l" + std::to_string(i + 1);
            Layer l;
            l.w = store.add(name + ".w", he_uniform(out, in, 1, in, rng),
                            ParamGroup::transform);
            l.b = store.add(name + ".b", DenseTensor(1, 1, out),
                            ParamGroup::transform);
            layers_.push_back(l);
            in = out;
        }
    }

    Node forward(Tape& tape, const std::vector<Node>& params, Node in) const {
        Node h = in;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            h = tape.mode3_linear(h, params[layers_[i].w], params[layers_[i].b]);
            if (i + 1 < layers_.size()) h = tape.leaky_relu(h, slope_);
        }
        return h;
    }

private:
    struct Layer {
        int w = -1, b = -1;
    };
    std::vector<Layer> layers_;
    double slope_ = 0.01;
};

// Face-wise factor generator
//   W_L fw sigma( W_{L-1} fw ... W_3 fw sigma( W_2 fw W_1 fw Z ) ),
// with Z fixed to slice identities, so the innermost product is W_1 itself.
// No activation fires when L = 2. f = identity recovers per-slice deep
// matrix factorization; together with a transform it covers the remaining
// shallow degenerate forms.
class FacewiseGenerator {
public:
    FacewiseGenerator() = default;

    FacewiseGenerator(const FaceWiseFactorConfig& cfg, ParameterStore& store,
                      Rng& rng, const std::string& prefix = "g")
        : slope_(cfg.slope) {
        if (cfg.ranks.size() < 2 || cfg.n3 < 1)
            throw DimError("FaceWiseFactorConfig: need ranks r_0..r_L and n3");
        for (std::size_t r : cfg.ranks)
            if (r < 1) throw DimError("FaceWiseFactorConfig: ranks must be >= 1");
        const std::size_t layers = cfg.ranks.size() - 1;
        for (std::size_t m = 1; m <= layers; ++m)
            w_.push_back(store.add(
                prefix + ".w" + std::to_string(m),
                he_uniform(cfg.ranks[m], cfg.ranks[m - 1], cfg.n3,
                           cfg.ranks[m - 1], rng),
                ParamGroup::generator));
    }

    Node forward(Tape& tape, const std::vector<Node>& params, Node /*z*/) const {
        Node t = params[w_[0]];
        if (w_.size() >= 2) t = tape.facewise_matmul(params[w_[1]], t);
        for (std::size_t m = 2; m < w_.size(); ++m) {
            t = tape.leaky_relu(t, slope_);
            t = tape.facewise_matmul(params[w_[m]], t);
        }
        return t;
    }

    const std::vector<int>& factor_indices() const { return w_; }

private:
    std::vector<int> w_;
    double slope_ = 0.01;
};

// Transform-domain factor pair (A, B) with complex entries, stored as
// re/im tensor pairs so the real-valued tape can train them. The generator
// emits channel_concat(Re(A fw B), Im(A fw B)); composing with
// InverseDftTransform yields exactly the classic low-tubal-rank
// factorization idft(A fw B).
class FourierFactorGenerator {
public:
    FourierFactorGenerator() = default;

    // Initialized as the mode-3 DFT of seeded spatial factors
    // G: n1 x r x n3, H: r x n2 x n3, so the initial forward equals
    // t_product(G, H).
    FourierFactorGenerator(std::size_t n1, std::size_t n2, std::size_t n3,
                           std::size_t r, ParameterStore& store, Rng& rng,
                           const std::string& prefix = "g") {
        if (r < 1 || r > std::min(n1, n2))
            throw DimError("FourierFactorGenerator: rank must be in [1, min(n1,n2)]");
        const std::size_t fan = r * n3;
        spatial_a_ = he_uniform(n1, r, n3, fan, rng);
        spatial_b_ = he_uniform(r, n2, n3, fan, rng);
        const ComplexTensor fa = dft_mode3(spatial_a_);
        const ComplexTensor fb = dft_mode3(spatial_b_);
        a_re_ = store.add(prefix + ".A.re", real_part(fa), ParamGroup::generator);
        a_im_ = store.add(prefix + ".A.im", imag_part(fa), ParamGroup::generator);
        b_re_ = store.add(prefix + ".B.re", real_part(fb), ParamGroup::generator);
        b_im_ = store.add(prefix + ".B.im", imag_part(fb), ParamGroup::generator);
    }

    Node forward(Tape& tape, const std::vector<Node>& params, Node /*z*/) const {
        Node ar = params[a_re_], ai = params[a_im_];
        Node br = params[b_re_], bi = params[b_im_];
        Node re = tape.sub(tape.facewise_matmul(ar, br),
                           tape.facewise_matmul(ai, bi));
        Node im = tape.add(tape.facewise_matmul(ar, bi),
                           tape.facewise_matmul(ai, br));
        return tape.channel_concat(re, im);
    }

    const DenseTensor& spatial_a() const { return spatial_a_; }
    const DenseTensor& spatial_b() const { return spatial_b_; }

private:
    int a_re_ = -1, a_im_ = -1, b_re_ = -1, b_im_ = -1;
    DenseTensor spatial_a_, spatial_b_;

    static DenseTensor imag_part(const ComplexTensor& c) {
        DenseTensor out(c.n1(), c.n2(), c.n3());
        for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].imag();
        return out;
    }
};

// Real part of the mode-3 inverse DFT, as one fixed per-tube linear map over
// a (re, im) channel stack of width 2*n3.
class InverseDftTransform {
public:
    InverseDftTransform() = default;
    explicit InverseDftTransform(std::size_t n3) : n3_(n3) {}

    Node forward(Tape& tape, const std::vector<Node>&, Node in) const {
        const Matrix<cplx> f = idft_matrix(n3_);
        DenseTensor w(n3_, 2 * n3_, 1);
        for (std::size_t j = 0; j < n3_; ++j)
            for (std::size_t k = 0; k < n3_; ++k) {
                w(j, k, 0) = f(j, k).real();
                w(j, n3_ + k, 0) = -f(j, k).imag();
            }
        Node wn = tape.leaf(std::move(w), false);
        return tape.mode3_linear(in, wn);
    }

private:
    std::size_t n3_ = 0;
};

// A differentiable map: (tape, parameter leaves, input) -> output node.
using Forward = std::function<Node(Tape&, const std::vector<Node>&, Node)>;

inline Forward identity_transform() {
    return [](Tape&, const std::vector<Node>&, Node in) { return in; };
}

// X = f(g(Z)) on one tape; gradients flow into both parameter groups.
inline Node dtr_forward(Tape& tape, const std::vector<Node>& params, Node z,
                        const Forward& g, const Forward& f) {
    return f(tape, params, g(tape, params, z));
}

}  // namespace ttc
