#pragma once

#include "ttc/algebra.hpp"
#include "ttc/metrics.hpp"
#include "ttc/nets.hpp"
#include "ttc/optim.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ttc {

enum class Variant { dtr, hlrtf_like, tubal_factorization, deep_facewise };

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::dtr: return "dtr";
        case Variant::hlrtf_like: return "hlrtf_like";
        case Variant::tubal_factorization: return "tubal_factorization";
        case Variant::deep_facewise: return "deep_facewise";
    }
    return "?";
}

inline std::optional<Variant> variant_from_name(const std::string& s) {
    if (s == "dtr") return Variant::dtr;
    if (s == "hlrtf_like") return Variant::hlrtf_like;
    if (s == "tubal_factorization") return Variant::tubal_factorization;
    if (s == "deep_facewise") return Variant::deep_facewise;
    return std::nullopt;
}

struct RecoveryConfig {
    Variant variant = Variant::dtr;
    long iterations = 2000;
    double lr = 0.001;
    std::uint64_t seed = 0;
    std::size_t n_hat3 = 0;  // latent depth; 0 means n3

    UNetConfig unet;                         // dtr
    FcnConfig fcn;                           // dtr, hlrtf_like
    std::vector<std::size_t> facewise_ranks; // interior ranks r_1..r_{L-1}
    std::size_t rank = 0;                    // tubal_factorization

    long log_every = 100;
};

struct RecoveryResult {
    DenseTensor recovered;
    std::vector<std::pair<long, double>> loss_trajectory;
    double wall_seconds = 0.0;
    std::optional<MetricsReport> metrics;
};

// One assembled model: fixed input z, trainable store, generator g and
// transform f, plus the crop window that undoes driver padding.
struct AssembledVariant {
    DenseTensor z;
    ParameterStore store;
    Forward g, f;
    std::size_t crop_off1 = 0, crop_off2 = 0;
    std::size_t out1 = 0, out2 = 0;
    bool needs_crop = false;

    Node forward(Tape& tape, const std::vector<Node>& params) const {
        Node zn = tape.leaf(z, false);
        Node x = dtr_forward(tape, params, zn, g, f);
        if (needs_crop) x = tape.crop2d(x, crop_off1, crop_off2, out1, out2);
        return x;
    }
};

namespace detail {

inline std::size_t next_multiple(std::size_t n, std::size_t m) {
    return ((n + m - 1) / m) * m;
}

// Symmetric zero padding of the spatial grid.
inline DenseTensor pad_spatial(const DenseTensor& t, std::size_t p1,
                               std::size_t p2, std::size_t lo1,
                               std::size_t lo2) {
    DenseTensor out(p1, p2, t.n3());
    for (std::size_t c = 0; c < t.n3(); ++c)
        for (std::size_t j = 0; j < t.n2(); ++j)
            for (std::size_t i = 0; i < t.n1(); ++i)
                out(lo1 + i, lo2 + j, c) = t(i, j, c);
    return out;
}

}  // namespace detail

// Build the (Z, g, f) triple for a variant over data of the given dims.
// Seeding covers both the input noise and the parameter init.
inline AssembledVariant assemble_variant(std::size_t n1, std::size_t n2,
                                         std::size_t n3,
                                         const RecoveryConfig& cfg) {
    AssembledVariant av;
    Rng rng(cfg.seed);
    const std::size_t nhat3 = cfg.n_hat3 == 0 ? n3 : cfg.n_hat3;

    switch (cfg.variant) {
        case Variant::dtr: {
            UNetConfig ucfg = cfg.unet;
            ucfg.channels = nhat3;
            FcnConfig fcfg = cfg.fcn;
            fcfg.in_width = nhat3;
            fcfg.out_width = n3;

            const std::size_t scale = std::size_t{1} << ucfg.depth;
            const std::size_t p1 = detail::next_multiple(n1, scale);
            const std::size_t p2 = detail::next_multiple(n2, scale);
            DenseTensor z = init_noise(n1, n2, nhat3, rng.raw());
            if (p1 != n1 || p2 != n2) {
                av.needs_crop = true;
                av.crop_off1 = (p1 - n1) / 2;
                av.crop_off2 = (p2 - n2) / 2;
                av.out1 = n1;
                av.out2 = n2;
                z = detail::pad_spatial(z, p1, p2, av.crop_off1, av.crop_off2);
            }
            av.z = std::move(z);
            UNetGenerator unet(ucfg, av.store, rng);
            FcnTransform fcn(fcfg, av.store, rng);
            av.g = [unet](Tape& t, const std::vector<Node>& p, Node in) {
                return unet.forward(t, p, in);
            };
            av.f = [fcn](Tape& t, const std::vector<Node>& p, Node in) {
                return fcn.forward(t, p, in);
            };
            break;
        }
        case Variant::hlrtf_like: {
            if (cfg.facewise_ranks.size() != 1)
                throw DimError("hlrtf_like needs exactly one interior rank");
            FaceWiseFactorConfig gcfg;
            gcfg.ranks = {n2, cfg.facewise_ranks[0], n1};
            gcfg.n3 = n3;
            FcnConfig fcfg = cfg.fcn;
            fcfg.in_width = n3;
            fcfg.out_width = n3;
            av.z = slice_identity(n2, n3);
            FacewiseGenerator gen(gcfg, av.store, rng);
            FcnTransform fcn(fcfg, av.store, rng);
            av.g = [gen](Tape& t, const std::vector<Node>& p, Node in) {
                return gen.forward(t, p, in);
            };
            av.f = [fcn](Tape& t, const std::vector<Node>& p, Node in) {
                return fcn.forward(t, p, in);
            };
            break;
        }
        case Variant::tubal_factorization: {
            if (cfg.rank < 1)
                throw DimError("tubal_factorization needs rank >= 1");
            av.z = slice_identity(n2, n3);
            FourierFactorGenerator gen(n1, n2, n3, cfg.rank, av.store, rng);
            InverseDftTransform idft(n3);
            av.g = [gen](Tape& t, const std::vector<Node>& p, Node in) {
                return gen.forward(t, p, in);
            };
            av.f = [idft](Tape& t, const std::vector<Node>& p, Node in) {
                return idft.forward(t, p, in);
            };
            break;
        }
        case Variant::deep_facewise: {
            if (cfg.facewise_ranks.empty())
                throw DimError("deep_facewise needs interior ranks");
            FaceWiseFactorConfig gcfg;
            gcfg.ranks.push_back(n2);
            for (std::size_t r : cfg.facewise_ranks) gcfg.ranks.push_back(r);
            gcfg.ranks.push_back(n1);
            gcfg.n3 = n3;
            av.z = slice_identity(n2, n3);
            FacewiseGenerator gen(gcfg, av.store, rng);
            av.g = [gen](Tape& t, const std::vector<Node>& p, Node in) {
                return gen.forward(t, p, in);
            };
            av.f = identity_transform();
            break;
        }
    }
    return av;
}

inline void require_binary_mask(const MaskTensor& m) {
    for (double v : m.values())
        if (v != 0.0 && v != 1.0)
            throw DimError("mask must be strictly binary (0.0 / 1.0)");
}

// Unsupervised completion: fits f(g(Z)) to the observed entries of o with
// Adam on the masked squared error, for a fixed iteration budget. No early
// stopping, no regularizer, Z stays frozen. Deterministic per seed.
inline RecoveryResult recover(const DenseTensor& o, const MaskTensor& m,
                              const RecoveryConfig& cfg,
                              const DenseTensor* ground_truth = nullptr) {
    if (!o.same_dims(m))
        throw DimError("recover: observation " + o.dims_str() + " vs mask " +
                       m.dims_str());
    require_binary_mask(m);
    if (cfg.iterations < 1) throw DimError("recover: iterations must be >= 1");

    const auto t0 = std::chrono::steady_clock::now();
    AssembledVariant av = assemble_variant(o.n1(), o.n2(), o.n3(), cfg);
    AdamConfig acfg;
    acfg.lr = cfg.lr;
    AdamOptimizer opt(av.store, acfg);

    RecoveryResult result;
    const long log_every = cfg.log_every > 0 ? cfg.log_every : cfg.iterations;
    std::vector<DenseTensor> grads(av.store.count());

    for (long it = 1; it <= cfg.iterations; ++it) {
        Tape tape;
        std::vector<Node> params = av.store.make_leaves(tape);
        Node x = av.forward(tape, params);
        Node loss = tape.masked_sq_error(x, o, m);
        const double loss_val = tape.value(loss)[0];
        if (!std::isfinite(loss_val))
            throw NumericError("recover: non-finite loss at iteration " +
                               std::to_string(it));
        tape.backward(loss);
        for (std::size_t i = 0; i < params.size(); ++i)
            grads[i] = tape.grad(params[i]);
        opt.step(av.store, grads);
        if (it == 1 || it % log_every == 0 || it == cfg.iterations)
            result.loss_trajectory.emplace_back(it, loss_val);
    }

    {
        Tape tape;
        std::vector<Node> params = av.store.make_leaves(tape);
        result.recovered = tape.value(av.forward(tape, params));
    }
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (ground_truth) result.metrics = evaluate_metrics(result.recovered, *ground_truth);
    return result;
}

}  // namespace ttc
