#pragma once

#include "ttc/autodiff.hpp"

#include <functional>
#include <string>
#include <vector>

namespace ttc {

// Builds a scalar loss from leaf nodes created out of the supplied values.
// Must be deterministic in the leaf values.
using GraphBuilder =
    std::function<Node(Tape&, const std::vector<Node>& leaves)>;

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    bool passed = true;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    bool passed = true;
    double worst = 0.0;
};

struct BatteryCase {
    std::string name;
    GraphBuilder builder;
    std::vector<DenseTensor> leaves;
    std::vector<std::string> leaf_names;
};

// Central-difference validation of reverse-mode gradients. For every entry
// of every leaf: |analytic - (L(x+h) - L(x-h)) / 2h| / max(1, |analytic|)
// must stay within tol.
inline GradCheckReport grad_check(const GraphBuilder& builder,
                                  const std::vector<DenseTensor>& leaves,
                                  const std::vector<std::string>& names,
                                  double h = 1e-5, double tol = 1e-4) {
    if (h <= 0.0) throw DimError("grad_check: h must be > 0");

    auto eval = [&](const std::vector<DenseTensor>& vals, Tape& tape,
                    std::vector<Node>& nodes) {
        nodes.clear();
        for (const DenseTensor& v : vals) nodes.push_back(tape.leaf(v, true));
        return builder(tape, nodes);
    };

    GradCheckReport report;

    Tape tape;
    std::vector<Node> nodes;
    Node loss = eval(leaves, tape, nodes);
    tape.backward(loss);
    std::vector<DenseTensor> analytic;
    for (Node n : nodes) analytic.push_back(tape.grad(n));

    std::vector<DenseTensor> work = leaves;
    for (std::size_t l = 0; l < leaves.size(); ++l) {
        GradCheckEntry entry;
        entry.name = l < names.size() ? names[l] : "leaf" + std::to_string(l);
        for (std::size_t i = 0; i < work[l].size(); ++i) {
            const double orig = work[l][i];
            work[l][i] = orig + h;
            Tape tp;
            std::vector<Node> nn;
            const double up = tp.value(eval(work, tp, nn))[0];
            work[l][i] = orig - h;
            tp.clear();
            const double dn = tp.value(eval(work, tp, nn))[0];
            work[l][i] = orig;
            const double fd = (up - dn) / (2.0 * h);
            const double a = analytic[l][i];
            const double rel = std::abs(a - fd) / std::max(1.0, std::abs(a));
            entry.max_rel_err = std::max(entry.max_rel_err, rel);
        }
        entry.passed = entry.max_rel_err <= tol;
        report.worst = std::max(report.worst, entry.max_rel_err);
        report.passed = report.passed && entry.passed;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

namespace detail {

// Uniform values bounded away from the leaky-relu kink so central
// differences stay valid.
inline DenseTensor signed_away_from_zero(std::size_t n1, std::size_t n2,
                                         std::size_t n3, Rng& rng) {
    DenseTensor t(n1, n2, n3);
    for (auto& v : t.values()) {
        const double mag = rng.uniform(0.05, 1.0);
        v = rng.uniform() < 0.5 ? -mag : mag;
    }
    return t;
}

inline DenseTensor uniform(std::size_t n1, std::size_t n2, std::size_t n3,
                           Rng& rng, double lo = -1.0, double hi = 1.0) {
    DenseTensor t(n1, n2, n3);
    for (auto& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

}  // namespace detail

// One randomized graph per differentiable primitive, shapes up to 8x8x4.
// Every case ends in a scalar loss so it can be pushed through grad_check.
inline std::vector<BatteryCase> standard_gradient_battery(
    std::uint64_t seed = 20240501) {
    using detail::signed_away_from_zero;
    using detail::uniform;
    Rng rng(seed);
    std::vector<BatteryCase> cases;

    cases.push_back(
        {"add_sub_scalar_mul",
         [](Tape& t, const std::vector<Node>& l) {
             return t.reduce_sum_squares(
                 t.sub(t.scalar_mul(2.0, l[0]), t.add(l[1], l[1])));
         },
         {uniform(5, 4, 3, rng), uniform(5, 4, 3, rng)},
         {"x", "y"}});

    cases.push_back({"hadamard",
                     [](Tape& t, const std::vector<Node>& l) {
                         return t.reduce_sum_squares(t.hadamard(l[0], l[1]));
                     },
                     {uniform(4, 4, 4, rng), uniform(4, 4, 4, rng)},
                     {"x", "y"}});

    cases.push_back({"leaky_relu",
                     [](Tape& t, const std::vector<Node>& l) {
                         return t.reduce_sum_squares(t.leaky_relu(l[0], 0.01));
                     },
                     {signed_away_from_zero(6, 5, 3, rng)},
                     {"x"}});

    cases.push_back({"sigmoid",
                     [](Tape& t, const std::vector<Node>& l) {
                         return t.reduce_sum_squares(t.sigmoid(l[0]));
                     },
                     {uniform(4, 6, 2, rng)},
                     {"x"}});

    cases.push_back({"conv2d_s1_p1",
                     [](Tape& t, const std::vector<Node>& l) {
                         return t.reduce_sum_squares(
                             t.conv2d(l[0], l[1], l[2], 1, 1));
                     },
                     {uniform(6, 6, 2, rng), uniform(9, 2, 3, rng),
                      uniform(1, 1, 3, rng)},
                     {"x", "kernel", "bias"}});

    cases.push_back({"conv2d_s2_p1",
                     [](Tape& t, const std::vector<Node>& l) {
                         return t.reduce_sum_squares(
                             t.conv2d(l[0], l[1], l[2], 2, 1));
                     },
                     {uniform(8, 8, 3, rng), uniform(9, 3, 2, rng),
                      uniform(1, 1, 2, rng)},
                     {"x", "kernel", "bias"}});

    cases.push_back({"conv2d_1x1",
                     [](Tape& t, const std::vector<Node>& l) {
                         return t.reduce_sum_squares(
                             t.conv2d(l[0], l[1], Node{}, 1, 0));
                     },
                     {uniform(5, 7, 4, rng), uniform(1, 4, 2, rng)},
                     {"x", "kernel"}});

    cases.push_back({"upsample_nearest2",
                     [](Tape& t, const std::vector<Node>& l) {
                         return t.reduce_sum_squares(t.upsample_nearest2(l[0]));
                     },
                     {uniform(4, 4, 2, rng)},
                     {"x"}});

    cases.push_back({"channel_concat",
                     [](Tape& t, const std::vector<Node>& l) {
                         return t.reduce_sum_squares(
                             t.channel_concat(l[0], l[1]));
                     },
                     {uniform(5, 5, 2, rng), uniform(5, 5, 3, rng)},
                     {"x", "y"}});

    cases.push_back({"mode3_linear",
                     [](Tape& t, const std::vector<Node>& l) {
                         return t.reduce_sum_squares(
                             t.mode3_linear(l[0], l[1], l[2]));
                     },
                     {uniform(4, 4, 3, rng), uniform(2, 3, 1, rng),
                      uniform(1, 1, 2, rng)},
                     {"x", "weight", "bias"}});

    cases.push_back({"facewise_matmul",
                     [](Tape& t, const std::vector<Node>& l) {
                         return t.reduce_sum_squares(
                             t.facewise_matmul(l[0], l[1]));
                     },
                     {uniform(4, 3, 4, rng), uniform(3, 5, 4, rng)},
                     {"x", "y"}});

    cases.push_back({"crop2d",
                     [](Tape& t, const std::vector<Node>& l) {
                         return t.reduce_sum_squares(t.crop2d(l[0], 1, 2, 4, 3));
                     },
                     {uniform(6, 6, 2, rng)},
                     {"x"}});

    {
        DenseTensor o = uniform(5, 5, 3, rng);
        MaskTensor m(5, 5, 3);
        for (auto& v : m.values()) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
        cases.push_back({"masked_sq_error",
                         [o, m](Tape& t, const std::vector<Node>& l) {
                             return t.masked_sq_error(l[0], o, m);
                         },
                         {uniform(5, 5, 3, rng)},
                         {"x"}});
    }

    {
        // Small encoder/decoder round trip touching the whole conv stack.
        DenseTensor o = uniform(8, 8, 2, rng);
        MaskTensor m(8, 8, 2);
        for (auto& v : m.values()) v = rng.uniform() < 0.7 ? 1.0 : 0.0;
        cases.push_back(
            {"conv_upsample_concat_chain",
             [o, m](Tape& t, const std::vector<Node>& l) {
                 Node h = t.leaky_relu(t.conv2d(l[0], l[1], l[2], 2, 1), 0.01);
                 h = t.upsample_nearest2(h);
                 h = t.channel_concat(h, l[0]);
                 h = t.conv2d(h, l[3], Node{}, 1, 0);
                 return t.masked_sq_error(h, o, m);
             },
             {uniform(8, 8, 2, rng), uniform(9, 2, 3, rng), uniform(1, 1, 3, rng),
              uniform(1, 5, 2, rng)},
             {"x", "enc_kernel", "enc_bias", "proj_kernel"}});
    }

    return cases;
}

}  // namespace ttc
