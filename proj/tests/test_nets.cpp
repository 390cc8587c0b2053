#include "helpers.hpp"
#include "ttc/nets.hpp"

#include <doctest.h>

using namespace ttc;
using namespace ttc::testing;

TEST_CASE("init_noise") {
    DenseTensor a = init_noise(8, 8, 4, 7);
    DenseTensor b = init_noise(8, 8, 4, 7);
    CHECK(bitwise_equal(a, b));
    for (double v : a.values()) {
        CHECK(v >= 0.0);
        CHECK(v <= 0.1);
    }
    DenseTensor c = init_noise(8, 8, 4, 8);
    std::size_t differing = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != c[i]) ++differing;
    CHECK(differing >= a.size() * 99 / 100);
}

TEST_CASE("parameter store rejects duplicate names") {
    ParameterStore store;
    store.add("w", DenseTensor(1, 1, 1), ParamGroup::generator);
    CHECK_THROWS_AS(store.add("w", DenseTensor(1, 1, 1), ParamGroup::transform),
                    DimError);
}

TEST_CASE("unet generator") {
    SUBCASE("output shape equals input shape") {
        ParameterStore store;
        Rng rng(1);
        UNetConfig cfg;
        cfg.depth = 2;
        cfg.base_channels = 8;
        cfg.channels = 8;
        UNetGenerator unet(cfg, store, rng);
        Tape t;
        auto params = store.make_leaves(t);
        Node z = t.leaf(init_noise(64, 64, 8, 3));
        const DenseTensor& out = t.value(unet.forward(t, params, z));
        CHECK(out.n1() == 64);
        CHECK(out.n2() == 64);
        CHECK(out.n3() == 8);
    }

    SUBCASE("all-zero parameters give an all-zero output") {
        ParameterStore store;
        Rng rng(2);
        UNetConfig cfg;
        cfg.depth = 2;
        cfg.base_channels = 4;
        cfg.channels = 3;
        UNetGenerator unet(cfg, store, rng);
        for (std::size_t i = 0; i < store.count(); ++i)
            for (double& v : store.value(i).values()) v = 0.0;
        Tape t;
        auto params = store.make_leaves(t);
        Node z = t.leaf(init_noise(16, 16, 3, 4));
        for (double v : t.value(unet.forward(t, params, z)).values())
            CHECK(v == 0.0);
    }

    SUBCASE("parameter count matches the closed-form layer audit") {
        ParameterStore store;
        Rng rng(3);
        UNetConfig cfg;
        cfg.depth = 2;
        cfg.base_channels = 32;
        cfg.kernel = 3;
        cfg.channels = 80;
        UNetGenerator unet(cfg, store, rng);
        // enc1 9*80*32+32, enc2 9*32*64+64, dec2 9*96*32+32, dec1 9*112*32+32,
        // out 32*80+80
        const std::size_t expected = 23072 + 18496 + 27680 + 32288 + 2640;
        CHECK(unet.expected_parameters() == expected);
        CHECK(store.total_parameters() == expected);
    }

    SUBCASE("indivisible spatial dims are rejected") {
        ParameterStore store;
        Rng rng(4);
        UNetConfig cfg;
        cfg.depth = 2;
        cfg.base_channels = 4;
        cfg.channels = 2;
        UNetGenerator unet(cfg, store, rng);
        Tape t;
        auto params = store.make_leaves(t);
        Node z = t.leaf(DenseTensor(10, 12, 2));
        CHECK_THROWS_AS(unet.forward(t, params, z), DimError);
    }
}

TEST_CASE("fcn transform") {
    SUBCASE("K=1 with identity weight and zero bias is the identity map") {
        ParameterStore store;
        Rng rng(5);
        FcnConfig cfg;
        cfg.layers = 1;
        cfg.in_width = 3;
        cfg.out_width = 3;
        FcnTransform fcn(cfg, store, rng);
        DenseTensor& w = store.value(0);
        for (double& v : w.values()) v = 0.0;
        for (std::size_t i = 0; i < 3; ++i) w(i, i, 0) = 1.0;
        for (double& v : store.value(1).values()) v = 0.0;
        Tape t;
        auto params = store.make_leaves(t);
        DenseTensor in = rand_tensor(4, 5, 3, 17);
        CHECK(bitwise_equal(t.value(fcn.forward(t, params, t.leaf(in))), in));
    }

    SUBCASE("acts tube-by-tube: permuting spatial positions commutes") {
        ParameterStore store;
        Rng rng(6);
        FcnConfig cfg;
        cfg.layers = 2;
        cfg.in_width = 3;
        cfg.out_width = 2;
        FcnTransform fcn(cfg, store, rng);
        DenseTensor in = rand_tensor(3, 3, 3, 18);
        DenseTensor perm(3, 3, 3);
        // reverse the spatial grid
        for (std::size_t k = 0; k < 3; ++k)
            for (std::size_t j = 0; j < 3; ++j)
                for (std::size_t i = 0; i < 3; ++i)
                    perm(i, j, k) = in(2 - i, 2 - j, k);
        Tape t;
        auto params = store.make_leaves(t);
        const DenseTensor& a = t.value(fcn.forward(t, params, t.leaf(in)));
        const DenseTensor& b = t.value(fcn.forward(t, params, t.leaf(perm)));
        for (std::size_t k = 0; k < 2; ++k)
            for (std::size_t j = 0; j < 3; ++j)
                for (std::size_t i = 0; i < 3; ++i)
                    CHECK(a(i, j, k) == b(2 - i, 2 - j, k));
    }

    SUBCASE("K=2 matches the per-tube two-matrix computation") {
        ParameterStore store;
        Rng rng(7);
        FcnConfig cfg;
        cfg.layers = 2;
        cfg.in_width = 3;
        cfg.out_width = 3;
        FcnTransform fcn(cfg, store, rng);
        DenseTensor in = rand_tensor(2, 2, 3, 19);
        Tape t;
        auto params = store.make_leaves(t);
        const DenseTensor& out = t.value(fcn.forward(t, params, t.leaf(in)));

        const DenseTensor& w1 = store.value(0);
        const DenseTensor& b1 = store.value(1);
        const DenseTensor& w2 = store.value(2);
        const DenseTensor& b2 = store.value(3);
        const std::size_t hidden = w1.n1();
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t i = 0; i < 2; ++i) {
                std::vector<double> h(hidden);
                for (std::size_t o = 0; o < hidden; ++o) {
                    double acc = b1[o];
                    for (std::size_t q = 0; q < 3; ++q)
                        acc += w1(o, q, 0) * in(i, j, q);
                    h[o] = acc > 0.0 ? acc : 0.01 * acc;
                }
                for (std::size_t o = 0; o < 3; ++o) {
                    double acc = b2[o];
                    for (std::size_t q = 0; q < hidden; ++q)
                        acc += w2(o, q, 0) * h[q];
                    CHECK(out(i, j, o) == doctest::Approx(acc).epsilon(1e-12));
                }
            }
    }
}

TEST_CASE("facewise generator") {
    SUBCASE("L=2 is the per-slice product of the two factors") {
        ParameterStore store;
        Rng rng(8);
        FaceWiseFactorConfig cfg;
        cfg.ranks = {4, 2, 3};  // n2=4, r=2, n1=3
        cfg.n3 = 3;
        FacewiseGenerator gen(cfg, store, rng);
        Tape t;
        auto params = store.make_leaves(t);
        const DenseTensor& out =
            t.value(gen.forward(t, params, t.leaf(slice_identity(4, 3))));
        DenseTensor oracle = facewise_product(store.value(1), store.value(0));
        CHECK(max_abs_diff(out, oracle) == 0.0);
        CHECK(out.n1() == 3);
        CHECK(out.n2() == 4);
    }

    SUBCASE("all-zero factors give a zero tensor") {
        ParameterStore store;
        Rng rng(9);
        FaceWiseFactorConfig cfg;
        cfg.ranks = {3, 2, 3};
        cfg.n3 = 2;
        FacewiseGenerator gen(cfg, store, rng);
        for (std::size_t i = 0; i < store.count(); ++i)
            for (double& v : store.value(i).values()) v = 0.0;
        Tape t;
        auto params = store.make_leaves(t);
        for (double v :
             t.value(gen.forward(t, params, t.leaf(slice_identity(3, 2))))
                 .values())
            CHECK(v == 0.0);
    }

    SUBCASE("L=3 with identity activation is the triple product") {
        ParameterStore store;
        Rng rng(10);
        FaceWiseFactorConfig cfg;
        cfg.ranks = {4, 3, 2, 5};
        cfg.n3 = 3;
        cfg.slope = 1.0;  // leaky slope 1 is the identity
        FacewiseGenerator gen(cfg, store, rng);
        Tape t;
        auto params = store.make_leaves(t);
        const DenseTensor& out =
            t.value(gen.forward(t, params, t.leaf(slice_identity(4, 3))));
        DenseTensor oracle = facewise_product(
            store.value(2), facewise_product(store.value(1), store.value(0)));
        CHECK(max_abs_diff(out, oracle) <= 1e-13);
    }

    SUBCASE("output slice k depends only on the factor slices k") {
        ParameterStore store;
        Rng rng(11);
        FaceWiseFactorConfig cfg;
        cfg.ranks = {4, 2, 4};
        cfg.n3 = 4;
        FacewiseGenerator gen(cfg, store, rng);
        auto forward = [&]() {
            Tape t;
            auto params = store.make_leaves(t);
            return t.value(gen.forward(t, params, t.leaf(slice_identity(4, 4))));
        };
        DenseTensor base = forward();
        store.value(0)(1, 1, 2) += 0.5;  // perturb slice 2 of W1
        DenseTensor bumped = forward();
        for (std::size_t k = 0; k < 4; ++k)
            for (std::size_t j = 0; j < 4; ++j)
                for (std::size_t i = 0; i < 4; ++i) {
                    if (k == 2) continue;
                    CHECK(bumped(i, j, k) == base(i, j, k));
                }
    }
}

TEST_CASE("fourier factor generator reproduces the t-product") {
    ParameterStore store;
    Rng rng(12);
    FourierFactorGenerator gen(8, 8, 4, 3, store, rng);
    InverseDftTransform idft(4);
    Tape t;
    auto params = store.make_leaves(t);
    Node z = t.leaf(slice_identity(8, 4));
    Forward g = [&gen](Tape& tp, const std::vector<Node>& p, Node in) {
        return gen.forward(tp, p, in);
    };
    Forward f = [&idft](Tape& tp, const std::vector<Node>& p, Node in) {
        return idft.forward(tp, p, in);
    };
    const DenseTensor& out = t.value(dtr_forward(t, params, z, g, f));
    DenseTensor oracle = t_product(gen.spatial_a(), gen.spatial_b());
    CHECK(relative_error(out, oracle) <= 1e-10);
}

TEST_CASE("dtr composition") {
    SUBCASE("f = identity returns g(z)") {
        ParameterStore store;
        Rng rng(13);
        FaceWiseFactorConfig cfg;
        cfg.ranks = {5, 2, 4};
        cfg.n3 = 3;
        FacewiseGenerator gen(cfg, store, rng);
        Tape t;
        auto params = store.make_leaves(t);
        Node z = t.leaf(slice_identity(5, 3));
        Forward g = [&gen](Tape& tp, const std::vector<Node>& p, Node in) {
            return gen.forward(tp, p, in);
        };
        Node direct = gen.forward(t, params, z);
        Node composed = dtr_forward(t, params, z, g, identity_transform());
        CHECK(bitwise_equal(t.value(direct), t.value(composed)));
    }

    SUBCASE("identity g and identity f return z") {
        Tape t;
        DenseTensor zv = rand_tensor(4, 4, 3, 20);
        Node z = t.leaf(zv);
        Node out =
            dtr_forward(t, {}, z, identity_transform(), identity_transform());
        CHECK(bitwise_equal(t.value(out), zv));
    }

    SUBCASE("gradients reach both parameter groups") {
        ParameterStore store;
        Rng rng(14);
        FaceWiseFactorConfig gcfg;
        gcfg.ranks = {4, 2, 4};
        gcfg.n3 = 3;
        FacewiseGenerator gen(gcfg, store, rng);
        FcnConfig fcfg;
        fcfg.layers = 2;
        fcfg.in_width = 3;
        fcfg.out_width = 3;
        FcnTransform fcn(fcfg, store, rng);

        Tape t;
        auto params = store.make_leaves(t);
        Node z = t.leaf(slice_identity(4, 3));
        Forward g = [&gen](Tape& tp, const std::vector<Node>& p, Node in) {
            return gen.forward(tp, p, in);
        };
        Forward f = [&fcn](Tape& tp, const std::vector<Node>& p, Node in) {
            return fcn.forward(tp, p, in);
        };
        Node x = dtr_forward(t, params, z, g, f);
        t.backward(t.reduce_sum_squares(x));
        bool gen_hit = false, fcn_hit = false;
        for (std::size_t i = 0; i < store.count(); ++i) {
            double mag = 0.0;
            for (double v : t.grad(params[i]).values()) mag += std::abs(v);
            if (store.group(i) == ParamGroup::generator && mag > 0.0)
                gen_hit = true;
            if (store.group(i) == ParamGroup::transform && mag > 0.0)
                fcn_hit = true;
        }
        CHECK(gen_hit);
        CHECK(fcn_hit);
    }
}

TEST_CASE("shape contracts hold over random small configs") {
    Rng rng(15);
    for (int trial = 0; trial < 6; ++trial) {
        ParameterStore store;
        Rng prng(100 + trial);
        UNetConfig cfg;
        cfg.depth = 1 + rng.below(2);
        cfg.base_channels = 2 + rng.below(4);
        cfg.channels = 1 + rng.below(4);
        UNetGenerator unet(cfg, store, prng);
        const std::size_t mult = std::size_t{1} << cfg.depth;
        const std::size_t n1 = mult * (1 + rng.below(3));
        const std::size_t n2 = mult * (1 + rng.below(3));
        Tape t;
        auto params = store.make_leaves(t);
        Node z = t.leaf(rand_tensor(n1, n2, cfg.channels, 200 + trial));
        const DenseTensor& out = t.value(unet.forward(t, params, z));
        CHECK(out.n1() == n1);
        CHECK(out.n2() == n2);
        CHECK(out.n3() == cfg.channels);
    }
}

TEST_CASE("seeded construction is bitwise deterministic") {
    auto build = [&]() {
        ParameterStore store;
        Rng rng(77);
        UNetConfig cfg;
        cfg.depth = 1;
        cfg.base_channels = 4;
        cfg.channels = 2;
        UNetGenerator unet(cfg, store, rng);
        Tape t;
        auto params = store.make_leaves(t);
        Node z = t.leaf(init_noise(8, 8, 2, 78));
        return t.value(unet.forward(t, params, z));
    };
    CHECK(bitwise_equal(build(), build()));
}
