#include "helpers.hpp"
#include "ttc/autodiff.hpp"
#include "ttc/gradcheck.hpp"

#include <doctest.h>

using namespace ttc;
using namespace ttc::testing;

TEST_CASE("forward primitives match their definitions") {
    Tape t;

    SUBCASE("leaky_relu") {
        Node x = t.leaf(DenseTensor(1, 1, 2, {-1.0, 2.0}));
        const DenseTensor& y = t.value(t.leaky_relu(x, 0.01));
        CHECK(y[0] == doctest::Approx(-0.01));
        CHECK(y[1] == doctest::Approx(2.0));
    }

    SUBCASE("sigmoid(0) = 0.5") {
        Node x = t.leaf(DenseTensor(1, 1, 1, 0.0));
        CHECK(t.value(t.sigmoid(x))[0] == doctest::Approx(0.5));
    }

    SUBCASE("conv2d with a 1x1 identity kernel is a no-op") {
        DenseTensor in = rand_tensor(5, 4, 1, 3);
        Node x = t.leaf(in);
        DenseTensor k(1, 1, 1, 1.0);
        Node out = t.conv2d(x, t.leaf(k), Node{}, 1, 0);
        CHECK(bitwise_equal(t.value(out), in));
    }

    SUBCASE("shape mismatch is rejected at record time") {
        Node a = t.leaf(DenseTensor(2, 2, 2));
        Node b = t.leaf(DenseTensor(2, 2, 3));
        CHECK_THROWS_AS(t.add(a, b), DimError);
        CHECK_THROWS_AS(t.hadamard(a, b), DimError);
        CHECK_THROWS_AS(t.facewise_matmul(a, b), DimError);
    }
}

TEST_CASE("backward computes exact closed forms") {
    SUBCASE("grad of sum of squares is 2x") {
        Tape t;
        DenseTensor xv = rand_tensor(3, 4, 2, 77);
        Node x = t.leaf(xv, true);
        t.backward(t.reduce_sum_squares(x));
        const DenseTensor& g = t.grad(x);
        for (std::size_t i = 0; i < xv.size(); ++i)
            CHECK(g[i] == 2.0 * xv[i]);
    }

    SUBCASE("non-scalar loss is rejected") {
        Tape t;
        Node x = t.leaf(DenseTensor(2, 2, 2), true);
        CHECK_THROWS_AS(t.backward(t.scalar_mul(2.0, x)), DimError);
    }

    SUBCASE("a leaf not reachable from the loss gets a zero gradient") {
        Tape t;
        Node x = t.leaf(rand_tensor(2, 2, 2, 5), true);
        Node unused = t.leaf(rand_tensor(3, 3, 1, 6), true);
        t.backward(t.reduce_sum_squares(x));
        const DenseTensor& g = t.grad(unused);
        REQUIRE(g.same_dims(t.value(unused)));
        for (double v : g.values()) CHECK(v == 0.0);
    }

    SUBCASE("composite graph matches finite differences") {
        Rng rng(12);
        DenseTensor w(4, 4, 2), z(4, 4, 2);
        for (auto& v : w.values()) {
            const double m = rng.uniform(0.05, 1.0);
            v = rng.uniform() < 0.5 ? -m : m;
        }
        for (auto& v : z.values()) {
            const double m = rng.uniform(0.05, 1.0);
            v = rng.uniform() < 0.5 ? -m : m;
        }
        auto report = grad_check(
            [](Tape& t, const std::vector<Node>& l) {
                return t.reduce_sum_squares(
                    t.leaky_relu(t.hadamard(l[0], l[1]), 0.01));
            },
            {w, z}, {"w", "z"}, 1e-5, 1e-4);
        CHECK(report.passed);
    }
}

TEST_CASE("grad_check harness") {
    SUBCASE("conv2d 3x3 stride 1 pad 1 on 6x6x2 passes") {
        Rng rng(9);
        auto u = [&](std::size_t a, std::size_t b, std::size_t c) {
            DenseTensor t(a, b, c);
            for (auto& v : t.values()) v = rng.uniform(-1.0, 1.0);
            return t;
        };
        auto report = grad_check(
            [](Tape& t, const std::vector<Node>& l) {
                return t.reduce_sum_squares(t.conv2d(l[0], l[1], l[2], 1, 1));
            },
            {u(6, 6, 2), u(9, 2, 2), u(1, 1, 2)}, {"x", "k", "b"}, 1e-5, 1e-4);
        CHECK(report.passed);
        CHECK(report.entries.size() == 3);
    }

    SUBCASE("mode3_linear on 4x4x3 passes") {
        Rng rng(10);
        auto u = [&](std::size_t a, std::size_t b, std::size_t c) {
            DenseTensor t(a, b, c);
            for (auto& v : t.values()) v = rng.uniform(-1.0, 1.0);
            return t;
        };
        auto report = grad_check(
            [](Tape& t, const std::vector<Node>& l) {
                return t.reduce_sum_squares(t.mode3_linear(l[0], l[1], l[2]));
            },
            {u(4, 4, 3), u(3, 3, 1), u(1, 1, 3)}, {"x", "w", "b"}, 1e-5, 1e-4);
        CHECK(report.passed);
    }

    SUBCASE("constant graph yields an empty passing report") {
        auto report = grad_check(
            [](Tape& t, const std::vector<Node>&) {
                return t.reduce_sum_squares(t.leaf(DenseTensor(2, 2, 2, 1.0)));
            },
            {}, {}, 1e-5, 1e-4);
        CHECK(report.passed);
        CHECK(report.entries.empty());
    }

    SUBCASE("h must be positive") {
        CHECK_THROWS_AS(grad_check([](Tape& t, const std::vector<Node>&) {
                            return t.reduce_sum_squares(
                                t.leaf(DenseTensor(1, 1, 1)));
                        },
                        {}, {}, 0.0, 1e-4),
                        DimError);
    }
}

TEST_CASE("masked squared error") {
    SUBCASE("x == o gives zero loss") {
        Tape t;
        DenseTensor o = rand_tensor(3, 3, 2, 1);
        MaskTensor m(3, 3, 2, 1.0);
        Node x = t.leaf(o, true);
        CHECK(t.value(t.masked_sq_error(x, o, m))[0] == 0.0);
    }

    SUBCASE("all-zero mask gives zero loss and zero gradient") {
        Tape t;
        Node x = t.leaf(rand_tensor(3, 3, 2, 2), true);
        Node loss = t.masked_sq_error(x, rand_tensor(3, 3, 2, 3),
                                      MaskTensor(3, 3, 2));
        CHECK(t.value(loss)[0] == 0.0);
        t.backward(loss);
        for (double v : t.grad(x).values()) CHECK(v == 0.0);
    }

    SUBCASE("one observed entry differing by d gives d^2 and gradient 2d") {
        Tape t;
        const double d = 0.37;
        DenseTensor o(4, 4, 2);
        DenseTensor xv = o;
        xv(1, 2, 1) += d;
        MaskTensor m(4, 4, 2);
        m(1, 2, 1) = 1.0;
        Node x = t.leaf(xv, true);
        Node loss = t.masked_sq_error(x, o, m);
        CHECK(t.value(loss)[0] == doctest::Approx(d * d));
        t.backward(loss);
        const DenseTensor& g = t.grad(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (i == g.offset(1, 2, 1))
                CHECK(g[i] == doctest::Approx(2.0 * d));
            else
                CHECK(g[i] == 0.0);
        }
    }

    SUBCASE("gradient is exactly zero wherever the mask is zero") {
        Tape t;
        Rng rng(8);
        MaskTensor m(5, 5, 3);
        for (auto& v : m.values()) v = rng.uniform() < 0.4 ? 1.0 : 0.0;
        Node x = t.leaf(rand_tensor(5, 5, 3, 30), true);
        Node loss = t.masked_sq_error(x, rand_tensor(5, 5, 3, 31), m);
        t.backward(loss);
        const DenseTensor& g = t.grad(x);
        for (std::size_t i = 0; i < m.size(); ++i)
            if (m[i] == 0.0) CHECK(g[i] == 0.0);
    }
}

TEST_CASE("backward linearity and determinism") {
    DenseTensor xv = rand_tensor(4, 3, 3, 41);
    DenseTensor yv = rand_tensor(4, 3, 3, 42);

    SUBCASE("power-of-two combinations are bitwise linear") {
        // a * L1 + b * L2 with a, b powers of two scales exponents only.
        const double a = 2.0, b = 0.5;
        Tape t1;
        Node x1 = t1.leaf(xv, true);
        t1.backward(t1.reduce_sum_squares(t1.hadamard(x1, t1.leaf(yv))));
        DenseTensor g1 = t1.grad(x1);

        Tape t2;
        Node x2 = t2.leaf(xv, true);
        t2.backward(t2.reduce_sum_squares(x2));
        DenseTensor g2 = t2.grad(x2);

        Tape t3;
        Node x3 = t3.leaf(xv, true);
        Node l1 = t3.reduce_sum_squares(t3.hadamard(x3, t3.leaf(yv)));
        Node l2 = t3.reduce_sum_squares(x3);
        t3.backward(t3.add(t3.scalar_mul(a, l1), t3.scalar_mul(b, l2)));
        const DenseTensor& g3 = t3.grad(x3);

        for (std::size_t i = 0; i < g3.size(); ++i)
            CHECK(g3[i] == a * g1[i] + b * g2[i]);
    }

    SUBCASE("identical tape construction gives bitwise identical gradients") {
        auto run = [&]() {
            Tape t;
            Node x = t.leaf(xv, true);
            Node y = t.leaf(yv, true);
            Node h = t.leaky_relu(t.hadamard(x, y), 0.01);
            t.backward(t.reduce_sum_squares(h));
            return std::pair{t.grad(x), t.grad(y)};
        };
        auto [gx1, gy1] = run();
        auto [gx2, gy2] = run();
        CHECK(bitwise_equal(gx1, gx2));
        CHECK(bitwise_equal(gy1, gy2));
    }
}

TEST_CASE("standard gradient battery passes at h=1e-5, tol=1e-4") {
    for (const auto& c : standard_gradient_battery()) {
        auto report = grad_check(c.builder, c.leaves, c.leaf_names, 1e-5, 1e-4);
        INFO(c.name, " worst rel err ", report.worst);
        CHECK(report.passed);
    }
}
