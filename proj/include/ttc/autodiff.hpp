#pragma once

#include "ttc/algebra.hpp"
#include "ttc/tensor.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <deque>
#include <memory>
#include <utility>

namespace ttc {

// Handle into a Tape.
struct Node {
    int idx = -1;
    bool valid() const { return idx >= 0; }
};

// Reverse-mode tape over dense order-3 tensors. Records a forward graph of
// the primitives below; backward() walks the tape once in strict reverse
// order and accumulates vector-Jacobian products into every grad-requiring
// leaf. Single-threaded per tape.
//
// Convolution kernels are carried as (k*k, c_in, c_out) tensors with the
// element for row offset u, column offset v at (u + v*k, ci, co). Biases are
// (1,1,c) tensors broadcast over the spatial grid.
class Tape {
public:
    Node leaf(DenseTensor value, bool requires_grad = false) {
        return push(Op::leaf, {}, std::move(value), requires_grad);
    }

    Node add(Node a, Node b) {
        const DenseTensor& x = value(a);
        const DenseTensor& y = value(b);
        return push(Op::add, {a, b}, ttc::add(x, y));
    }

    Node sub(Node a, Node b) {
        const DenseTensor& x = value(a);
        const DenseTensor& y = value(b);
        return push(Op::sub, {a, b}, ttc::sub(x, y));
    }

    Node scalar_mul(double c, Node a) {
        DenseTensor out = value(a);
        for (auto& v : out.values()) v *= c;
        Node n = push(Op::scalar_mul, {a}, std::move(out));
        node(n).scalar = c;
        return n;
    }

    Node hadamard(Node a, Node b) {
        return push(Op::hadamard, {a, b}, ttc::hadamard(value(a), value(b)));
    }

    Node leaky_relu(Node a, double slope = 0.01) {
        DenseTensor out = value(a);
        for (auto& v : out.values())
            if (v <= 0.0) v *= slope;
        Node n = push(Op::leaky_relu, {a}, std::move(out));
        node(n).scalar = slope;
        return n;
    }

    Node sigmoid(Node a) {
        DenseTensor out = value(a);
        for (auto& v : out.values()) v = 1.0 / (1.0 + std::exp(-v));
        return push(Op::sigmoid, {a}, std::move(out));
    }

    // x: n1 x n2 x c_in, kernel: (k*k, c_in, c_out), optional bias (1,1,c_out).
    // Zero padding p, stride s; output (n1+2p-k)/s+1 x (n2+2p-k)/s+1 x c_out.
    Node conv2d(Node x, Node kernel, Node bias, int stride, int pad) {
        const DenseTensor& in = value(x);
        const DenseTensor& w = value(kernel);
        const std::size_t c_in = in.n3();
        if (w.n2() != c_in)
            throw DimError("conv2d: kernel expects " + std::to_string(w.n2()) +
                           " input channels, got " + std::to_string(c_in));
        const int k = kernel_width(w);
        const std::size_t c_out = w.n3();
        if (bias.valid()) {
            const DenseTensor& b = value(bias);
            if (b.n1() != 1 || b.n2() != 1 || b.n3() != c_out)
                throw DimError("conv2d: bias must be 1x1x" + std::to_string(c_out));
        }
        if (stride < 1 || pad < 0) throw DimError("conv2d: bad stride/pad");
        const long in1 = static_cast<long>(in.n1());
        const long in2 = static_cast<long>(in.n2());
        const long out1 = (in1 + 2 * pad - k) / stride + 1;
        const long out2 = (in2 + 2 * pad - k) / stride + 1;
        if (in1 + 2 * pad < k || in2 + 2 * pad < k)
            throw DimError("conv2d: kernel larger than padded input");

        DenseTensor out(static_cast<std::size_t>(out1),
                        static_cast<std::size_t>(out2), c_out);
        conv_forward(in, w, bias.valid() ? &value(bias) : nullptr, out, k, stride,
                     pad);
        Node n = push(Op::conv2d, {x, kernel, bias}, std::move(out));
        node(n).i0 = k;
        node(n).i1 = stride;
        node(n).i2 = pad;
        return n;
    }

    Node upsample_nearest2(Node a) {
        const DenseTensor& in = value(a);
        DenseTensor out(in.n1() * 2, in.n2() * 2, in.n3());
        for (std::size_t c = 0; c < in.n3(); ++c)
            for (std::size_t j = 0; j < out.n2(); ++j)
                for (std::size_t i = 0; i < out.n1(); ++i)
                    out(i, j, c) = in(i / 2, j / 2, c);
        return push(Op::upsample_nearest2, {a}, std::move(out));
    }

    // Concatenate along mode 3.
    Node channel_concat(Node a, Node b) {
        const DenseTensor& x = value(a);
        const DenseTensor& y = value(b);
        if (x.n1() != y.n1() || x.n2() != y.n2())
            throw DimError("channel_concat: spatial dims " + x.dims_str() +
                           " vs " + y.dims_str());
        DenseTensor out(x.n1(), x.n2(), x.n3() + y.n3());
        std::memcpy(out.data(), x.data(), x.size() * sizeof(double));
        std::memcpy(out.data() + x.size(), y.data(), y.size() * sizeof(double));
        return push(Op::channel_concat, {a, b}, std::move(out));
    }

    // Per-tube linear map: out(i1,i2,o) = sum_i x(i1,i2,i) * w(o,i) + b(o).
    // Weight is a (c_out, c_in, 1) tensor, bias (1,1,c_out) or invalid.
    Node mode3_linear(Node x, Node weight, Node bias = Node{}) {
        const DenseTensor& in = value(x);
        const DenseTensor& w = value(weight);
        if (w.n3() != 1 || w.n2() != in.n3())
            throw DimError("mode3_linear: weight " + w.dims_str() +
                           " does not match input " + in.dims_str());
        const std::size_t c_out = w.n1();
        if (bias.valid()) {
            const DenseTensor& b = value(bias);
            if (b.n1() != 1 || b.n2() != 1 || b.n3() != c_out)
                throw DimError("mode3_linear: bias must be 1x1x" +
                               std::to_string(c_out));
        }
        const std::size_t slice = in.n1() * in.n2();
        DenseTensor out(in.n1(), in.n2(), c_out);
        for (std::size_t o = 0; o < c_out; ++o) {
            double* dst = out.data() + o * slice;
            if (bias.valid()) {
                const double b = value(bias)[o];
                for (std::size_t i = 0; i < slice; ++i) dst[i] = b;
            }
            for (std::size_t ci = 0; ci < in.n3(); ++ci) {
                const double wv = w(o, ci, 0);
                const double* src = in.data() + ci * slice;
                for (std::size_t i = 0; i < slice; ++i) dst[i] += wv * src[i];
            }
        }
        return push(Op::mode3_linear, {x, weight, bias}, std::move(out));
    }

    // Face-wise matrix product on the tape: slice k of out is X^(k) * Y^(k).
    Node facewise_matmul(Node a, Node b) {
        return push(Op::facewise_matmul, {a, b},
                    facewise_product(value(a), value(b)));
    }

    Node reduce_sum_squares(Node a) {
        double s = 0.0;
        for (double v : value(a).values()) s += v * v;
        return push(Op::reduce_sum_squares, {a}, DenseTensor(1, 1, 1, s));
    }

    // ||m . (x - o)||_F^2 as a scalar node; o and m are constants.
    Node masked_sq_error(Node x, DenseTensor o, MaskTensor m) {
        const DenseTensor& xv = value(x);
        if (!xv.same_dims(o) || !xv.same_dims(m))
            throw DimError("masked_sq_error: dims " + xv.dims_str() + " vs " +
                           o.dims_str() + " vs " + m.dims_str());
        double s = 0.0;
        for (std::size_t i = 0; i < xv.size(); ++i) {
            const double d = m[i] * (xv[i] - o[i]);
            s += d * (xv[i] - o[i]);
        }
        Node n = push(Op::masked_sq_error, {x}, DenseTensor(1, 1, 1, s));
        node(n).aux_a = std::make_shared<DenseTensor>(std::move(o));
        node(n).aux_b = std::make_shared<DenseTensor>(std::move(m));
        return n;
    }

    // Spatial window: out(i,j,c) = x(off1+i, off2+j, c).
    Node crop2d(Node a, std::size_t off1, std::size_t off2, std::size_t m1,
                std::size_t m2) {
        const DenseTensor& in = value(a);
        if (off1 + m1 > in.n1() || off2 + m2 > in.n2())
            throw DimError("crop2d: window exceeds input " + in.dims_str());
        DenseTensor out(m1, m2, in.n3());
        for (std::size_t c = 0; c < in.n3(); ++c)
            for (std::size_t j = 0; j < m2; ++j)
                for (std::size_t i = 0; i < m1; ++i)
                    out(i, j, c) = in(off1 + i, off2 + j, c);
        Node n = push(Op::crop2d, {a}, std::move(out));
        node(n).i0 = static_cast<int>(off1);
        node(n).i1 = static_cast<int>(off2);
        return n;
    }

    const DenseTensor& value(Node n) const { return nodes_[check(n)].value; }

    // Gradient of the last backward() w.r.t. node n; a leaf never reached by
    // the backward sweep reports all zeros.
    const DenseTensor& grad(Node n) {
        NodeData& d = nodes_[check(n)];
        if (d.grad.empty()) d.grad = DenseTensor(d.value.n1(), d.value.n2(), d.value.n3());
        return d.grad;
    }

    bool requires_grad(Node n) const { return nodes_[check(n)].requires_grad; }
    std::size_t size() const { return nodes_.size(); }

    void clear() { nodes_.clear(); }

    void backward(Node loss) {
        NodeData& top = nodes_[check(loss)];
        if (top.value.size() != 1)
            throw DimError("backward: loss must be scalar, got " +
                           top.value.dims_str());
        for (NodeData& d : nodes_) d.grad = DenseTensor();
        top.grad = DenseTensor(1, 1, 1, 1.0);
        for (int i = loss.idx; i >= 0; --i) {
            NodeData& d = nodes_[static_cast<std::size_t>(i)];
            if (d.grad.empty() || !d.requires_grad || d.op == Op::leaf) continue;
            propagate(d);
        }
    }

private:
    enum class Op {
        leaf,
        add,
        sub,
        scalar_mul,
        hadamard,
        leaky_relu,
        sigmoid,
        conv2d,
        upsample_nearest2,
        channel_concat,
        mode3_linear,
        facewise_matmul,
        reduce_sum_squares,
        masked_sq_error,
        crop2d,
    };

    struct NodeData {
        Op op = Op::leaf;
        std::array<int, 3> parents{-1, -1, -1};
        DenseTensor value;
        DenseTensor grad;
        bool requires_grad = false;
        double scalar = 0.0;
        int i0 = 0, i1 = 0, i2 = 0;
        std::shared_ptr<const DenseTensor> aux_a, aux_b;
    };

    // deque keeps value()/grad() references stable while the tape grows
    std::deque<NodeData> nodes_;

    int check(Node n) const {
        if (n.idx < 0 || static_cast<std::size_t>(n.idx) >= nodes_.size())
            throw DimError("Tape: invalid node handle");
        return n.idx;
    }

    NodeData& node(Node n) { return nodes_[check(n)]; }

    Node push(Op op, std::initializer_list<Node> parents, DenseTensor value,
              bool leaf_requires_grad = false) {
        NodeData d;
        d.op = op;
        d.value = std::move(value);
        d.requires_grad = leaf_requires_grad;
        std::size_t slot = 0;
        for (Node p : parents) {
            d.parents[slot++] = p.idx;
            if (p.valid() && nodes_[check(p)].requires_grad) d.requires_grad = true;
        }
        nodes_.push_back(std::move(d));
        return Node{static_cast<int>(nodes_.size()) - 1};
    }

    static int kernel_width(const DenseTensor& w) {
        const std::size_t kk = w.n1();
        const int k = static_cast<int>(std::llround(std::sqrt(static_cast<double>(kk))));
        if (static_cast<std::size_t>(k) * static_cast<std::size_t>(k) != kk)
            throw DimError("conv2d: kernel first dim must be k*k");
        return k;
    }

    DenseTensor& grad_buffer(int idx) {
        NodeData& d = nodes_[static_cast<std::size_t>(idx)];
        if (d.grad.empty())
            d.grad = DenseTensor(d.value.n1(), d.value.n2(), d.value.n3());
        return d.grad;
    }

    bool wants_grad(int idx) const {
        return idx >= 0 && nodes_[static_cast<std::size_t>(idx)].requires_grad;
    }

    static void conv_forward(const DenseTensor& in, const DenseTensor& w,
                             const DenseTensor* bias, DenseTensor& out, int k,
                             int stride, int pad) {
        const long in1 = static_cast<long>(in.n1());
        const long in2 = static_cast<long>(in.n2());
        const long out1 = static_cast<long>(out.n1());
        const long out2 = static_cast<long>(out.n2());
        const std::size_t in_slice = in.n1() * in.n2();
        const std::size_t out_slice = out.n1() * out.n2();
        for (std::size_t co = 0; co < out.n3(); ++co) {
            double* oslice = out.data() + co * out_slice;
            if (bias) {
                const double b = (*bias)[co];
                for (std::size_t i = 0; i < out_slice; ++i) oslice[i] = b;
            }
            for (std::size_t ci = 0; ci < in.n3(); ++ci) {
                const double* islice = in.data() + ci * in_slice;
                for (int v = 0; v < k; ++v)
                    for (int u = 0; u < k; ++u) {
                        const double wv =
                            w(static_cast<std::size_t>(u + v * k), ci, co);
                        if (wv == 0.0) continue;
                        for (long o2 = 0; o2 < out2; ++o2) {
                            const long j2 = o2 * stride - pad + v;
                            if (j2 < 0 || j2 >= in2) continue;
                            const double* icol = islice + j2 * in1;
                            double* ocol = oslice + o2 * out1;
                            const auto [lo, hi] = row_range(u, k, stride, pad, in1, out1);
                            for (long o1 = lo; o1 <= hi; ++o1)
                                ocol[o1] += wv * icol[o1 * stride - pad + u];
                        }
                    }
            }
        }
    }

    // Valid output-row range for kernel row offset u.
    static std::pair<long, long> row_range(int u, int /*k*/, int stride, int pad,
                                           long in1, long out1) {
        const long shift = static_cast<long>(u) - pad;
        long lo = 0;
        if (shift < 0) lo = (-shift + stride - 1) / stride;
        long hi = (in1 - 1 - shift) / stride;
        if (hi > out1 - 1) hi = out1 - 1;
        return {lo, hi};
    }

    void backward_conv2d(NodeData& d) {
        const DenseTensor& g = d.grad;
        const DenseTensor& in = nodes_[d.parents[0]].value;
        const DenseTensor& w = nodes_[d.parents[1]].value;
        const int k = d.i0, stride = d.i1, pad = d.i2;
        const long in1 = static_cast<long>(in.n1());
        const long in2 = static_cast<long>(in.n2());
        const long out1 = static_cast<long>(g.n1());
        const long out2 = static_cast<long>(g.n2());
        const std::size_t in_slice = in.n1() * in.n2();
        const std::size_t out_slice = g.n1() * g.n2();

        if (wants_grad(d.parents[0])) {
            DenseTensor& dx = grad_buffer(d.parents[0]);
            for (std::size_t co = 0; co < g.n3(); ++co) {
                const double* gslice = g.data() + co * out_slice;
                for (std::size_t ci = 0; ci < in.n3(); ++ci) {
                    double* xslice = dx.data() + ci * in_slice;
                    for (int v = 0; v < k; ++v)
                        for (int u = 0; u < k; ++u) {
                            const double wv =
                                w(static_cast<std::size_t>(u + v * k), ci, co);
                            if (wv == 0.0) continue;
                            for (long o2 = 0; o2 < out2; ++o2) {
                                const long j2 = o2 * stride - pad + v;
                                if (j2 < 0 || j2 >= in2) continue;
                                double* xcol = xslice + j2 * in1;
                                const double* gcol = gslice + o2 * out1;
                                const auto [lo, hi] =
                                    row_range(u, k, stride, pad, in1, out1);
                                for (long o1 = lo; o1 <= hi; ++o1)
                                    xcol[o1 * stride - pad + u] += wv * gcol[o1];
                            }
                        }
                }
            }
        }
        if (wants_grad(d.parents[1])) {
            DenseTensor& dw = grad_buffer(d.parents[1]);
            for (std::size_t co = 0; co < g.n3(); ++co) {
                const double* gslice = g.data() + co * out_slice;
                for (std::size_t ci = 0; ci < in.n3(); ++ci) {
                    const double* islice = in.data() + ci * in_slice;
                    for (int v = 0; v < k; ++v)
                        for (int u = 0; u < k; ++u) {
                            double acc = 0.0;
                            for (long o2 = 0; o2 < out2; ++o2) {
                                const long j2 = o2 * stride - pad + v;
                                if (j2 < 0 || j2 >= in2) continue;
                                const double* icol = islice + j2 * in1;
                                const double* gcol = gslice + o2 * out1;
                                const auto [lo, hi] =
                                    row_range(u, k, stride, pad, in1, out1);
                                for (long o1 = lo; o1 <= hi; ++o1)
                                    acc += gcol[o1] * icol[o1 * stride - pad + u];
                            }
                            dw(static_cast<std::size_t>(u + v * k), ci, co) += acc;
                        }
                }
            }
        }
        if (wants_grad(d.parents[2])) {
            DenseTensor& db = grad_buffer(d.parents[2]);
            for (std::size_t co = 0; co < g.n3(); ++co) {
                double acc = 0.0;
                const double* gslice = g.data() + co * out_slice;
                for (std::size_t i = 0; i < out_slice; ++i) acc += gslice[i];
                db[co] += acc;
            }
        }
    }

    void propagate(NodeData& d) {
        const DenseTensor& g = d.grad;
        switch (d.op) {
            case Op::leaf:
                break;
            case Op::add: {
                for (int side = 0; side < 2; ++side)
                    if (wants_grad(d.parents[side])) {
                        DenseTensor& p = grad_buffer(d.parents[side]);
                        for (std::size_t i = 0; i < g.size(); ++i) p[i] += g[i];
                    }
                break;
            }
            case Op::sub: {
                if (wants_grad(d.parents[0])) {
                    DenseTensor& p = grad_buffer(d.parents[0]);
                    for (std::size_t i = 0; i < g.size(); ++i) p[i] += g[i];
                }
                if (wants_grad(d.parents[1])) {
                    DenseTensor& p = grad_buffer(d.parents[1]);
                    for (std::size_t i = 0; i < g.size(); ++i) p[i] -= g[i];
                }
                break;
            }
            case Op::scalar_mul: {
                if (wants_grad(d.parents[0])) {
                    DenseTensor& p = grad_buffer(d.parents[0]);
                    for (std::size_t i = 0; i < g.size(); ++i)
                        p[i] += d.scalar * g[i];
                }
                break;
            }
            case Op::hadamard: {
                const DenseTensor& x = nodes_[d.parents[0]].value;
                const DenseTensor& y = nodes_[d.parents[1]].value;
                if (wants_grad(d.parents[0])) {
                    DenseTensor& p = grad_buffer(d.parents[0]);
                    for (std::size_t i = 0; i < g.size(); ++i) p[i] += g[i] * y[i];
                }
                if (wants_grad(d.parents[1])) {
                    DenseTensor& p = grad_buffer(d.parents[1]);
                    for (std::size_t i = 0; i < g.size(); ++i) p[i] += g[i] * x[i];
                }
                break;
            }
            case Op::leaky_relu: {
                if (wants_grad(d.parents[0])) {
                    const DenseTensor& x = nodes_[d.parents[0]].value;
                    DenseTensor& p = grad_buffer(d.parents[0]);
                    for (std::size_t i = 0; i < g.size(); ++i)
                        p[i] += g[i] * (x[i] > 0.0 ? 1.0 : d.scalar);
                }
                break;
            }
            case Op::sigmoid: {
                if (wants_grad(d.parents[0])) {
                    DenseTensor& p = grad_buffer(d.parents[0]);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        const double s = d.value[i];
                        p[i] += g[i] * s * (1.0 - s);
                    }
                }
                break;
            }
            case Op::conv2d:
                backward_conv2d(d);
                break;
            case Op::upsample_nearest2: {
                if (wants_grad(d.parents[0])) {
                    DenseTensor& p = grad_buffer(d.parents[0]);
                    for (std::size_t c = 0; c < g.n3(); ++c)
                        for (std::size_t j = 0; j < g.n2(); ++j)
                            for (std::size_t i = 0; i < g.n1(); ++i)
                                p(i / 2, j / 2, c) += g(i, j, c);
                }
                break;
            }
            case Op::channel_concat: {
                const std::size_t a_size = nodes_[d.parents[0]].value.size();
                if (wants_grad(d.parents[0])) {
                    DenseTensor& p = grad_buffer(d.parents[0]);
                    for (std::size_t i = 0; i < a_size; ++i) p[i] += g[i];
                }
                if (wants_grad(d.parents[1])) {
                    DenseTensor& p = grad_buffer(d.parents[1]);
                    for (std::size_t i = 0; i < p.size(); ++i) p[i] += g[a_size + i];
                }
                break;
            }
            case Op::mode3_linear: {
                const DenseTensor& x = nodes_[d.parents[0]].value;
                const DenseTensor& w = nodes_[d.parents[1]].value;
                const std::size_t slice = x.n1() * x.n2();
                const std::size_t c_out = w.n1();
                if (wants_grad(d.parents[0])) {
                    DenseTensor& p = grad_buffer(d.parents[0]);
                    for (std::size_t ci = 0; ci < x.n3(); ++ci) {
                        double* dst = p.data() + ci * slice;
                        for (std::size_t o = 0; o < c_out; ++o) {
                            const double wv = w(o, ci, 0);
                            const double* gs = g.data() + o * slice;
                            for (std::size_t i = 0; i < slice; ++i)
                                dst[i] += wv * gs[i];
                        }
                    }
                }
                if (wants_grad(d.parents[1])) {
                    DenseTensor& p = grad_buffer(d.parents[1]);
                    for (std::size_t o = 0; o < c_out; ++o) {
                        const double* gs = g.data() + o * slice;
                        for (std::size_t ci = 0; ci < x.n3(); ++ci) {
                            const double* xs = x.data() + ci * slice;
                            double acc = 0.0;
                            for (std::size_t i = 0; i < slice; ++i)
                                acc += gs[i] * xs[i];
                            p(o, ci, 0) += acc;
                        }
                    }
                }
                if (wants_grad(d.parents[2])) {
                    DenseTensor& p = grad_buffer(d.parents[2]);
                    for (std::size_t o = 0; o < c_out; ++o) {
                        const double* gs = g.data() + o * slice;
                        double acc = 0.0;
                        for (std::size_t i = 0; i < slice; ++i) acc += gs[i];
                        p[o] += acc;
                    }
                }
                break;
            }
            case Op::facewise_matmul: {
                const DenseTensor& x = nodes_[d.parents[0]].value;
                const DenseTensor& y = nodes_[d.parents[1]].value;
                if (wants_grad(d.parents[0])) {
                    // dX^(k) += G^(k) * Y^(k)^T
                    DenseTensor& p = grad_buffer(d.parents[0]);
                    for (std::size_t k = 0; k < g.n3(); ++k)
                        for (std::size_t l = 0; l < x.n2(); ++l)
                            for (std::size_t j = 0; j < y.n2(); ++j) {
                                const double w = y(l, j, k);
                                for (std::size_t i = 0; i < x.n1(); ++i)
                                    p(i, l, k) += g(i, j, k) * w;
                            }
                }
                if (wants_grad(d.parents[1])) {
                    // dY^(k) += X^(k)^T * G^(k)
                    DenseTensor& p = grad_buffer(d.parents[1]);
                    for (std::size_t k = 0; k < g.n3(); ++k)
                        for (std::size_t j = 0; j < y.n2(); ++j)
                            for (std::size_t l = 0; l < x.n2(); ++l) {
                                double acc = 0.0;
                                for (std::size_t i = 0; i < x.n1(); ++i)
                                    acc += x(i, l, k) * g(i, j, k);
                                p(l, j, k) += acc;
                            }
                }
                break;
            }
            case Op::reduce_sum_squares: {
                if (wants_grad(d.parents[0])) {
                    const DenseTensor& x = nodes_[d.parents[0]].value;
                    DenseTensor& p = grad_buffer(d.parents[0]);
                    const double g0 = g[0];
                    for (std::size_t i = 0; i < x.size(); ++i)
                        p[i] += 2.0 * g0 * x[i];
                }
                break;
            }
            case Op::masked_sq_error: {
                if (wants_grad(d.parents[0])) {
                    const DenseTensor& x = nodes_[d.parents[0]].value;
                    const DenseTensor& o = *d.aux_a;
                    const DenseTensor& m = *d.aux_b;
                    DenseTensor& p = grad_buffer(d.parents[0]);
                    const double g0 = g[0];
                    for (std::size_t i = 0; i < x.size(); ++i)
                        p[i] += g0 * 2.0 * m[i] * (x[i] - o[i]);
                }
                break;
            }
            case Op::crop2d: {
                if (wants_grad(d.parents[0])) {
                    DenseTensor& p = grad_buffer(d.parents[0]);
                    const std::size_t off1 = static_cast<std::size_t>(d.i0);
                    const std::size_t off2 = static_cast<std::size_t>(d.i1);
                    for (std::size_t c = 0; c < g.n3(); ++c)
                        for (std::size_t j = 0; j < g.n2(); ++j)
                            for (std::size_t i = 0; i < g.n1(); ++i)
                                p(off1 + i, off2 + j, c) += g(i, j, c);
                }
                break;
            }
        }
    }
};

}  // namespace ttc
