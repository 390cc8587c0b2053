#pragma once

#include "ttc/nets.hpp"

#include <cmath>
#include <vector>

namespace ttc {

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam over a ParameterStore. One state per parameter tensor;
// t increments once per step.
class AdamOptimizer {
public:
    AdamOptimizer() = default;

    AdamOptimizer(const ParameterStore& store, AdamConfig cfg = {})
        : cfg_(cfg) {
        for (std::size_t i = 0; i < store.count(); ++i) {
            const DenseTensor& p = store.value(i);
            m_.emplace_back(p.n1(), p.n2(), p.n3());
            v_.emplace_back(p.n1(), p.n2(), p.n3());
        }
    }

    // grads[i] pairs with store parameter i. The step aborts before touching
    // any state if a gradient is malformed or non-finite.
    void step(ParameterStore& store, const std::vector<DenseTensor>& grads) {
        if (grads.size() != m_.size())
            throw DimError("adam_step: gradient count mismatch");
        for (std::size_t i = 0; i < grads.size(); ++i) {
            if (!store.value(i).same_dims(grads[i]))
                throw DimError("adam_step: grad dims " + grads[i].dims_str() +
                               " vs param " + store.value(i).dims_str() + " (" +
                               store.name(i) + ")");
            for (double gj : grads[i].values())
                if (!std::isfinite(gj))
                    throw NumericError("adam_step: non-finite gradient in " +
                                       store.name(i));
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
        const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
        for (std::size_t i = 0; i < grads.size(); ++i) {
            DenseTensor& p = store.value(i);
            const DenseTensor& g = grads[i];
            DenseTensor& m = m_[i];
            DenseTensor& v = v_[i];
            for (std::size_t j = 0; j < p.size(); ++j) {
                const double gj = g[j];
                m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * gj;
                v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * gj * gj;
                const double mhat = m[j] / bc1;
                const double vhat = v[j] / bc2;
                p[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

    long step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }
    const DenseTensor& first_moment(std::size_t i) const { return m_[i]; }
    const DenseTensor& second_moment(std::size_t i) const { return v_[i]; }

private:
    AdamConfig cfg_;
    long t_ = 0;
    std::vector<DenseTensor> m_, v_;
};

}  // namespace ttc
