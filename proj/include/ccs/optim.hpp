#pragma once

#include <cmath>
#include <span>
#include <unordered_map>
#include <vector>

#include "ccs/rng.hpp"
#include "ccs/tensor.hpp"

namespace ccs::nd {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are keyed by Parameter id and
// persist across steps.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    std::size_t step_count() const { return t_; }

    void step(std::span<Parameter* const> params) {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (Parameter* p : params) {
            Moments& mom = moments_[p->id];
            if (mom.m.empty()) {
                mom.m.assign(p->value.numel(), 0.0);
                mom.v.assign(p->value.numel(), 0.0);
            }
            for (std::size_t i = 0; i < p->value.numel(); ++i) {
                const double g = p->grad[i];
                mom.m[i] = cfg_.beta1 * mom.m[i] + (1.0 - cfg_.beta1) * g;
                mom.v[i] = cfg_.beta2 * mom.v[i] + (1.0 - cfg_.beta2) * g * g;
                const double mhat = mom.m[i] / bc1;
                const double vhat = mom.v[i] / bc2;
                p->value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
            check_finite(p->value, "adam_step");
        }
    }

private:
    struct Moments {
        std::vector<double> m, v;
    };

    AdamConfig cfg_;
    std::size_t t_ = 0;
    std::unordered_map<std::size_t, Moments> moments_;
};

// Entries i.i.d. uniform on [-b, b] with b = sqrt(6 / fan_in) (gain sqrt(2)).
inline Tensor kaiming_uniform(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng) {
    if (fan_in == 0) throw InvalidArgument("kaiming_uniform: fan_in must be >= 1");
    const double b = std::sqrt(6.0 / static_cast<double>(fan_in));
    Tensor out = Tensor::zeros(std::move(shape));
    for (double& v : out.data) v = rng.uniform(-b, b);
    return out;
}

inline Tensor uniform_init(std::vector<std::size_t> shape, double lo, double hi, Rng& rng) {
    if (!(lo < hi)) {
        throw InvalidArgument("uniform_init: lo must be < hi, got [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + ")");
    }
    Tensor out = Tensor::zeros(std::move(shape));
    for (double& v : out.data) v = rng.uniform(lo, hi);
    return out;
}

} // namespace ccs::nd
