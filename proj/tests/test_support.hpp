#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "ccs/rng.hpp"
#include "ccs/tensor.hpp"

namespace ccs::test {

// Central finite differences on one scalar slot, h = 1e-5 in 64-bit floats.
// The forward callable must re-run the computation from scratch.
inline double numeric_grad(const std::function<double()>& forward, double& slot, double h = 1e-5) {
    const double orig = slot;
    slot = orig + h;
    const double fp = forward();
    slot = orig - h;
    const double fm = forward();
    slot = orig;
    return (fp - fm) / (2.0 * h);
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)});
}

inline nd::Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    nd::Tensor t = nd::Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

} // namespace ccs::test
