#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "ccs/error.hpp"

namespace ccs::nd {

// Dense 64-bit float array, row-major. Rank 1 or 2 is all the models need.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (numel_of(shape) != data.size()) {
            throw ShapeError("tensor: shape " + shape_str(shape) + " does not match buffer size " +
                             std::to_string(data.size()));
        }
    }

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return n;
    }

    static Tensor zeros(std::vector<std::size_t> s) {
        std::size_t n = numel_of(s);
        return Tensor(std::move(s), std::vector<double>(n, 0.0));
    }

    static Tensor full(std::vector<std::size_t> s, double v) {
        std::size_t n = numel_of(s);
        return Tensor(std::move(s), std::vector<double>(n, v));
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    static Tensor row_major(std::size_t r, std::size_t c, std::vector<double> d) {
        return Tensor({r, c}, std::move(d));
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (double v : data) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    void fill(double v) {
        for (double& x : data) x = v;
    }

    static std::string shape_str(const std::vector<std::size_t>& s) {
        std::string out = "[";
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i) out += "x";
            out += std::to_string(s[i]);
        }
        return out + "]";
    }

    std::string shape_str() const { return shape_str(shape); }
};

// NaN/Inf is an error state for every operation in this library.
inline void check_finite(const Tensor& t, const char* op) {
    if (!t.all_finite()) {
        throw NumericError(std::string(op) + ": produced a non-finite value");
    }
}

// Trainable tensor: value plus an always-same-shape gradient buffer.
// ids are unique within the owning ParamStore.
struct Parameter {
    Tensor value;
    Tensor grad;
    std::size_t id = 0;

    Parameter() = default;
    Parameter(Tensor v, std::size_t id_) : value(std::move(v)), grad(Tensor::zeros(value.shape)), id(id_) {}

    void zero_grad() { grad.fill(0.0); }
};

} // namespace ccs::nd
