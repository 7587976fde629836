#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "ccs/tensor.hpp"

// Value-level kernels. The autodiff tape records these for its forward pass
// and the models reuse them directly for gradient-free inference, so both
// paths compute bit-identical values.

namespace ccs::nd::ops {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;

inline CMap cmap(const Tensor& t) { return CMap(t.data.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())); }
inline MMap mmap(Tensor& t) { return MMap(t.data.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())); }

inline void require_matrix(const Tensor& t, const char* op) {
    if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected a matrix, got shape " + t.shape_str());
}

// -------- matmul --------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions disagree, " + a.shape_str() + " x " + b.shape_str());
    }
    Tensor out = Tensor::zeros({a.rows(), b.cols()});
    mmap(out).noalias() = cmap(a) * cmap(b);
    check_finite(out, "matmul");
    return out;
}

// out += a * b
inline void matmul_acc(Tensor& out, const Tensor& a, const Tensor& b) {
    mmap(out).noalias() += cmap(a) * cmap(b);
}

// out += a^T * b
inline void matmul_tn_acc(Tensor& out, const Tensor& a, const Tensor& b) {
    mmap(out).noalias() += cmap(a).transpose() * cmap(b);
}

// out += a * b^T
inline void matmul_nt_acc(Tensor& out, const Tensor& a, const Tensor& b) {
    mmap(out).noalias() += cmap(a) * cmap(b).transpose();
}

// -------- elementwise --------

inline Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ShapeError("add: shape mismatch, " + a.shape_str() + " vs " + b.shape_str());
    Tensor out = a;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b[i];
    check_finite(out, "add");
    return out;
}

// x [m x n] + b broadcast over rows; b has n entries.
inline Tensor add_rowvec(const Tensor& x, const Tensor& b) {
    require_matrix(x, "add_rowvec");
    if (b.numel() != x.cols()) {
        throw ShapeError("add_rowvec: bias length " + b.shape_str() + " does not match row width " + x.shape_str());
    }
    Tensor out = x;
    const std::size_t m = x.rows(), n = x.cols();
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) out.data[r * n + c] += b[c];
    check_finite(out, "add_rowvec");
    return out;
}

inline Tensor scale(const Tensor& x, double c) {
    Tensor out = x;
    for (double& v : out.data) v *= c;
    check_finite(out, "scale");
    return out;
}

inline Tensor relu(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

// tanh-approximation GELU: 0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x^3)))
inline constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
inline constexpr double kGeluK = 0.044715;

inline Tensor gelu(const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape);
    Eigen::Map<const Eigen::ArrayXd> xa(x.data.data(), static_cast<Eigen::Index>(x.numel()));
    Eigen::Map<Eigen::ArrayXd> oa(out.data.data(), static_cast<Eigen::Index>(out.numel()));
    oa = 0.5 * xa * (1.0 + (kGeluC * (xa + kGeluK * xa.cube())).tanh());
    check_finite(out, "gelu");
    return out;
}

// d gelu / dx, same shape as x.
inline Tensor gelu_derivative(const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape);
    Eigen::Map<const Eigen::ArrayXd> xa(x.data.data(), static_cast<Eigen::Index>(x.numel()));
    Eigen::Map<Eigen::ArrayXd> oa(out.data.data(), static_cast<Eigen::Index>(out.numel()));
    const auto u = kGeluC * (xa + kGeluK * xa.cube());
    const auto t = u.tanh();
    // 0.5*(1+t) + 0.5*x*(1-t^2)*u'
    oa = 0.5 * (1.0 + t) + 0.5 * xa * (1.0 - t.square()) * (kGeluC * (1.0 + 3.0 * kGeluK * xa.square()));
    return out;
}

// -------- layer normalization --------

struct LayerNormCache {
    Tensor xhat;                // normalized input, same shape as x
    std::vector<double> inv_std; // per row: 1/sqrt(var + eps)
};

// Per row: (x - mean)/sqrt(var + eps) * gamma + beta, population variance.
inline Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                         LayerNormCache* cache = nullptr) {
    require_matrix(x, "layer_norm");
    const std::size_t m = x.rows(), d = x.cols();
    if (d == 0) throw InvalidArgument("layer_norm: empty feature dimension");
    if (gamma.numel() != d || beta.numel() != d) {
        throw ShapeError("layer_norm: gamma/beta width must be " + std::to_string(d));
    }
    Tensor out = Tensor::zeros(x.shape);
    if (cache) {
        cache->xhat = Tensor::zeros(x.shape);
        cache->inv_std.assign(m, 0.0);
    }
    for (std::size_t r = 0; r < m; ++r) {
        const double* xr = &x.data[r * d];
        double mean = 0.0;
        for (std::size_t c = 0; c < d; ++c) mean += xr[c];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const double dv = xr[c] - mean;
            var += dv * dv;
        }
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (std::size_t c = 0; c < d; ++c) {
            const double xh = (xr[c] - mean) * inv;
            out.data[r * d + c] = xh * gamma[c] + beta[c];
            if (cache) cache->xhat.data[r * d + c] = xh;
        }
        if (cache) cache->inv_std[r] = inv;
    }
    check_finite(out, "layer_norm");
    return out;
}

// -------- softmax --------

// Max-subtracted row softmax; rows sum to 1.
inline Tensor softmax_rows(const Tensor& x) {
    require_matrix(x, "softmax_rows");
    const std::size_t m = x.rows(), n = x.cols();
    Tensor out = Tensor::zeros(x.shape);
    for (std::size_t r = 0; r < m; ++r) {
        const double* xr = &x.data[r * n];
        double* or_ = &out.data[r * n];
        double mx = xr[0];
        for (std::size_t c = 1; c < n; ++c) mx = std::max(mx, xr[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            or_[c] = std::exp(xr[c] - mx);
            sum += or_[c];
        }
        for (std::size_t c = 0; c < n; ++c) or_[c] /= sum;
    }
    check_finite(out, "softmax_rows");
    return out;
}

// -------- gather / losses / pooling --------

inline Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> indices) {
    require_matrix(table, "embedding_lookup");
    const std::size_t k = table.rows(), d = table.cols();
    Tensor out = Tensor::zeros({indices.size(), d});
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const std::size_t idx = indices[r];
        if (idx >= k) {
            throw VocabError("embedding_lookup: index " + std::to_string(idx) + " out of vocabulary of size " +
                             std::to_string(k));
        }
        std::copy_n(&table.data[idx * d], d, &out.data[r * d]);
    }
    return out;
}

inline double mse(const Tensor& pred, const Tensor& target) {
    if (pred.numel() == 0) throw InvalidArgument("mse_loss: empty batch");
    if (pred.numel() != target.numel()) {
        throw ShapeError("mse_loss: length mismatch, " + pred.shape_str() + " vs " + target.shape_str());
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        const double d = pred[i] - target[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.numel());
}

// [m*block x d] -> [m x d], averaging each block of `block` consecutive rows.
inline Tensor mean_pool_rows(const Tensor& x, std::size_t block) {
    require_matrix(x, "mean_pool_rows");
    if (block == 0 || x.rows() % block != 0) {
        throw ShapeError("mean_pool_rows: row count " + std::to_string(x.rows()) + " not divisible by block " +
                         std::to_string(block));
    }
    const std::size_t m = x.rows() / block, d = x.cols();
    Tensor out = Tensor::zeros({m, d});
    for (std::size_t s = 0; s < m; ++s) {
        for (std::size_t t = 0; t < block; ++t) {
            const double* xr = &x.data[(s * block + t) * d];
            for (std::size_t c = 0; c < d; ++c) out.data[s * d + c] += xr[c];
        }
        for (std::size_t c = 0; c < d; ++c) out.data[s * d + c] /= static_cast<double>(block);
    }
    return out;
}

inline Tensor concat_cols(std::span<const Tensor* const> parts) {
    if (parts.empty()) throw InvalidArgument("concat_cols: nothing to concatenate");
    const std::size_t m = parts[0]->rows();
    std::size_t width = 0;
    for (const Tensor* p : parts) {
        require_matrix(*p, "concat_cols");
        if (p->rows() != m) throw ShapeError("concat_cols: row count mismatch");
        width += p->cols();
    }
    Tensor out = Tensor::zeros({m, width});
    std::size_t off = 0;
    for (const Tensor* p : parts) {
        const std::size_t c = p->cols();
        for (std::size_t r = 0; r < m; ++r) std::copy_n(&p->data[r * c], c, &out.data[r * width + off]);
        off += c;
    }
    return out;
}

// -------- per-sample block matmuls (attention substrate) --------
// Both operands are stacks of per-sample blocks of `block` rows.

// C_s = A_s * B_s^T for each block s. a, b: [m*block x d] -> [m*block x block]
inline Tensor block_matmul_nt(const Tensor& a, const Tensor& b, std::size_t block) {
    require_matrix(a, "block_matmul_nt");
    if (!a.same_shape(b)) throw ShapeError("block_matmul_nt: shape mismatch, " + a.shape_str() + " vs " + b.shape_str());
    if (block == 0 || a.rows() % block != 0) throw ShapeError("block_matmul_nt: bad block size");
    const std::size_t m = a.rows() / block, d = a.cols();
    Tensor out = Tensor::zeros({a.rows(), block});
    for (std::size_t s = 0; s < m; ++s) {
        CMap as(&a.data[s * block * d], static_cast<Eigen::Index>(block), static_cast<Eigen::Index>(d));
        CMap bs(&b.data[s * block * d], static_cast<Eigen::Index>(block), static_cast<Eigen::Index>(d));
        MMap cs(&out.data[s * block * block], static_cast<Eigen::Index>(block), static_cast<Eigen::Index>(block));
        cs.noalias() = as * bs.transpose();
    }
    check_finite(out, "block_matmul_nt");
    return out;
}

// C_s = P_s * V_s for each block s. p: [m*block x block], v: [m*block x d]
inline Tensor block_matmul_nn(const Tensor& p, const Tensor& v, std::size_t block) {
    require_matrix(p, "block_matmul_nn");
    require_matrix(v, "block_matmul_nn");
    if (block == 0 || p.rows() % block != 0 || p.cols() != block || v.rows() != p.rows()) {
        throw ShapeError("block_matmul_nn: incompatible shapes " + p.shape_str() + " and " + v.shape_str());
    }
    const std::size_t m = p.rows() / block, d = v.cols();
    Tensor out = Tensor::zeros({v.rows(), d});
    for (std::size_t s = 0; s < m; ++s) {
        CMap ps(&p.data[s * block * block], static_cast<Eigen::Index>(block), static_cast<Eigen::Index>(block));
        CMap vs(&v.data[s * block * d], static_cast<Eigen::Index>(block), static_cast<Eigen::Index>(d));
        MMap cs(&out.data[s * block * d], static_cast<Eigen::Index>(block), static_cast<Eigen::Index>(d));
        cs.noalias() = ps * vs;
    }
    check_finite(out, "block_matmul_nn");
    return out;
}

} // namespace ccs::nd::ops
