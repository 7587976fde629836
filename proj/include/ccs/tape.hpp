#pragma once

#include <deque>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "ccs/ops.hpp"
#include "ccs/tensor.hpp"

namespace ccs::nd {

// Reverse-mode autodiff over a linear tape. Recording order is topological by
// construction (an op can only reference already-recorded nodes), and
// backward() walks the tape once in reverse, so every node is visited exactly
// once. Gradients of nodes bound to a Parameter are accumulated into the
// parameter's grad buffer when backward() finishes.
class Tape {
public:
    using NodeId = std::size_t;

    // ----- leaves -----

    NodeId constant(Tensor v) { return push(std::move(v), nullptr, {}); }

    NodeId param(Parameter& p) {
        NodeId id = push(p.value, nullptr, {});
        nodes_[id].bound = &p;
        return id;
    }

    // ----- recorded operations -----

    NodeId matmul(NodeId a, NodeId b) {
        NodeId out = push(ops::matmul(val(a), val(b)), nullptr, {a, b});
        nodes_[out].back = [this, a, b, out] {
            // dA += dC * B^T,  dB += A^T * dC
            ops::matmul_nt_acc(grad_buf(a), grad_buf(out), val(b));
            ops::matmul_tn_acc(grad_buf(b), val(a), grad_buf(out));
        };
        return out;
    }

    NodeId add(NodeId a, NodeId b) {
        NodeId out = push(ops::add(val(a), val(b)), nullptr, {a, b});
        nodes_[out].back = [this, a, b, out] {
            const Tensor& g = grad_buf(out);
            Tensor& ga = grad_buf(a);
            Tensor& gb = grad_buf(b);
            for (std::size_t i = 0; i < g.numel(); ++i) {
                ga[i] += g[i];
                gb[i] += g[i];
            }
        };
        return out;
    }

    // x [m x n] plus a length-n bias broadcast over rows.
    NodeId add_rowvec(NodeId x, NodeId bias) {
        NodeId out = push(ops::add_rowvec(val(x), val(bias)), nullptr, {x, bias});
        nodes_[out].back = [this, x, bias, out] {
            const Tensor& g = grad_buf(out);
            Tensor& gx = grad_buf(x);
            Tensor& gb = grad_buf(bias);
            const std::size_t m = g.rows(), n = g.cols();
            for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
            for (std::size_t r = 0; r < m; ++r)
                for (std::size_t c = 0; c < n; ++c) gb[c] += g.data[r * n + c];
        };
        return out;
    }

    // Same buffer, new shape; backward passes gradients straight through.
    NodeId reshape(NodeId x, std::vector<std::size_t> shape) {
        if (Tensor::numel_of(shape) != val(x).numel()) {
            throw ShapeError("reshape: " + val(x).shape_str() + " cannot become " + Tensor::shape_str(shape));
        }
        Tensor v(std::move(shape), val(x).data);
        NodeId out = push(std::move(v), nullptr, {x});
        nodes_[out].back = [this, x, out] {
            const Tensor& g = grad_buf(out);
            Tensor& gx = grad_buf(x);
            for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
        };
        return out;
    }

    NodeId scale(NodeId x, double c) {
        NodeId out = push(ops::scale(val(x), c), nullptr, {x});
        nodes_[out].back = [this, x, c, out] {
            const Tensor& g = grad_buf(out);
            Tensor& gx = grad_buf(x);
            for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += c * g[i];
        };
        return out;
    }

    NodeId relu(NodeId x) {
        NodeId out = push(ops::relu(val(x)), nullptr, {x});
        nodes_[out].back = [this, x, out] {
            const Tensor& g = grad_buf(out);
            const Tensor& xv = val(x);
            Tensor& gx = grad_buf(x);
            // subgradient 0 at exactly 0
            for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += xv[i] > 0.0 ? g[i] : 0.0;
        };
        return out;
    }

    NodeId gelu(NodeId x) {
        NodeId out = push(ops::gelu(val(x)), nullptr, {x});
        nodes_[out].back = [this, x, out] {
            const Tensor& g = grad_buf(out);
            const Tensor d = ops::gelu_derivative(val(x));
            Tensor& gx = grad_buf(x);
            for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += d[i] * g[i];
        };
        return out;
    }

    NodeId layer_norm(NodeId x, NodeId gamma, NodeId beta, double eps) {
        auto cache = std::make_shared<ops::LayerNormCache>();
        NodeId out = push(ops::layer_norm(val(x), val(gamma), val(beta), eps, cache.get()), nullptr, {x, gamma, beta});
        nodes_[out].back = [this, x, gamma, beta, out, cache] {
            const Tensor& g = grad_buf(out);
            const Tensor& gam = val(gamma);
            const Tensor& xhat = cache->xhat;
            Tensor& gx = grad_buf(x);
            Tensor& ggam = grad_buf(gamma);
            Tensor& gbet = grad_buf(beta);
            const std::size_t m = g.rows(), d = g.cols();
            const double dn = static_cast<double>(d);
            for (std::size_t r = 0; r < m; ++r) {
                const double* gr = &g.data[r * d];
                const double* xh = &xhat.data[r * d];
                // dxhat = dy * gamma; dx = inv_std*(dxhat - mean(dxhat) - xhat*mean(dxhat*xhat))
                double s1 = 0.0, s2 = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    const double dxh = gr[c] * gam[c];
                    s1 += dxh;
                    s2 += dxh * xh[c];
                }
                s1 /= dn;
                s2 /= dn;
                const double inv = cache->inv_std[r];
                for (std::size_t c = 0; c < d; ++c) {
                    const double dxh = gr[c] * gam[c];
                    gx.data[r * d + c] += inv * (dxh - s1 - xh[c] * s2);
                    ggam[c] += gr[c] * xh[c];
                    gbet[c] += gr[c];
                }
            }
        };
        return out;
    }

    NodeId softmax_rows(NodeId x) {
        NodeId out = push(ops::softmax_rows(val(x)), nullptr, {x});
        nodes_[out].back = [this, x, out] {
            const Tensor& g = grad_buf(out);
            const Tensor& p = val(out);
            Tensor& gx = grad_buf(x);
            const std::size_t m = g.rows(), n = g.cols();
            for (std::size_t r = 0; r < m; ++r) {
                const double* gr = &g.data[r * n];
                const double* pr = &p.data[r * n];
                double dot = 0.0;
                for (std::size_t c = 0; c < n; ++c) dot += gr[c] * pr[c];
                for (std::size_t c = 0; c < n; ++c) gx.data[r * n + c] += pr[c] * (gr[c] - dot);
            }
        };
        return out;
    }

    // Row gather from a [K x d] table; backward scatter-adds into the
    // referenced rows only (repeated indices accumulate).
    NodeId embedding_lookup(NodeId table, std::vector<std::size_t> indices) {
        NodeId out = push(ops::embedding_lookup(val(table), indices), nullptr, {table});
        nodes_[out].back = [this, table, out, idx = std::move(indices)] {
            const Tensor& g = grad_buf(out);
            Tensor& gt = grad_buf(table);
            const std::size_t d = g.cols();
            for (std::size_t r = 0; r < idx.size(); ++r) {
                const double* gr = &g.data[r * d];
                double* tr = &gt.data[idx[r] * d];
                for (std::size_t c = 0; c < d; ++c) tr[c] += gr[c];
            }
        };
        return out;
    }

    // Scalar sum of all entries.
    NodeId sum(NodeId x) {
        double acc = 0.0;
        for (double v : val(x).data) acc += v;
        NodeId out = push(Tensor::scalar(acc), nullptr, {x});
        nodes_[out].back = [this, x, out] {
            const double g = grad_buf(out)[0];
            Tensor& gx = grad_buf(x);
            for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += g;
        };
        return out;
    }

    // Scalar (1/m) * sum((pred - target)^2); target is a plain tensor.
    NodeId mse_loss(NodeId pred, const Tensor& target) {
        const Tensor& p = val(pred);
        NodeId out = push(Tensor::scalar(ops::mse(p, target)), nullptr, {pred});
        nodes_[out].back = [this, pred, out, target] {
            const double gl = grad_buf(out)[0];
            const Tensor& p = val(pred);
            Tensor& gp = grad_buf(pred);
            const double inv_m = 1.0 / static_cast<double>(p.numel());
            for (std::size_t i = 0; i < p.numel(); ++i) gp[i] += gl * 2.0 * (p[i] - target[i]) * inv_m;
        };
        return out;
    }

    NodeId mean_pool_rows(NodeId x, std::size_t block) {
        NodeId out = push(ops::mean_pool_rows(val(x), block), nullptr, {x});
        nodes_[out].back = [this, x, out, block] {
            const Tensor& g = grad_buf(out);
            Tensor& gx = grad_buf(x);
            const std::size_t m = g.rows(), d = g.cols();
            const double inv = 1.0 / static_cast<double>(block);
            for (std::size_t s = 0; s < m; ++s)
                for (std::size_t t = 0; t < block; ++t)
                    for (std::size_t c = 0; c < d; ++c) gx.data[(s * block + t) * d + c] += g.data[s * d + c] * inv;
        };
        return out;
    }

    NodeId concat_cols(std::span<const NodeId> parts) {
        std::vector<const Tensor*> vals;
        vals.reserve(parts.size());
        for (NodeId p : parts) vals.push_back(&val(p));
        std::vector<NodeId> deps(parts.begin(), parts.end());
        NodeId out = push(ops::concat_cols(vals), nullptr, deps);
        nodes_[out].back = [this, out, deps = std::move(deps)] {
            const Tensor& g = grad_buf(out);
            const std::size_t m = g.rows(), width = g.cols();
            std::size_t off = 0;
            for (NodeId p : deps) {
                Tensor& gp = grad_buf(p);
                const std::size_t c = gp.cols();
                for (std::size_t r = 0; r < m; ++r)
                    for (std::size_t j = 0; j < c; ++j) gp.data[r * c + j] += g.data[r * width + off + j];
                off += c;
            }
        };
        return out;
    }

    NodeId block_matmul_nt(NodeId a, NodeId b, std::size_t block) {
        NodeId out = push(ops::block_matmul_nt(val(a), val(b), block), nullptr, {a, b});
        nodes_[out].back = [this, a, b, out, block] {
            const Tensor& g = grad_buf(out);
            const Tensor& av = val(a);
            const Tensor& bv = val(b);
            Tensor& ga = grad_buf(a);
            Tensor& gb = grad_buf(b);
            const std::size_t m = av.rows() / block, d = av.cols();
            for (std::size_t s = 0; s < m; ++s) {
                ops::CMap gs(&g.data[s * block * block], static_cast<Eigen::Index>(block), static_cast<Eigen::Index>(block));
                ops::CMap as(&av.data[s * block * d], static_cast<Eigen::Index>(block), static_cast<Eigen::Index>(d));
                ops::CMap bs(&bv.data[s * block * d], static_cast<Eigen::Index>(block), static_cast<Eigen::Index>(d));
                ops::MMap gas(&ga.data[s * block * d], static_cast<Eigen::Index>(block), static_cast<Eigen::Index>(d));
                ops::MMap gbs(&gb.data[s * block * d], static_cast<Eigen::Index>(block), static_cast<Eigen::Index>(d));
                gas.noalias() += gs * bs;
                gbs.noalias() += gs.transpose() * as;
            }
        };
        return out;
    }

    NodeId block_matmul_nn(NodeId p, NodeId v, std::size_t block) {
        NodeId out = push(ops::block_matmul_nn(val(p), val(v), block), nullptr, {p, v});
        nodes_[out].back = [this, p, v, out, block] {
            const Tensor& g = grad_buf(out);
            const Tensor& pv = val(p);
            const Tensor& vv = val(v);
            Tensor& gp = grad_buf(p);
            Tensor& gv = grad_buf(v);
            const std::size_t m = pv.rows() / block, d = vv.cols();
            for (std::size_t s = 0; s < m; ++s) {
                ops::CMap gs(&g.data[s * block * d], static_cast<Eigen::Index>(block), static_cast<Eigen::Index>(d));
                ops::CMap ps(&pv.data[s * block * block], static_cast<Eigen::Index>(block), static_cast<Eigen::Index>(block));
                ops::CMap vs(&vv.data[s * block * d], static_cast<Eigen::Index>(block), static_cast<Eigen::Index>(d));
                ops::MMap gps(&gp.data[s * block * block], static_cast<Eigen::Index>(block), static_cast<Eigen::Index>(block));
                ops::MMap gvs(&gv.data[s * block * d], static_cast<Eigen::Index>(block), static_cast<Eigen::Index>(d));
                gps.noalias() += gs * vs.transpose();
                gvs.noalias() += ps.transpose() * gs;
            }
        };
        return out;
    }

    // ----- access -----

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    const Tensor& grad(NodeId id) const { return nodes_[id].grad; }
    std::size_t size() const { return nodes_.size(); }
    std::size_t backward_visits() const { return backward_visits_; }

    // Seeds d(root)/d(root) = 1 and sweeps the tape once in reverse recording
    // order, then flushes gradients of bound nodes into their Parameters.
    void backward(NodeId root) {
        if (val(root).numel() != 1) {
            throw ShapeError("backward: root must be a scalar, got " + val(root).shape_str());
        }
        for (Node& n : nodes_) n.grad = Tensor::zeros(n.value.shape);
        nodes_[root].grad[0] = 1.0;
        backward_visits_ = 0;
        for (std::size_t i = nodes_.size(); i-- > 0;) {
            if (nodes_[i].back) {
                nodes_[i].back();
                ++backward_visits_;
            }
        }
        for (Node& n : nodes_) {
            if (n.bound) {
                for (std::size_t i = 0; i < n.grad.numel(); ++i) n.bound->grad[i] += n.grad[i];
            }
        }
    }

    void reset() {
        nodes_.clear();
        backward_visits_ = 0;
    }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void()> back; // unset for leaves
        Parameter* bound = nullptr;
    };

    Tensor& grad_buf(NodeId id) { return nodes_[id].grad; }
    const Tensor& val(NodeId id) const { return nodes_[id].value; }

    NodeId push(Tensor v, std::function<void()> back, std::initializer_list<NodeId> deps) {
        return push(std::move(v), std::move(back), std::span<const NodeId>(deps.begin(), deps.end()));
    }

    NodeId push(Tensor v, std::function<void()> back, std::span<const NodeId> deps) {
        for (NodeId d : deps) {
            if (d >= nodes_.size()) throw InvalidArgument("tape: op references a node that was never recorded");
        }
        nodes_.push_back(Node{std::move(v), Tensor{}, std::move(back), nullptr});
        return nodes_.size() - 1;
    }

    std::vector<Node> nodes_;
    std::size_t backward_visits_ = 0;
};

// Stable-order container for a model's trainable tensors. std::deque keeps
// Parameter addresses valid as new parameters are created.
class ParamStore {
public:
    Parameter& create(Tensor init) {
        params_.emplace_back(std::move(init), params_.size());
        return params_.back();
    }

    std::vector<Parameter*> all() {
        std::vector<Parameter*> out;
        out.reserve(params_.size());
        for (Parameter& p : params_) out.push_back(&p);
        return out;
    }

    std::vector<const Parameter*> all() const {
        std::vector<const Parameter*> out;
        out.reserve(params_.size());
        for (const Parameter& p : params_) out.push_back(&p);
        return out;
    }

    Parameter& at(std::size_t i) { return params_[i]; }
    const Parameter& at(std::size_t i) const { return params_[i]; }
    std::size_t size() const { return params_.size(); }

    void zero_grad() {
        for (Parameter& p : params_) p.zero_grad();
    }

    std::vector<Tensor> snapshot_values() const {
        std::vector<Tensor> out;
        out.reserve(params_.size());
        for (const Parameter& p : params_) out.push_back(p.value);
        return out;
    }

    void restore_values(const std::vector<Tensor>& vals) {
        if (vals.size() != params_.size()) throw InvalidArgument("restore_values: parameter count mismatch");
        for (std::size_t i = 0; i < vals.size(); ++i) params_[i].value = vals[i];
    }

private:
    std::deque<Parameter> params_;
};

} // namespace ccs::nd
