#pragma once

#include <cstdint>
#include <numeric>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ccs/tree.hpp"

namespace ccs {

struct ForestConfig {
    std::size_t n_trees = 200;
    std::size_t m_try = 0; // 0 = regression default max(1, p/3)
    bool bootstrap = true;
    int max_depth = -1; // unlimited
    std::size_t min_samples_leaf = 1;
    std::size_t min_samples_split = 2;
    std::size_t threads = 1;

    std::size_t resolve_m_try(std::size_t p) const { return m_try == 0 ? std::max<std::size_t>(1, p / 3) : m_try; }

    nlohmann::ordered_json to_json() const {
        return {{"n_trees", n_trees},       {"m_try", m_try},
                {"bootstrap", bootstrap},   {"max_depth", max_depth},
                {"min_samples_leaf", min_samples_leaf}, {"min_samples_split", min_samples_split},
                {"threads", threads}};
    }

    static ForestConfig from_json(const nlohmann::json& j) {
        require_known_keys(j, {"n_trees", "m_try", "bootstrap", "max_depth", "min_samples_leaf",
                               "min_samples_split", "threads"},
                           "forest config");
        ForestConfig c;
        maybe_get(j, "n_trees", c.n_trees);
        maybe_get(j, "m_try", c.m_try);
        maybe_get(j, "bootstrap", c.bootstrap);
        maybe_get(j, "max_depth", c.max_depth);
        maybe_get(j, "min_samples_leaf", c.min_samples_leaf);
        maybe_get(j, "min_samples_split", c.min_samples_split);
        maybe_get(j, "threads", c.threads);
        if (c.n_trees == 0) throw ConfigError("forest config: n_trees must be >= 1");
        if (c.min_samples_leaf == 0) throw ConfigError("forest config: min_samples_leaf must be >= 1");
        return c;
    }
};

// Bagged ensemble of regression trees. Every tree owns an RNG derived from
// (master seed, tree index), so fits are bit-identical for any worker-thread
// count and trees may be trained concurrently.
class RandomForest : public Model {
public:
    explicit RandomForest(ForestConfig cfg = {}) : cfg_(cfg) {}

    ModelKind kind() const override { return ModelKind::forest; }

    void fit(const EncodedDataset& train, std::uint64_t seed) override {
        if (train.n < 2) throw InvalidArgument("fit_forest: need at least 2 rows");
        const std::size_t p = train.schema->feature_count();
        const std::size_t m_try = cfg_.resolve_m_try(p);
        if (m_try > p) throw ConfigError("fit_forest: m_try exceeds feature count");

        const TreeConfig tree_cfg{cfg_.max_depth, cfg_.min_samples_leaf, cfg_.min_samples_split};
        trees_.assign(cfg_.n_trees, {});
        tree_importance_.assign(cfg_.n_trees, {});
        tree_seeds_.resize(cfg_.n_trees);
        for (std::size_t t = 0; t < cfg_.n_trees; ++t) tree_seeds_[t] = mix_seed(seed, t);

        auto fit_one = [&](std::size_t t) {
            Rng rng(tree_seeds_[t]);
            std::vector<std::size_t> rows(train.n);
            if (cfg_.bootstrap) {
                for (std::size_t i = 0; i < train.n; ++i) rows[i] = static_cast<std::size_t>(rng.below(train.n));
            } else {
                std::iota(rows.begin(), rows.end(), 0);
            }
            std::vector<std::size_t> pool(p);
            auto sampler = [&]() {
                std::iota(pool.begin(), pool.end(), 0);
                for (std::size_t i = 0; i < m_try; ++i) {
                    const std::size_t j = i + static_cast<std::size_t>(rng.below(p - i));
                    std::swap(pool[i], pool[j]);
                }
                std::vector<std::size_t> chosen(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m_try));
                std::sort(chosen.begin(), chosen.end());
                return chosen;
            };
            auto result = detail::build_tree(train, std::move(rows), tree_cfg, sampler);
            trees_[t] = std::move(result.nodes);
            tree_importance_[t] = std::move(result.importance);
        };

        const std::size_t workers = std::max<std::size_t>(1, cfg_.threads);
        if (workers == 1) {
            for (std::size_t t = 0; t < cfg_.n_trees; ++t) fit_one(t);
        } else {
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back([&, w] {
                    for (std::size_t t = w; t < cfg_.n_trees; t += workers) fit_one(t);
                });
            }
            for (auto& th : pool) th.join();
        }
        schema_hash_ = train.schema->hash();
        feature_count_ = p;
    }

    std::vector<double> predict(const EncodedDataset& rows) const override {
        require_fitted_schema(rows, schema_hash_);
        std::vector<double> out(rows.n, 0.0);
        for (const auto& tree : trees_) {
            for (std::size_t r = 0; r < rows.n; ++r) out[r] += detail::predict_row(tree, rows, r);
        }
        const double inv = 1.0 / static_cast<double>(trees_.size());
        for (double& v : out) v *= inv;
        return out;
    }

    // Total variance reduction per feature, averaged over trees, normalized.
    std::optional<std::vector<double>> intrinsic_importance() const override {
        std::vector<double> imp(feature_count_, 0.0);
        for (const auto& ti : tree_importance_) {
            for (std::size_t f = 0; f < ti.size(); ++f) imp[f] += ti[f];
        }
        double total = 0.0;
        for (double v : imp) total += v;
        if (total > 0.0) {
            for (double& v : imp) v /= total;
        } else if (!imp.empty()) {
            for (double& v : imp) v = 1.0 / static_cast<double>(imp.size());
        }
        return imp;
    }

    const std::vector<std::vector<TreeNode>>& trees() const { return trees_; }
    const std::vector<std::uint64_t>& tree_seeds() const { return tree_seeds_; }
    const ForestConfig& config() const { return cfg_; }
    std::uint64_t schema_hash() const { return schema_hash_; }

    void restore(std::vector<std::vector<TreeNode>> trees, std::vector<std::vector<double>> importance,
                 std::vector<std::uint64_t> seeds, std::uint64_t schema_hash, std::size_t feature_count) {
        trees_ = std::move(trees);
        tree_importance_ = std::move(importance);
        tree_seeds_ = std::move(seeds);
        schema_hash_ = schema_hash;
        feature_count_ = feature_count;
    }
    const std::vector<std::vector<double>>& tree_importance() const { return tree_importance_; }

private:
    ForestConfig cfg_;
    std::vector<std::vector<TreeNode>> trees_;
    std::vector<std::vector<double>> tree_importance_;
    std::vector<std::uint64_t> tree_seeds_;
    std::uint64_t schema_hash_ = 0;
    std::size_t feature_count_ = 0;
};

} // namespace ccs
