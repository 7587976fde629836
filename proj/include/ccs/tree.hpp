#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "ccs/jsonutil.hpp"
#include "ccs/model.hpp"
#include "ccs/rng.hpp"

namespace ccs {

struct TreeConfig {
    int max_depth = 12; // -1 = unlimited; 0 = a single leaf
    std::size_t min_samples_leaf = 5;
    std::size_t min_samples_split = 10;

    nlohmann::ordered_json to_json() const {
        return {{"max_depth", max_depth},
                {"min_samples_leaf", min_samples_leaf},
                {"min_samples_split", min_samples_split}};
    }

    static TreeConfig from_json(const nlohmann::json& j) {
        require_known_keys(j, {"max_depth", "min_samples_leaf", "min_samples_split"}, "tree config");
        TreeConfig c;
        maybe_get(j, "max_depth", c.max_depth);
        maybe_get(j, "min_samples_leaf", c.min_samples_leaf);
        maybe_get(j, "min_samples_split", c.min_samples_split);
        if (c.min_samples_leaf == 0) throw ConfigError("tree config: min_samples_leaf must be >= 1");
        return c;
    }
};

// Unified feature index: [0, p_num) numeric thresholds, [p_num, p)
// categorical one-vs-rest membership.
struct SplitRule {
    std::size_t feature = 0;
    bool categorical = false;
    double threshold = 0.0;   // numeric: x <= threshold routes left
    std::size_t category = 0; // categorical: x == category routes left
};

struct TreeNode {
    bool is_leaf = true;
    double prediction = 0.0; // mean of training targets reaching the leaf
    std::size_t count = 0;
    SplitRule rule;
    std::size_t left = 0;
    std::size_t right = 0;
};

struct BestSplit {
    SplitRule rule;
    double gain = 0.0; // weighted variance reduction
};

namespace detail {

struct TargetStats {
    std::size_t n = 0;
    double sum = 0.0;
    double sumsq = 0.0;

    void add(double y) {
        ++n;
        sum += y;
        sumsq += y * y;
    }

    double mean() const { return sum / static_cast<double>(n); }

    double variance() const {
        const double m = mean();
        return std::max(0.0, sumsq / static_cast<double>(n) - m * m);
    }
};

inline double feature_value(const EncodedDataset& ds, std::size_t row, std::size_t feature) {
    const std::size_t pn = ds.schema->num_count();
    return feature < pn ? ds.num_at(row, feature)
                        : static_cast<double>(ds.cat_at(row, feature - pn));
}

} // namespace detail

// Greedy split search maximizing weighted variance reduction
//   gain = Var(parent) - (nL/n) Var(L) - (nR/n) Var(R).
// Numeric candidates are midpoints between consecutive distinct sorted
// values; categorical candidates are one-vs-rest per category. Ties break to
// the lowest feature index, then the lowest threshold/category; the features
// span is scanned in ascending order internally to guarantee that.
inline std::optional<BestSplit> best_split(const EncodedDataset& ds, std::span<const std::size_t> rows,
                                           std::span<const std::size_t> features,
                                           std::size_t min_samples_leaf = 1) {
    const std::size_t n = rows.size();
    if (n < 2) return std::nullopt;

    detail::TargetStats parent;
    for (std::size_t r : rows) parent.add(ds.target[r]);
    const double parent_var = parent.variance();
    if (!(parent_var > 0.0)) return std::nullopt;

    std::vector<std::size_t> feats(features.begin(), features.end());
    std::sort(feats.begin(), feats.end());

    const std::size_t pn = ds.schema->num_count();
    std::optional<BestSplit> best;
    std::vector<std::pair<double, double>> sorted; // (value, target)

    for (std::size_t f : feats) {
        if (f < pn) {
            sorted.clear();
            sorted.reserve(n);
            for (std::size_t r : rows) sorted.emplace_back(ds.num_at(r, f), ds.target[r]);
            std::stable_sort(sorted.begin(), sorted.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            detail::TargetStats left;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left.add(sorted[i].second);
                if (sorted[i].first == sorted[i + 1].first) continue;
                const std::size_t nl = i + 1, nr = n - nl;
                if (nl < min_samples_leaf || nr < min_samples_leaf) continue;
                detail::TargetStats right{nr, parent.sum - left.sum, parent.sumsq - left.sumsq};
                const double gain = parent_var -
                                    (static_cast<double>(nl) / static_cast<double>(n)) * left.variance() -
                                    (static_cast<double>(nr) / static_cast<double>(n)) * right.variance();
                if (gain > 0.0 && (!best || gain > best->gain)) {
                    best = BestSplit{{f, false, (sorted[i].first + sorted[i + 1].first) / 2.0, 0}, gain};
                }
            }
        } else {
            const std::size_t cat_idx = f - pn;
            const std::size_t k = ds.schema->categorical[cat_idx].cardinality();
            std::vector<detail::TargetStats> per_cat(k);
            for (std::size_t r : rows) per_cat[ds.cat_at(r, cat_idx)].add(ds.target[r]);
            for (std::size_t c = 0; c < k; ++c) {
                const std::size_t nl = per_cat[c].n, nr = n - nl;
                if (nl < min_samples_leaf || nr < min_samples_leaf || nl == 0 || nr == 0) continue;
                detail::TargetStats right{nr, parent.sum - per_cat[c].sum, parent.sumsq - per_cat[c].sumsq};
                const double gain = parent_var -
                                    (static_cast<double>(nl) / static_cast<double>(n)) * per_cat[c].variance() -
                                    (static_cast<double>(nr) / static_cast<double>(n)) * right.variance();
                if (gain > 0.0 && (!best || gain > best->gain)) {
                    best = BestSplit{{f, true, 0.0, c}, gain};
                }
            }
        }
    }
    return best;
}

namespace detail {

// Shared recursive partitioning core. The sampler yields the candidate
// feature set for each node (all features for a standalone tree, m_try drawn
// from the tree's RNG for a forest member); nodes are expanded depth-first,
// left child first, so RNG consumption order is well-defined.
struct TreeBuildResult {
    std::vector<TreeNode> nodes;
    std::vector<double> importance; // raw (n_node/n_root) * gain per feature
};

inline TreeBuildResult build_tree(const EncodedDataset& ds, std::vector<std::size_t> root_rows,
                                  const TreeConfig& cfg,
                                  const std::function<std::vector<std::size_t>()>& sample_features) {
    TreeBuildResult out;
    out.importance.assign(ds.schema->feature_count(), 0.0);
    const double n_root = static_cast<double>(root_rows.size());
    const std::size_t pn = ds.schema->num_count();

    struct WorkItem {
        std::size_t node;
        std::vector<std::size_t> rows;
        int depth;
    };
    std::vector<WorkItem> stack;
    out.nodes.emplace_back();
    stack.push_back({0, std::move(root_rows), 0});

    while (!stack.empty()) {
        WorkItem item = std::move(stack.back());
        stack.pop_back();
        TreeNode& node = out.nodes[item.node];

        TargetStats stats;
        for (std::size_t r : item.rows) stats.add(ds.target[r]);
        node.count = stats.n;
        node.prediction = stats.mean();

        const bool depth_ok = cfg.max_depth < 0 || item.depth < cfg.max_depth;
        if (!depth_ok || stats.n < cfg.min_samples_split || stats.n < 2 * cfg.min_samples_leaf) continue;

        const std::vector<std::size_t> feats = sample_features();
        const auto split = best_split(ds, item.rows, feats, cfg.min_samples_leaf);
        if (!split) continue;

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : item.rows) {
            const bool go_left = split->rule.categorical
                                     ? ds.cat_at(r, split->rule.feature - pn) == split->rule.category
                                     : ds.num_at(r, split->rule.feature) <= split->rule.threshold;
            (go_left ? left_rows : right_rows).push_back(r);
        }

        node.is_leaf = false;
        node.rule = split->rule;
        out.importance[split->rule.feature] += (static_cast<double>(stats.n) / n_root) * split->gain;

        const std::size_t left_id = out.nodes.size();
        out.nodes.emplace_back();
        const std::size_t right_id = out.nodes.size();
        out.nodes.emplace_back();
        out.nodes[item.node].left = left_id;   // re-index: emplace may have moved `node`
        out.nodes[item.node].right = right_id;
        stack.push_back({right_id, std::move(right_rows), item.depth + 1});
        stack.push_back({left_id, std::move(left_rows), item.depth + 1});
    }
    return out;
}

inline double predict_row(const std::vector<TreeNode>& nodes, const EncodedDataset& ds, std::size_t row) {
    const std::size_t pn = ds.schema->num_count();
    std::size_t cur = 0;
    while (!nodes[cur].is_leaf) {
        const SplitRule& rule = nodes[cur].rule;
        const bool go_left = rule.categorical ? ds.cat_at(row, rule.feature - pn) == rule.category
                                              : ds.num_at(row, rule.feature) <= rule.threshold;
        cur = go_left ? nodes[cur].left : nodes[cur].right;
    }
    return nodes[cur].prediction;
}

} // namespace detail

// Greedy binary regression tree; deterministic given input order.
class DecisionTree : public Model {
public:
    explicit DecisionTree(TreeConfig cfg = {}) : cfg_(cfg) {}

    ModelKind kind() const override { return ModelKind::tree; }

    void fit(const EncodedDataset& train, std::uint64_t /*seed*/) override {
        if (train.n < 1) throw InvalidArgument("fit_tree: empty training set");
        std::vector<std::size_t> rows(train.n);
        std::iota(rows.begin(), rows.end(), 0);
        std::vector<std::size_t> all_feats(train.schema->feature_count());
        std::iota(all_feats.begin(), all_feats.end(), 0);
        auto result = detail::build_tree(train, std::move(rows), cfg_, [&] { return all_feats; });
        nodes_ = std::move(result.nodes);
        importance_ = std::move(result.importance);
        schema_hash_ = train.schema->hash();
    }

    std::vector<double> predict(const EncodedDataset& rows) const override {
        require_fitted_schema(rows, schema_hash_);
        std::vector<double> out(rows.n);
        for (std::size_t r = 0; r < rows.n; ++r) out[r] = detail::predict_row(nodes_, rows, r);
        return out;
    }

    std::optional<std::vector<double>> intrinsic_importance() const override {
        std::vector<double> imp = importance_;
        double total = 0.0;
        for (double v : imp) total += v;
        if (total > 0.0) {
            for (double& v : imp) v /= total;
        } else if (!imp.empty()) {
            for (double& v : imp) v = 1.0 / static_cast<double>(imp.size());
        }
        return imp;
    }

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const std::vector<double>& raw_importance() const { return importance_; }
    const TreeConfig& config() const { return cfg_; }
    std::uint64_t schema_hash() const { return schema_hash_; }

    void restore(std::vector<TreeNode> nodes, std::vector<double> importance, std::uint64_t schema_hash) {
        nodes_ = std::move(nodes);
        importance_ = std::move(importance);
        schema_hash_ = schema_hash;
    }

private:
    TreeConfig cfg_;
    std::vector<TreeNode> nodes_;
    std::vector<double> importance_;
    std::uint64_t schema_hash_ = 0;
};

} // namespace ccs
