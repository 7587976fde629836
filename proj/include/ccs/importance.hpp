#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccs/metrics.hpp"
#include "ccs/model.hpp"
#include "ccs/rng.hpp"

namespace ccs {

struct ImportanceResult {
    std::vector<double> values; // per original feature, non-negative, sums to 1
    std::string method;         // "intrinsic" or "permutation"
    bool degenerate_uniform = false;
};

namespace detail {

inline void normalize_importance(ImportanceResult& r) {
    double total = 0.0;
    for (double v : r.values) total += v;
    if (total > 0.0) {
        for (double& v : r.values) v /= total;
    } else {
        for (double& v : r.values) v = 1.0 / static_cast<double>(r.values.size());
        r.degenerate_uniform = true;
    }
}

} // namespace detail

// Model-agnostic importance: shuffle one original feature at a time (a
// categorical feature is permuted as a whole column, which permutes its
// one-hot group jointly) and measure the MAE degradation against the
// unshuffled baseline. Negative deltas clip to zero; the result is
// normalized to sum 1, falling back to uniform for constant predictors.
inline ImportanceResult permutation_importance(const Model& model, const EncodedDataset& test,
                                               std::size_t repeats, std::uint64_t seed) {
    if (test.n < 10) throw InvalidArgument("permutation_importance: need at least 10 test rows");
    if (repeats == 0) throw InvalidArgument("permutation_importance: repeats must be >= 1");

    const std::size_t pn = test.schema->num_count();
    const std::size_t p = test.schema->feature_count();
    const double baseline = mae(test.target, model.predict(test));

    ImportanceResult result;
    result.method = "permutation";
    result.values.assign(p, 0.0);

    std::vector<std::size_t> perm(test.n);
    for (std::size_t f = 0; f < p; ++f) {
        double delta_sum = 0.0;
        for (std::size_t rep = 0; rep < repeats; ++rep) {
            Rng rng(mix_seed(mix_seed(seed, f), rep));
            std::iota(perm.begin(), perm.end(), 0);
            for (std::size_t i = test.n; i-- > 1;) {
                const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
                std::swap(perm[i], perm[j]);
            }
            EncodedDataset shuffled = test;
            if (f < pn) {
                for (std::size_t r = 0; r < test.n; ++r) shuffled.numeric[r * pn + f] = test.num_at(perm[r], f);
            } else {
                const std::size_t c = f - pn;
                const std::size_t pc = test.schema->cat_count();
                for (std::size_t r = 0; r < test.n; ++r) shuffled.categorical[r * pc + c] = test.cat_at(perm[r], c);
            }
            delta_sum += mae(test.target, model.predict(shuffled)) - baseline;
        }
        result.values[f] = std::max(0.0, delta_sum / static_cast<double>(repeats));
    }
    detail::normalize_importance(result);
    return result;
}

// Intrinsic importance where the model family defines one, otherwise
// permutation importance on the test split. The method label is carried in
// the result.
inline ImportanceResult feature_importance(const Model& model, const EncodedDataset& test,
                                           std::size_t repeats, std::uint64_t seed) {
    if (auto intrinsic = model.intrinsic_importance()) {
        ImportanceResult r;
        r.values = std::move(*intrinsic);
        r.method = "intrinsic";
        detail::normalize_importance(r);
        return r;
    }
    return permutation_importance(model, test, repeats, seed);
}

} // namespace ccs
