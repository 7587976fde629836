#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ccs/embed_net.hpp"
#include "ccs/forest.hpp"
#include "ccs/importance.hpp"
#include "ccs/linear_model.hpp"
#include "ccs/metrics.hpp"
#include "ccs/transformer.hpp"
#include "ccs/tree.hpp"

namespace ccs {

struct ModelConfigs {
    LinearConfig linear;
    TreeConfig tree;
    ForestConfig forest;
    TransformerConfig transformer;
    EmbedNetConfig embednet;
};

inline std::unique_ptr<Model> make_model(ModelKind kind, const ModelConfigs& cfgs) {
    switch (kind) {
        case ModelKind::linear: return std::make_unique<LinearModel>(cfgs.linear);
        case ModelKind::tree: return std::make_unique<DecisionTree>(cfgs.tree);
        case ModelKind::forest: return std::make_unique<RandomForest>(cfgs.forest);
        case ModelKind::transformer: return std::make_unique<TabTransformer>(cfgs.transformer);
        case ModelKind::embednet: return std::make_unique<EmbedNet>(cfgs.embednet);
    }
    throw InvalidArgument("make_model: unknown model kind");
}

struct MetricRow {
    double r2 = 0.0;
    double mae_psi = 0.0;
    double mape_pct = 0.0;
    std::size_t n_test = 0;
};

struct ModelEntry {
    ModelKind kind = ModelKind::linear;
    std::optional<MetricRow> age7;
    std::optional<MetricRow> age28;
    std::vector<double> pred7;  // test-split predictions, psi
    std::vector<double> pred28;
    ImportanceResult importance; // computed from the 28-day fit
    std::vector<EpochLoss> loss7;
    std::vector<EpochLoss> loss28;
    std::optional<std::string> error;
};

struct EvalReport {
    std::uint64_t seed = 0;
    std::vector<std::string> feature_names;
    std::vector<double> actual7;  // test-split targets, psi
    std::vector<double> actual28;
    std::size_t n_train7 = 0, n_train28 = 0;
    std::vector<ModelEntry> models; // one per kind, fixed order

    bool ok() const {
        for (const auto& m : models) {
            if (m.error) return false;
        }
        return true;
    }
};

// The shared protocol: one 80-20 split per age, every model fitted on the
// identical train rows and scored on the identical test rows with r2, MAE
// and MAPE. Feature importance comes from the 28-day fit (intrinsic where
// the family defines one, permutation otherwise). Per-model failures are
// recorded in the report instead of aborting the run. Deterministic in
// (data, configs, seed); model trainings are independent jobs that may run
// concurrently.
inline EvalReport run_comparison(const EncodedDataset& age7, const EncodedDataset& age28,
                                 const ModelConfigs& cfgs, std::uint64_t seed,
                                 std::size_t importance_repeats = 5, std::size_t jobs = 1) {
    const SplitResult split7 = split_80_20(age7, mix_seed(seed, 7));
    const SplitResult split28 = split_80_20(age28, mix_seed(seed, 28));

    EvalReport report;
    report.seed = seed;
    report.feature_names = age28.schema->feature_names();
    report.actual7 = split7.test.target;
    report.actual28 = split28.test.target;
    report.n_train7 = split7.train.n;
    report.n_train28 = split28.train.n;
    report.models.resize(std::size(kAllModelKinds));

    auto run_one = [&](std::size_t i) {
        const ModelKind kind = kAllModelKinds[i];
        ModelEntry entry;
        entry.kind = kind;
        try {
            auto model7 = make_model(kind, cfgs);
            model7->fit(split7.train, mix_seed(seed, static_cast<std::uint64_t>(kind) * 100 + 7));
            entry.pred7 = model7->predict(split7.test);
            entry.age7 = MetricRow{r2(split7.test.target, entry.pred7), mae(split7.test.target, entry.pred7),
                                   mape(split7.test.target, entry.pred7), split7.test.n};
            entry.loss7 = model7->loss_history();

            auto model28 = make_model(kind, cfgs);
            model28->fit(split28.train, mix_seed(seed, static_cast<std::uint64_t>(kind) * 100 + 28));
            entry.pred28 = model28->predict(split28.test);
            entry.age28 = MetricRow{r2(split28.test.target, entry.pred28), mae(split28.test.target, entry.pred28),
                                    mape(split28.test.target, entry.pred28), split28.test.n};
            entry.loss28 = model28->loss_history();

            entry.importance = feature_importance(*model28, split28.test, importance_repeats,
                                                  mix_seed(seed, static_cast<std::uint64_t>(kind) * 100 + 77));
        } catch (const Error& e) {
            entry.error = e.what();
        }
        report.models[i] = std::move(entry);
    };

    const std::size_t n_jobs = std::max<std::size_t>(1, jobs);
    if (n_jobs == 1) {
        for (std::size_t i = 0; i < report.models.size(); ++i) run_one(i);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < n_jobs; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < report.models.size(); i += n_jobs) run_one(i);
            });
        }
        for (auto& th : pool) th.join();
    }
    return report;
}

} // namespace ccs
