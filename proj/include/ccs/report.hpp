#pragma once

#include <cstdio>
#include <string>

#include <json.hpp>

#include "ccs/comparison.hpp"
#include "ccs/version.hpp"

namespace ccs {

namespace detail {

inline std::string fixed(double v, int width, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%*.*f", width, precision, v);
    return buf;
}

inline std::string padded(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

} // namespace detail

// Human-readable comparison table: one row per method, paired 7-day/28-day
// columns for each metric, then the per-feature importance block.
inline std::string render_text_report(const EvalReport& report, const std::string& config_hash) {
    std::string out;
    out += "Model performance comparison (7-day and 28-day predictions)\n";
    out += "============================================================\n\n";
    out += detail::padded("Method", 20) + "  R2 7-Day  R2 28-Day  MAE 7-Day  MAE 28-Day  MAPE 7-Day  MAPE 28-Day\n";
    out += std::string(20, '-') + "  --------  ---------  ---------  ----------  ----------  -----------\n";
    for (const auto& m : report.models) {
        out += detail::padded(std::string(kind_display_name(m.kind)), 20);
        if (m.error) {
            out += "  FAILED: " + *m.error + "\n";
            continue;
        }
        out += detail::fixed(m.age7->r2, 10, 4);
        out += detail::fixed(m.age28->r2, 11, 4);
        out += detail::fixed(m.age7->mae_psi, 11, 2);
        out += detail::fixed(m.age28->mae_psi, 12, 2);
        out += detail::fixed(m.age7->mape_pct, 12, 2);
        out += detail::fixed(m.age28->mape_pct, 13, 2);
        out += "\n";
    }
    out += "\nMAE in psi, MAPE in percent; metrics computed on the held-out 20% test split.\n";

    out += "\nRelative feature importance (28-day fit, normalized to sum 1)\n";
    out += "--------------------------------------------------------------\n\n";
    out += detail::padded("Feature", 22);
    for (const auto& m : report.models) {
        if (!m.error) out += detail::padded(std::string(kind_name(m.kind)), 13);
    }
    out += "\n" + detail::padded("(method)", 22);
    for (const auto& m : report.models) {
        if (!m.error) out += detail::padded("[" + m.importance.method + "]", 13);
    }
    out += "\n";
    for (std::size_t f = 0; f < report.feature_names.size(); ++f) {
        out += detail::padded(report.feature_names[f], 22);
        for (const auto& m : report.models) {
            if (m.error) continue;
            out += detail::padded(detail::fixed(m.importance.values[f], 0, 4), 13);
        }
        out += "\n";
    }

    out += "\n";
    out += "test rows: 7-day " + std::to_string(report.actual7.size()) + ", 28-day " +
           std::to_string(report.actual28.size()) + "; train rows: 7-day " + std::to_string(report.n_train7) +
           ", 28-day " + std::to_string(report.n_train28) + "\n";
    out += "split seed: " + std::to_string(report.seed) + "\n";
    out += "ccspred " + std::string(kVersion) + "  config " + config_hash + "\n";
    return out;
}

// Machine-readable companion with full precision, importance vectors, loss
// histories and the split seed.
inline nlohmann::ordered_json render_json_report(const EvalReport& report, const std::string& config_hash) {
    nlohmann::ordered_json j;
    j["version"] = kVersion;
    j["config_hash"] = config_hash;
    j["split_seed"] = report.seed;
    j["feature_names"] = report.feature_names;
    j["n_test"] = {{"age7", report.actual7.size()}, {"age28", report.actual28.size()}};
    j["n_train"] = {{"age7", report.n_train7}, {"age28", report.n_train28}};
    j["models"] = nlohmann::ordered_json::array();
    for (const auto& m : report.models) {
        nlohmann::ordered_json mj;
        mj["kind"] = kind_name(m.kind);
        if (m.error) {
            mj["error"] = *m.error;
            j["models"].push_back(mj);
            continue;
        }
        auto metric_json = [](const MetricRow& row) {
            return nlohmann::ordered_json{
                {"r2", row.r2}, {"mae_psi", row.mae_psi}, {"mape_percent", row.mape_pct}, {"n_test", row.n_test}};
        };
        mj["metrics"] = {{"age7", metric_json(*m.age7)}, {"age28", metric_json(*m.age28)}};
        mj["importance"] = {{"method", m.importance.method},
                            {"values", m.importance.values},
                            {"degenerate_uniform", m.importance.degenerate_uniform}};
        auto loss_json = [](const std::vector<EpochLoss>& hist) {
            nlohmann::ordered_json arr = nlohmann::ordered_json::array();
            for (const auto& e : hist) {
                arr.push_back({{"epoch", e.epoch}, {"train_mse", e.train_mse}, {"val_mse", e.val_mse}});
            }
            return arr;
        };
        if (!m.loss7.empty() || !m.loss28.empty()) {
            mj["loss_history"] = {{"age7", loss_json(m.loss7)}, {"age28", loss_json(m.loss28)}};
        }
        j["models"].push_back(mj);
    }
    return j;
}

} // namespace ccs
