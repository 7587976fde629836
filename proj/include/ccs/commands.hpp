#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "ccs/model_io.hpp"
#include "ccs/report.hpp"
#include "ccs/run_config.hpp"

namespace ccs {

// CCSPRED_OUTPUT_DIR overrides the configured output directory.
inline std::filesystem::path resolve_output_dir(const RunConfig& cfg) {
    if (const char* env = std::getenv("CCSPRED_OUTPUT_DIR")) {
        if (*env != '\0') return env;
    }
    return cfg.output_dir;
}

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

} // namespace detail

struct DatasetPair {
    EncodedDataset age7;
    EncodedDataset age28;
};

// Materialize the configured dataset source: run the generator, or ingest
// the CSV pair (strict vocabulary when a schema file is configured, fit mode
// otherwise).
inline DatasetPair load_dataset_pair(const RunConfig& cfg) {
    if (cfg.generator) {
        SyntheticData data = generate_synthetic(*cfg.generator);
        return {std::move(data.age7), std::move(data.age28)};
    }
    FeatureSchema schema = FeatureSchema::concrete_default();
    LoadOptions opts;
    if (cfg.csv->schema_path) {
        std::ifstream in(*cfg.csv->schema_path);
        if (!in) throw IoError("cannot open schema file '" + *cfg.csv->schema_path + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError("schema file '" + *cfg.csv->schema_path + "' is not valid JSON: " + e.what());
        }
        schema = FeatureSchema::from_json(j);
        opts.extend_vocab = false;
    } else {
        opts.extend_vocab = true;
    }
    LoadResult r7 = load_csv(cfg.csv->path_7day, schema, Age::d7, opts);
    LoadResult r28 = load_csv(cfg.csv->path_28day, schema, Age::d28, opts);
    if (r7.dropped || r28.dropped) {
        std::cerr << "note: dropped " << r7.dropped << " unusable 7-day rows and " << r28.dropped
                  << " unusable 28-day rows\n";
    }
    // Vocabulary may have grown while reading the 7-day file; re-encode so
    // both datasets share one schema instance.
    if (opts.extend_vocab) {
        auto shared = std::make_shared<FeatureSchema>(schema);
        r7.data.schema = shared;
        r28.data.schema = shared;
        r7.data.validate();
        r28.data.validate();
    }
    return {std::move(r7.data), std::move(r28.data)};
}

// generate: write the synthetic CSV pair plus a sidecar recording the exact
// generator config and seed, so regeneration is byte-identical.
inline int cmd_generate(const RunConfig& cfg) {
    if (!cfg.generator) throw ConfigError("generate: config must use the 'generator' dataset source");
    const SyntheticData data = generate_synthetic(*cfg.generator);
    const std::filesystem::path dir = resolve_output_dir(cfg);
    std::filesystem::create_directories(dir);
    csv::write_file((dir / "synthetic_7day.csv").string(), to_csv_table(data.age7));
    csv::write_file((dir / "synthetic_28day.csv").string(), to_csv_table(data.age28));
    nlohmann::ordered_json sidecar;
    sidecar["generator"] = cfg.generator->to_json();
    sidecar["files"] = {{"age7", "synthetic_7day.csv"}, {"age28", "synthetic_28day.csv"}};
    detail::write_text_file(dir / "generator_sidecar.json", sidecar.dump(2) + "\n");
    std::cout << "wrote " << data.age7.n << " rows per age to " << dir.string() << "\n";
    return 0;
}

// train: fit one model on the 80% split of one age and persist it.
inline int cmd_train(const RunConfig& cfg, ModelKind kind, Age age) {
    DatasetPair pair = load_dataset_pair(cfg);
    const EncodedDataset& ds = age == Age::d7 ? pair.age7 : pair.age28;
    const SplitResult split = split_80_20(ds, mix_seed(cfg.seed, static_cast<std::uint64_t>(age_days(age))));

    auto model = make_model(kind, cfg.models);
    const std::uint64_t fit_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(kind) * 100 +
                                                          static_cast<std::uint64_t>(age_days(age)));
    model->fit(split.train, fit_seed);

    const std::vector<double> train_pred = model->predict(split.train);
    std::printf("train    n=%zu  R2=%.4f  MAE=%.2f psi  MAPE=%.2f%%\n", split.train.n,
                r2(split.train.target, train_pred), mae(split.train.target, train_pred),
                mape(split.train.target, train_pred));
    const auto& history = model->loss_history();
    if (!history.empty()) {
        double best_val = std::numeric_limits<double>::infinity();
        std::size_t best_epoch = 0;
        for (const auto& e : history) {
            if (e.val_mse < best_val) {
                best_val = e.val_mse;
                best_epoch = e.epoch;
            }
        }
        std::printf("validate best epoch %zu  val MSE=%.6f (ksi^2)\n", best_epoch, best_val);
    }

    const std::filesystem::path dir = resolve_output_dir(cfg);
    std::filesystem::create_directories(dir);
    const std::string name = "model_" + std::string(kind_name(kind)) + "_" + std::to_string(age_days(age)) + "d.ccsm";
    save_model_file((dir / name).string(), *model, *ds.schema, fit_seed);
    detail::write_text_file(dir / "schema.json", ds.schema->to_json().dump(2) + "\n");
    std::cout << "wrote " << (dir / name).string() << "\n";
    return 0;
}

// compare: the full five-model protocol on both ages. Writes the aligned
// text report, the machine-readable JSON report, and one scatter CSV
// (actual_psi,predicted_psi) per model per age. Returns nonzero if any model
// failed; partial outputs are still written.
inline int cmd_compare(const RunConfig& cfg) {
    DatasetPair pair = load_dataset_pair(cfg);
    const EvalReport report = run_comparison(pair.age7, pair.age28, cfg.models, cfg.seed,
                                             cfg.compare.importance_repeats, cfg.compare.jobs);
    const std::filesystem::path dir = resolve_output_dir(cfg);
    std::filesystem::create_directories(dir);
    const std::string config_hash = cfg.hash_hex();
    detail::write_text_file(dir / "report.txt", render_text_report(report, config_hash));
    detail::write_text_file(dir / "report.json", render_json_report(report, config_hash).dump(2) + "\n");

    for (const auto& m : report.models) {
        if (m.error) {
            std::cerr << kind_name(m.kind) << " failed: " << *m.error << "\n";
            continue;
        }
        for (Age age : {Age::d7, Age::d28}) {
            const auto& actual = age == Age::d7 ? report.actual7 : report.actual28;
            const auto& pred = age == Age::d7 ? m.pred7 : m.pred28;
            csv::Table t;
            t.header = {"actual_psi", "predicted_psi"};
            t.rows.reserve(actual.size());
            for (std::size_t i = 0; i < actual.size(); ++i) {
                t.rows.push_back({csv::format_double(actual[i]), csv::format_double(pred[i])});
            }
            const std::string name = "scatter_" + std::string(kind_name(m.kind)) + "_" +
                                     std::to_string(age_days(age)) + ".csv";
            csv::write_file((dir / name).string(), t);
        }
    }
    std::cout << render_text_report(report, config_hash);
    return report.ok() ? 0 : 2;
}

// predict: append a predicted_psi column to a conforming input CSV.
inline int cmd_predict(const std::string& model_path, const std::string& input_csv,
                       const std::string& output_csv) {
    ModelContainer container = load_model_file(model_path);

    FeatureSchema schema = container.schema;
    LoadOptions opts;
    opts.extend_vocab = false;
    opts.allow_empty = true;
    opts.require_target = false;
    opts.require_all_rows = true;
    const LoadResult loaded = load_csv(input_csv, schema, Age::d28, opts);

    const std::vector<double> pred = container.model->predict(loaded.data);

    csv::Table table = csv::read_file(input_csv);
    table.header.push_back("predicted_psi");
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        table.rows[i].push_back(csv::format_double(pred[i]));
    }
    csv::write_file(output_csv, table);
    std::cout << "wrote " << pred.size() << " predictions to " << output_csv << "\n";
    return 0;
}

} // namespace ccs
