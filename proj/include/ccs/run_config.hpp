#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "ccs/comparison.hpp"
#include "ccs/jsonutil.hpp"
#include "ccs/synthetic.hpp"

namespace ccs {

struct CsvSource {
    std::string path_7day;
    std::string path_28day;
    std::optional<std::string> schema_path; // apply mode when present, fit mode otherwise
};

struct CompareSettings {
    std::size_t jobs = 1;
    std::size_t importance_repeats = 5;
};

// Everything a run needs, loaded from one JSON file. The seed is mandatory
// (never taken from the clock) and exactly one dataset source must be
// configured, so a run is reproducible from the config alone.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    std::optional<GeneratorConfig> generator;
    std::optional<CsvSource> csv;
    ModelConfigs models;
    CompareSettings compare;

    void validate() const {
        if (generator.has_value() == csv.has_value()) {
            throw ConfigError("config: exactly one dataset source ('generator' or 'csv') is required");
        }
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["seed"] = seed;
        j["output_dir"] = output_dir;
        if (generator) {
            j["dataset"] = {{"generator", generator->to_json()}};
        } else if (csv) {
            nlohmann::ordered_json c = {{"path_7day", csv->path_7day}, {"path_28day", csv->path_28day}};
            if (csv->schema_path) c["schema"] = *csv->schema_path;
            j["dataset"] = {{"csv", c}};
        }
        j["models"] = {{"linear", models.linear.to_json()},
                       {"tree", models.tree.to_json()},
                       {"forest", models.forest.to_json()},
                       {"transformer", models.transformer.to_json()},
                       {"embednet", models.embednet.to_json()}};
        j["compare"] = {{"jobs", compare.jobs}, {"importance_repeats", compare.importance_repeats}};
        return j;
    }

    static RunConfig from_json(const nlohmann::json& j) {
        require_known_keys(j, {"seed", "output_dir", "dataset", "models", "compare"}, "config");
        RunConfig c;
        if (!j.contains("seed")) {
            throw ConfigError("config: 'seed' is required (runs are never seeded from the clock)");
        }
        c.seed = j.at("seed").get<std::uint64_t>();
        maybe_get(j, "output_dir", c.output_dir);

        if (!j.contains("dataset")) throw ConfigError("config: 'dataset' is required");
        const auto& ds = j.at("dataset");
        require_known_keys(ds, {"generator", "csv"}, "config.dataset");
        if (ds.contains("generator")) {
            nlohmann::json g = ds.at("generator");
            if (!g.contains("seed")) g["seed"] = c.seed; // generator inherits the run seed
            c.generator = GeneratorConfig::from_json(g);
        }
        if (ds.contains("csv")) {
            const auto& cj = ds.at("csv");
            require_known_keys(cj, {"path_7day", "path_28day", "schema"}, "config.dataset.csv");
            CsvSource src;
            src.path_7day = cj.at("path_7day").get<std::string>();
            src.path_28day = cj.at("path_28day").get<std::string>();
            if (cj.contains("schema")) src.schema_path = cj.at("schema").get<std::string>();
            c.csv = src;
        }

        if (j.contains("models")) {
            const auto& mj = j.at("models");
            require_known_keys(mj, {"linear", "tree", "forest", "transformer", "embednet"}, "config.models");
            if (mj.contains("linear")) c.models.linear = LinearConfig::from_json(mj.at("linear"));
            if (mj.contains("tree")) c.models.tree = TreeConfig::from_json(mj.at("tree"));
            if (mj.contains("forest")) c.models.forest = ForestConfig::from_json(mj.at("forest"));
            if (mj.contains("transformer")) c.models.transformer = TransformerConfig::from_json(mj.at("transformer"));
            if (mj.contains("embednet")) c.models.embednet = EmbedNetConfig::from_json(mj.at("embednet"));
        }
        if (j.contains("compare")) {
            const auto& cj = j.at("compare");
            require_known_keys(cj, {"jobs", "importance_repeats"}, "config.compare");
            maybe_get(cj, "jobs", c.compare.jobs);
            maybe_get(cj, "importance_repeats", c.compare.importance_repeats);
            if (c.compare.importance_repeats == 0) {
                throw ConfigError("config.compare: importance_repeats must be >= 1");
            }
        }
        c.validate();
        return c;
    }

    static RunConfig from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config file '" + path + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
        }
        return from_json(j);
    }

    // FNV-1a of the canonical dump, for report provenance footers.
    std::string hash_hex() const {
        const std::string dump = to_json().dump();
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char ch : dump) {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
        char buf[20];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
};

} // namespace ccs
