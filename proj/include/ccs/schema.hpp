#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "ccs/error.hpp"

namespace ccs {

enum class Age : int { d7 = 7, d28 = 28 };

inline int age_days(Age a) { return static_cast<int>(a); }

inline Age age_from_days(int d) {
    if (d == 7) return Age::d7;
    if (d == 28) return Age::d28;
    throw InvalidArgument("age must be 7 or 28, got " + std::to_string(d));
}

struct NumericalSpec {
    std::string name;
    std::string unit;
    double min = 0.0;
    double max = 0.0;
};

struct CategoricalSpec {
    std::string name;
    std::vector<std::string> vocab; // first-appearance order, persisted

    std::size_t cardinality() const { return vocab.size(); }

    std::optional<std::size_t> index_of(const std::string& value) const {
        for (std::size_t i = 0; i < vocab.size(); ++i) {
            if (vocab[i] == value) return i;
        }
        return std::nullopt;
    }
};

// Declarative description of the input columns and the two strength targets.
struct FeatureSchema {
    std::vector<NumericalSpec> numerical;
    std::vector<CategoricalSpec> categorical;
    std::string target_7d;
    std::string target_28d;

    const std::string& target_for(Age age) const { return age == Age::d7 ? target_7d : target_28d; }

    std::size_t num_count() const { return numerical.size(); }
    std::size_t cat_count() const { return categorical.size(); }
    std::size_t feature_count() const { return numerical.size() + categorical.size(); }

    std::size_t one_hot_width() const {
        std::size_t w = numerical.size();
        for (const auto& c : categorical) w += c.cardinality();
        return w;
    }

    std::vector<std::string> feature_names() const {
        std::vector<std::string> out;
        out.reserve(feature_count());
        for (const auto& n : numerical) out.push_back(n.name);
        for (const auto& c : categorical) out.push_back(c.name);
        return out;
    }

    void validate() const {
        std::unordered_set<std::string> seen;
        for (const auto& n : numerical) {
            if (!seen.insert(n.name).second) throw SchemaError("duplicate feature name '" + n.name + "'");
            if (!(n.min < n.max)) {
                throw SchemaError("numerical feature '" + n.name + "' needs min < max");
            }
        }
        for (const auto& c : categorical) {
            if (!seen.insert(c.name).second) throw SchemaError("duplicate feature name '" + c.name + "'");
            std::unordered_set<std::string> vs;
            for (const auto& v : c.vocab) {
                if (!vs.insert(v).second) {
                    throw SchemaError("categorical feature '" + c.name + "' has duplicate vocab entry '" + v + "'");
                }
            }
        }
        if (target_7d.empty() || target_28d.empty()) throw SchemaError("both target column names are required");
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["numerical"] = nlohmann::ordered_json::array();
        for (const auto& n : numerical) {
            j["numerical"].push_back({{"name", n.name}, {"unit", n.unit}, {"min", n.min}, {"max", n.max}});
        }
        j["categorical"] = nlohmann::ordered_json::array();
        for (const auto& c : categorical) {
            j["categorical"].push_back({{"name", c.name}, {"vocab", c.vocab}});
        }
        j["targets"] = {{"age7", target_7d}, {"age28", target_28d}};
        return j;
    }

    static FeatureSchema from_json(const nlohmann::json& j) {
        FeatureSchema s;
        try {
            for (const auto& n : j.at("numerical")) {
                s.numerical.push_back({n.at("name").get<std::string>(), n.at("unit").get<std::string>(),
                                       n.at("min").get<double>(), n.at("max").get<double>()});
            }
            for (const auto& c : j.at("categorical")) {
                s.categorical.push_back({c.at("name").get<std::string>(), c.at("vocab").get<std::vector<std::string>>()});
            }
            s.target_7d = j.at("targets").at("age7").get<std::string>();
            s.target_28d = j.at("targets").at("age28").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(std::string("malformed schema document: ") + e.what());
        }
        s.validate();
        return s;
    }

    // FNV-1a over the canonical JSON dump. Stable across platforms because the
    // dump is deterministic.
    std::uint64_t hash() const {
        const std::string dump = to_json().dump();
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : dump) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    // The nine input parameters of the concrete strength dataset. Categorical
    // vocabularies start empty and are filled when data is first ingested or
    // generated.
    static FeatureSchema concrete_default() {
        FeatureSchema s;
        s.numerical = {
            {"unit_cement_material", "lb/CY", 208.5, 1380.0},
            {"water_cement_ratio", "ratio", 0.14, 3.03},
            {"concrete_temperature", "F", 50.0, 97.0},
            {"air_temperature", "F", 35.0, 109.0},
            {"elapsed_time", "min", 5.0, 118.0},
            {"placement_air", "%", 1.0, 9.5},
            {"placement_slump", "in", 1.0, 9.0},
        };
        s.categorical = {
            {"material_code", {}},
            {"fracture_type", {}},
        };
        s.target_7d = "strength_7d_psi";
        s.target_28d = "strength_28d_psi";
        return s;
    }
};

} // namespace ccs
