#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccs/dataset.hpp"
#include "ccs/jsonutil.hpp"
#include "ccs/rng.hpp"

namespace ccs {

// Calibrated stand-in for the field dataset: numeric features follow the
// published marginals, and the latent 28-day strength follows an Abrams-law
// core with multiplicative mix-design and placement effects,
//
//   S28 = A / B^wc * (cement/572)^g * (1 - p_air*(air-4.3))
//         * exp(-k28 * zT^2) * exp(rho_code) * exp(eta28)
//
// where zT is the standardized concrete temperature, rho_code a per-material
// random effect fixed per code, and eta the observation noise. The 7-day
// strength is a maturity-scaled copy with its own (larger) noise and an
// extra early-age temperature sensitivity. Air temperature, elapsed time and
// slump are sampled but carry no signal.
struct GeneratorConfig {
    std::size_t n = 20000;
    std::uint64_t seed = 42;

    double cov_28 = 0.04; // lognormal sigma of the 28-day observation noise
    double cov_7 = 0.08;  // must be >= cov_28

    std::size_t material_code_count = 142;
    std::size_t fracture_type_count = 6;

    double abrams_a_psi = 14000.0;
    double abrams_b = 10.0;

    double cement_exponent = 1.0;     // g: (cement/572)^g
    double air_penalty_per_pct = 0.03; // p_air
    double temp_effect_28 = 0.07;     // k28: exp(-k28*zT^2)
    double temp_effect_7 = 0.12;      // k7: extra early-age curvature
    double code_effect_sigma = 0.12;  // sd of rho_code
    double maturity_ratio_7 = 0.70;   // r in (0,1)
    double fracture_signal = 0.35;    // probability a fracture reflects its strength bin
    bool pin_numeric_to_mean = false; // degenerate mode: every numeric feature at its mean

    void validate() const {
        if (n == 0) throw ConfigError("generator: n must be positive");
        if (cov_28 < 0.0 || cov_7 < 0.0) throw ConfigError("generator: noise CoV must be >= 0");
        if (cov_7 < cov_28) throw ConfigError("generator: 7-day CoV must be >= 28-day CoV");
        if (material_code_count == 0 || fracture_type_count == 0) {
            throw ConfigError("generator: categorical counts must be >= 1");
        }
        if (!(abrams_b > 1.0)) throw ConfigError("generator: Abrams B must be > 1");
        if (!(abrams_a_psi > 0.0)) throw ConfigError("generator: Abrams A must be positive");
        if (code_effect_sigma < 0.0) throw ConfigError("generator: code effect sigma must be >= 0");
        if (!(maturity_ratio_7 > 0.0 && maturity_ratio_7 < 1.0)) {
            throw ConfigError("generator: maturity ratio must be in (0, 1)");
        }
        if (fracture_signal < 0.0 || fracture_signal > 1.0) {
            throw ConfigError("generator: fracture signal must be in [0, 1]");
        }
    }

    nlohmann::ordered_json to_json() const {
        return {{"n", n},
                {"seed", seed},
                {"cov_28", cov_28},
                {"cov_7", cov_7},
                {"material_code_count", material_code_count},
                {"fracture_type_count", fracture_type_count},
                {"abrams_a_psi", abrams_a_psi},
                {"abrams_b", abrams_b},
                {"cement_exponent", cement_exponent},
                {"air_penalty_per_pct", air_penalty_per_pct},
                {"temp_effect_28", temp_effect_28},
                {"temp_effect_7", temp_effect_7},
                {"code_effect_sigma", code_effect_sigma},
                {"maturity_ratio_7", maturity_ratio_7},
                {"fracture_signal", fracture_signal},
                {"pin_numeric_to_mean", pin_numeric_to_mean}};
    }

    static GeneratorConfig from_json(const nlohmann::json& j) {
        require_known_keys(j, {"n", "seed", "cov_28", "cov_7", "material_code_count", "fracture_type_count",
                               "abrams_a_psi", "abrams_b", "cement_exponent", "air_penalty_per_pct",
                               "temp_effect_28", "temp_effect_7", "code_effect_sigma", "maturity_ratio_7",
                               "fracture_signal", "pin_numeric_to_mean"},
                           "generator config");
        GeneratorConfig c;
        maybe_get(j, "n", c.n);
        maybe_get(j, "seed", c.seed);
        maybe_get(j, "cov_28", c.cov_28);
        maybe_get(j, "cov_7", c.cov_7);
        maybe_get(j, "material_code_count", c.material_code_count);
        maybe_get(j, "fracture_type_count", c.fracture_type_count);
        maybe_get(j, "abrams_a_psi", c.abrams_a_psi);
        maybe_get(j, "abrams_b", c.abrams_b);
        maybe_get(j, "cement_exponent", c.cement_exponent);
        maybe_get(j, "air_penalty_per_pct", c.air_penalty_per_pct);
        maybe_get(j, "temp_effect_28", c.temp_effect_28);
        maybe_get(j, "temp_effect_7", c.temp_effect_7);
        maybe_get(j, "code_effect_sigma", c.code_effect_sigma);
        maybe_get(j, "maturity_ratio_7", c.maturity_ratio_7);
        maybe_get(j, "fracture_signal", c.fracture_signal);
        maybe_get(j, "pin_numeric_to_mean", c.pin_numeric_to_mean);
        c.validate();
        return c;
    }
};

namespace detail {

// Published marginals of the seven numeric inputs: mean, sd, min, max.
struct NumericMarginal {
    double mean, sd, lo, hi;
};

inline const std::vector<NumericMarginal>& concrete_marginals() {
    static const std::vector<NumericMarginal> m = {
        {571.95, 73.67, 208.5, 1380.0}, // unit_cement_material
        {0.38, 0.06, 0.14, 3.03},       // water_cement_ratio
        {76.0, 8.96, 50.0, 97.0},       // concrete_temperature
        {71.1, 14.97, 35.0, 109.0},     // air_temperature
        {39.7, 13.43, 5.0, 118.0},      // elapsed_time
        {4.3, 1.1, 1.0, 9.5},           // placement_air
        {5.5, 1.5, 1.0, 9.0},           // placement_slump
    };
    return m;
}

inline double truncated_normal(Rng& rng, const NumericMarginal& m) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const double v = rng.normal(m.mean, m.sd);
        if (v >= m.lo && v <= m.hi) return v;
    }
    throw ConfigError("truncated normal sampler failed to land inside its bounds");
}

inline const std::vector<std::string>& fracture_names() {
    static const std::vector<std::string> names = {
        "cone", "cone_vertical_cracks", "columnar", "diagonal_shear", "edge_fracture", "edge_one_end",
    };
    return names;
}

} // namespace detail

struct SyntheticData {
    EncodedDataset age7;
    EncodedDataset age28;
    std::vector<double> latent7;  // noise-free oracle values, psi
    std::vector<double> latent28;
};

// Noise-free 28-day oracle given raw feature values and the per-code effect.
inline double oracle_strength_28(const GeneratorConfig& cfg, double cement, double wc, double air,
                                 double concrete_temp, double rho_code) {
    const double zt = (concrete_temp - 76.0) / 8.96;
    double air_factor = 1.0 - cfg.air_penalty_per_pct * (air - 4.3);
    air_factor = std::max(air_factor, 0.05);
    return cfg.abrams_a_psi / std::pow(cfg.abrams_b, wc) * std::pow(cement / 571.95, cfg.cement_exponent) *
           air_factor * std::exp(-cfg.temp_effect_28 * zt * zt) * std::exp(rho_code);
}

inline double oracle_strength_7(const GeneratorConfig& cfg, double s28_latent, double concrete_temp) {
    const double zt = (concrete_temp - 76.0) / 8.96;
    return cfg.maturity_ratio_7 * s28_latent * std::exp(-cfg.temp_effect_7 * zt * zt);
}

inline SyntheticData generate_synthetic(const GeneratorConfig& cfg) {
    cfg.validate();
    const auto& marginals = detail::concrete_marginals();

    auto schema = std::make_shared<FeatureSchema>(FeatureSchema::concrete_default());
    for (std::size_t c = 0; c < cfg.material_code_count; ++c) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "MIX-%03zu", c + 1);
        schema->categorical[0].vocab.push_back(buf);
    }
    for (std::size_t f = 0; f < cfg.fracture_type_count; ++f) {
        const auto& names = detail::fracture_names();
        schema->categorical[1].vocab.push_back(
            f < names.size() ? names[f] : "fracture_type_" + std::to_string(f + 1));
    }
    schema->validate();

    Rng master(cfg.seed);
    Rng rng_codes = master.split(1);    // per-code random effects, independent of n
    Rng rng_rows = master.split(2);     // feature values and code assignment
    Rng rng_noise = master.split(3);    // observation noise
    Rng rng_fracture = master.split(4); // fracture label noise

    std::vector<double> rho(cfg.material_code_count);
    for (double& r : rho) r = rng_codes.normal(0.0, cfg.code_effect_sigma);

    const std::size_t pn = marginals.size();
    SyntheticData out;
    out.latent28.resize(cfg.n);
    out.latent7.resize(cfg.n);

    std::vector<double> numeric(cfg.n * pn);
    std::vector<std::size_t> code(cfg.n);
    for (std::size_t r = 0; r < cfg.n; ++r) {
        for (std::size_t j = 0; j < pn; ++j) {
            numeric[r * pn + j] =
                cfg.pin_numeric_to_mean ? marginals[j].mean : detail::truncated_normal(rng_rows, marginals[j]);
        }
        code[r] = static_cast<std::size_t>(rng_rows.below(cfg.material_code_count));
        const double cement = numeric[r * pn + 0];
        const double wc = numeric[r * pn + 1];
        const double tconc = numeric[r * pn + 2];
        const double air = numeric[r * pn + 5];
        out.latent28[r] = oracle_strength_28(cfg, cement, wc, air, tconc, rho[code[r]]);
        out.latent7[r] = oracle_strength_7(cfg, out.latent28[r], tconc);
    }

    // Fracture type is a post-test observation: the label follows the
    // quantile bin of the latent strength with probability fracture_signal,
    // otherwise it is a uniformly random category.
    std::vector<double> sorted_latent = out.latent28;
    std::sort(sorted_latent.begin(), sorted_latent.end());
    const std::size_t bins = cfg.fracture_type_count;
    std::vector<std::size_t> fracture(cfg.n);
    for (std::size_t r = 0; r < cfg.n; ++r) {
        if (rng_fracture.next_double() < cfg.fracture_signal) {
            const auto pos = std::lower_bound(sorted_latent.begin(), sorted_latent.end(), out.latent28[r]) -
                             sorted_latent.begin();
            std::size_t bin = static_cast<std::size_t>(pos) * bins / cfg.n;
            fracture[r] = std::min(bin, bins - 1);
        } else {
            fracture[r] = static_cast<std::size_t>(rng_fracture.below(bins));
        }
    }

    auto build = [&](Age age) {
        EncodedDataset ds;
        ds.schema = schema;
        ds.age = age;
        ds.n = cfg.n;
        ds.numeric = numeric;
        ds.categorical.resize(cfg.n * 2);
        ds.target.resize(cfg.n);
        for (std::size_t r = 0; r < cfg.n; ++r) {
            ds.categorical[r * 2 + 0] = code[r];
            ds.categorical[r * 2 + 1] = fracture[r];
        }
        return ds;
    };
    out.age28 = build(Age::d28);
    out.age7 = build(Age::d7);

    constexpr double kMinStrength = 1.0; // psi, keeps targets strictly positive
    for (std::size_t r = 0; r < cfg.n; ++r) {
        const double eta28 = cfg.cov_28 > 0.0 ? rng_noise.normal(0.0, cfg.cov_28) : 0.0;
        const double eta7 = cfg.cov_7 > 0.0 ? rng_noise.normal(0.0, cfg.cov_7) : 0.0;
        out.age28.target[r] = std::max(out.latent28[r] * std::exp(eta28), kMinStrength);
        out.age7.target[r] = std::max(out.latent7[r] * std::exp(eta7), kMinStrength);
    }

    out.age28.validate();
    out.age7.validate();
    return out;
}

} // namespace ccs
