#include <catch2/catch_amalgamated.hpp>

#include "ccs/synthetic.hpp"

using namespace ccs;

namespace {

double column_mean(const EncodedDataset& ds, std::size_t j) {
    double m = 0.0;
    for (std::size_t r = 0; r < ds.n; ++r) m += ds.num_at(r, j);
    return m / static_cast<double>(ds.n);
}

} // namespace

TEST_CASE("default generator reproduces the published feature means within 2%") {
    GeneratorConfig cfg;
    cfg.n = 20000;
    auto data = generate_synthetic(cfg);
    const double expected[] = {571.95, 0.38, 76.0, 71.1, 39.7, 4.3, 5.5};
    for (std::size_t j = 0; j < 7; ++j) {
        const double mean = column_mean(data.age28, j);
        INFO("feature " << data.age28.schema->numerical[j].name);
        CHECK(std::abs(mean - expected[j]) / expected[j] < 0.02);
    }

    SECTION("values stay inside the published min/max") {
        for (std::size_t j = 0; j < 7; ++j) {
            const auto& spec = data.age28.schema->numerical[j];
            for (std::size_t r = 0; r < data.age28.n; ++r) {
                REQUIRE(data.age28.num_at(r, j) >= spec.min);
                REQUIRE(data.age28.num_at(r, j) <= spec.max);
            }
        }
    }

    SECTION("mean 28-day strength lands in the calibration bracket") {
        double mean = 0.0;
        for (double t : data.age28.target) mean += t;
        mean /= static_cast<double>(data.age28.n);
        CHECK(mean > 5000.0);
        CHECK(mean < 7000.0);
    }

    SECTION("7-day strengths are systematically lower") {
        double m7 = 0.0, m28 = 0.0;
        for (double t : data.age7.target) m7 += t;
        for (double t : data.age28.target) m28 += t;
        CHECK(m7 < 0.85 * m28);
    }
}

TEST_CASE("degenerate generator run is exactly the closed-form oracle") {
    GeneratorConfig cfg;
    cfg.n = 50;
    cfg.cov_28 = 0.0;
    cfg.cov_7 = 0.0;
    cfg.code_effect_sigma = 0.0;
    cfg.pin_numeric_to_mean = true;
    auto data = generate_synthetic(cfg);

    const double expected = oracle_strength_28(cfg, 571.95, 0.38, 4.3, 76.0, 0.0);
    for (double t : data.age28.target) CHECK(t == expected);
    const double expected7 = oracle_strength_7(cfg, expected, 76.0);
    for (double t : data.age7.target) CHECK(t == expected7);

    // closed form by hand: A/B^wc * 1 * 1 * 1 * 1
    CHECK(expected == Catch::Approx(cfg.abrams_a_psi / std::pow(cfg.abrams_b, 0.38)).epsilon(1e-12));
}

TEST_CASE("generation is bit-identical for a fixed config") {
    GeneratorConfig cfg;
    cfg.n = 300;
    cfg.seed = 777;
    auto a = generate_synthetic(cfg);
    auto b = generate_synthetic(cfg);
    CHECK(a.age28.numeric == b.age28.numeric);
    CHECK(a.age28.categorical == b.age28.categorical);
    CHECK(a.age28.target == b.age28.target);
    CHECK(a.age7.target == b.age7.target);

    cfg.seed = 778;
    auto c = generate_synthetic(cfg);
    CHECK(a.age28.target != c.age28.target);
}

TEST_CASE("per-code effects are fixed per code independent of n") {
    GeneratorConfig small;
    small.n = 100;
    small.cov_28 = 0.0;
    small.cov_7 = 0.0;
    small.pin_numeric_to_mean = true;
    GeneratorConfig large = small;
    large.n = 400;

    auto a = generate_synthetic(small);
    auto b = generate_synthetic(large);
    // same code must imply the same latent strength in both runs
    for (std::size_t i = 0; i < a.age28.n; ++i) {
        for (std::size_t j = 0; j < b.age28.n; ++j) {
            if (a.age28.cat_at(i, 0) == b.age28.cat_at(j, 0)) {
                CHECK(a.age28.target[i] == b.age28.target[j]);
            }
        }
    }
}

TEST_CASE("generator config invariants are enforced") {
    GeneratorConfig cfg;
    SECTION("n = 0") {
        cfg.n = 0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SECTION("7-day noise below 28-day noise") {
        cfg.cov_7 = 0.01;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SECTION("Abrams B <= 1") {
        cfg.abrams_b = 1.0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SECTION("maturity ratio outside (0,1)") {
        cfg.maturity_ratio_7 = 1.0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SECTION("negative sigma") {
        cfg.code_effect_sigma = -0.1;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("generator config JSON round trip and unknown keys") {
    GeneratorConfig cfg;
    cfg.n = 123;
    cfg.cov_28 = 0.05;
    cfg.cov_7 = 0.11;
    auto j = cfg.to_json();
    GeneratorConfig back = GeneratorConfig::from_json(j);
    CHECK(back.n == 123);
    CHECK(back.cov_28 == 0.05);
    CHECK(back.cov_7 == 0.11);

    j["not_a_knob"] = 1;
    CHECK_THROWS_AS(GeneratorConfig::from_json(j), ConfigError);
}

TEST_CASE("fracture type tracks the latent strength bin when signal is 1") {
    GeneratorConfig cfg;
    cfg.n = 1200;
    cfg.fracture_signal = 1.0;
    cfg.cov_28 = 0.0;
    cfg.cov_7 = 0.0;
    auto data = generate_synthetic(cfg);
    // with signal 1 the label is exactly the latent sextile: check monotone
    // association via bin means
    std::vector<double> sum(6, 0.0);
    std::vector<std::size_t> count(6, 0);
    for (std::size_t r = 0; r < data.age28.n; ++r) {
        sum[data.age28.cat_at(r, 1)] += data.age28.target[r];
        ++count[data.age28.cat_at(r, 1)];
    }
    for (std::size_t b = 1; b < 6; ++b) {
        REQUIRE(count[b] > 0);
        CHECK(sum[b] / count[b] > sum[b - 1] / count[b - 1]);
    }
}
