#include <catch2/catch_amalgamated.hpp>

#include "ccs/optim.hpp"
#include "ccs/tape.hpp"
#include "test_support.hpp"

using namespace ccs;
using namespace ccs::nd;

TEST_CASE("adam first step with unit gradient moves by almost exactly lr") {
    ParamStore store;
    Parameter& w = store.create(Tensor::scalar(1.0));
    w.grad[0] = 1.0;
    Adam adam({0.1, 0.9, 0.999, 1e-8});
    auto params = store.all();
    adam.step(params);
    // bias-corrected first step: lr * 1 / (1 + eps)
    CHECK(w.value[0] == Catch::Approx(1.0 - 0.1 * (1.0 - 1e-8)).epsilon(1e-10));
}

TEST_CASE("adam leaves parameters unchanged under zero gradients") {
    ParamStore store;
    Parameter& w = store.create(Tensor({3}, {1.0, -2.0, 0.5}));
    Adam adam;
    auto params = store.all();
    for (int i = 0; i < 50; ++i) {
        store.zero_grad();
        adam.step(params);
    }
    CHECK(w.value.data == std::vector<double>{1.0, -2.0, 0.5});
}

TEST_CASE("adam converges on a scalar quadratic") {
    // f(w) = (w - 3)^2 from w = 0, lr = 0.1, 200 steps
    ParamStore store;
    Parameter& w = store.create(Tensor::scalar(0.0));
    Adam adam({0.1, 0.9, 0.999, 1e-8});
    auto params = store.all();
    for (int i = 0; i < 200; ++i) {
        store.zero_grad();
        w.grad[0] = 2.0 * (w.value[0] - 3.0);
        adam.step(params);
    }
    CHECK(std::abs(w.value[0] - 3.0) < 0.05);
}

TEST_CASE("adam moments persist per parameter id") {
    ParamStore store;
    Parameter& a = store.create(Tensor::scalar(0.0));
    Parameter& b = store.create(Tensor::scalar(0.0));
    Adam adam({0.1, 0.9, 0.999, 1e-8});
    auto params = store.all();

    a.grad[0] = 1.0;
    b.grad[0] = -1.0;
    adam.step(params);
    const double a1 = a.value[0];

    a.grad[0] = 1.0;
    b.grad[0] = -1.0;
    adam.step(params);
    // second step keeps moving in the same direction, and the two parameter
    // trajectories stay exact mirrors of each other
    CHECK(a.value[0] < a1);
    CHECK(b.value[0] == Catch::Approx(-a.value[0]).epsilon(1e-15));
}

TEST_CASE("kaiming uniform bound follows sqrt(6/fan_in)") {
    Rng rng(11);
    CHECK(std::sqrt(6.0 / 128.0) == Catch::Approx(0.21650635).epsilon(1e-6));

    SECTION("fan_in 6 has bound exactly 1") {
        Tensor t = kaiming_uniform({1000}, 6, rng);
        for (double v : t.data) {
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
        }
    }

    SECTION("empirical max within bound, mean within 3 sigma of 0") {
        const std::size_t n = 100000;
        const double bound = std::sqrt(6.0 / 128.0);
        Tensor t = kaiming_uniform({n}, 128, rng);
        double max_abs = 0.0, mean = 0.0;
        for (double v : t.data) {
            max_abs = std::max(max_abs, std::abs(v));
            mean += v;
        }
        mean /= static_cast<double>(n);
        CHECK(max_abs <= bound);
        const double sigma_mean = bound / std::sqrt(3.0) / std::sqrt(static_cast<double>(n));
        CHECK(std::abs(mean) < 3.0 * sigma_mean);
    }

    SECTION("fan_in 0 is an error") {
        CHECK_THROWS_AS(kaiming_uniform({2, 2}, 0, rng), InvalidArgument);
    }
}

TEST_CASE("uniform_init respects its range") {
    Rng rng(17);

    SECTION("embedding init case stays inside [-1, 1]") {
        Tensor t = uniform_init({142, 16}, -1.0, 1.0, rng);
        for (double v : t.data) {
            CHECK(v >= -1.0);
            CHECK(v < 1.0);
        }
    }

    SECTION("degenerate narrow range") {
        const double lo = 0.5, hi = 0.5 + 1e-12;
        Tensor t = uniform_init({100}, lo, hi, rng);
        for (double v : t.data) {
            CHECK(v >= lo);
            CHECK(v <= hi);
        }
    }

    SECTION("sample mean of 1e5 draws on [-1,1] is near 0") {
        Tensor t = uniform_init({100000}, -1.0, 1.0, rng);
        double mean = 0.0;
        for (double v : t.data) mean += v;
        mean /= static_cast<double>(t.numel());
        CHECK(std::abs(mean) < 0.02);
    }

    SECTION("lo >= hi is a range error") {
        CHECK_THROWS_AS(uniform_init({2}, 1.0, 1.0, rng), InvalidArgument);
        CHECK_THROWS_AS(uniform_init({2}, 2.0, 1.0, rng), InvalidArgument);
    }
}

TEST_CASE("rng split streams are independent of parent consumption") {
    Rng a(99);
    Rng b(99);
    (void)a.next_u64();
    (void)a.next_u64();
    Rng child_a = a.split(5);
    Rng child_b = b.split(5);
    for (int i = 0; i < 10; ++i) CHECK(child_a.next_u64() == child_b.next_u64());
}

TEST_CASE("rng normal pairs are deterministic per seed") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
}
