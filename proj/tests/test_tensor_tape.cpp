#include <catch2/catch_amalgamated.hpp>

#include "ccs/tape.hpp"
#include "test_support.hpp"

using namespace ccs;
using namespace ccs::nd;
using ccs::test::numeric_grad;
using ccs::test::random_tensor;
using ccs::test::rel_err;

TEST_CASE("tensor shape/data consistency is enforced") {
    CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), ShapeError);
    Tensor t = Tensor::zeros({3, 4});
    CHECK(t.numel() == 12);
    CHECK(t.rows() == 3);
    CHECK(t.cols() == 4);
}

TEST_CASE("matmul identity cases") {
    Tensor a = Tensor::row_major(2, 2, {1, 2, 3, 4});
    Tensor eye = Tensor::row_major(2, 2, {1, 0, 0, 1});
    Tensor prod = ops::matmul(a, eye);
    CHECK(prod.data == std::vector<double>{1, 2, 3, 4});

    Tensor col = Tensor::row_major(2, 1, {5, 7});
    Tensor prod2 = ops::matmul(eye, col);
    CHECK(prod2.data == std::vector<double>{5, 7});
}

TEST_CASE("matmul rejects mismatched inner dimensions with both shapes named") {
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({2, 3});
    try {
        ops::matmul(a, b);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[2x3]") != std::string::npos);
    }
}

TEST_CASE("gradient of sum(A*B) w.r.t. A is the row-sum matrix of B") {
    Rng rng(101);
    Tensor a = random_tensor({3, 4}, rng);
    Tensor b = random_tensor({4, 5}, rng);

    Tape tape;
    auto na = tape.constant(a);
    auto nb = tape.constant(b);
    auto loss = tape.sum(tape.matmul(na, nb));
    tape.backward(loss);

    // analytic expectation: dA[i][k] = sum_j B[k][j]
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t k = 0; k < 4; ++k) {
            double row_sum = 0.0;
            for (std::size_t j = 0; j < 5; ++j) row_sum += b.at(k, j);
            CHECK(tape.grad(na).at(i, k) == Catch::Approx(row_sum).epsilon(1e-12));
        }
    }

    // finite-difference oracle over every entry of A and B
    auto forward = [&] {
        Tape t;
        return t.value(t.sum(t.matmul(t.constant(a), t.constant(b))))[0];
    };
    for (std::size_t i = 0; i < a.numel(); ++i) {
        CHECK(rel_err(tape.grad(na)[i], numeric_grad(forward, a.data[i])) < 1e-6);
    }
    for (std::size_t i = 0; i < b.numel(); ++i) {
        CHECK(rel_err(tape.grad(nb)[i], numeric_grad(forward, b.data[i])) < 1e-6);
    }
}

TEST_CASE("layer_norm forward examples") {
    Tensor gamma = Tensor::full({3}, 1.0);
    Tensor beta = Tensor::zeros({3});

    SECTION("constant row maps to zero") {
        Tensor x = Tensor::row_major(1, 3, {1, 1, 1});
        Tensor y = ops::layer_norm(x, gamma, beta, 1e-5);
        for (double v : y.data) CHECK(v == Catch::Approx(0.0).margin(1e-12));
    }

    SECTION("already normalized row passes through as eps vanishes") {
        Tensor g2 = Tensor::full({2}, 1.0);
        Tensor b2 = Tensor::zeros({2});
        Tensor x = Tensor::row_major(1, 2, {-1, 1});
        Tensor y = ops::layer_norm(x, g2, b2, 1e-14);
        CHECK(y[0] == Catch::Approx(-1.0).epsilon(1e-6));
        CHECK(y[1] == Catch::Approx(1.0).epsilon(1e-6));
    }

    SECTION("empty feature dimension is an error") {
        Tensor x = Tensor::zeros({2, 0});
        Tensor g0 = Tensor::zeros({0});
        CHECK_THROWS_AS(ops::layer_norm(x, g0, g0, 1e-5), InvalidArgument);
    }
}

TEST_CASE("layer_norm output rows have zero mean and unit variance") {
    Rng rng(7);
    Tensor x = random_tensor({4, 8}, rng, -10.0, 10.0);
    Tensor gamma = Tensor::full({8}, 1.0);
    Tensor beta = Tensor::zeros({8});
    Tensor y = ops::layer_norm(x, gamma, beta, 1e-5);
    for (std::size_t r = 0; r < 4; ++r) {
        double mean = 0.0;
        for (std::size_t c = 0; c < 8; ++c) mean += y.at(r, c);
        mean /= 8.0;
        double var = 0.0;
        for (std::size_t c = 0; c < 8; ++c) var += (y.at(r, c) - mean) * (y.at(r, c) - mean);
        var /= 8.0;
        CHECK(std::abs(mean) < 1e-12);
        CHECK(std::abs(var - 1.0) < 1e-6);
    }
}

TEST_CASE("layer_norm backward matches finite differences including mean/var paths") {
    Rng rng(13);
    Tensor x = random_tensor({3, 6}, rng, -2.0, 2.0);
    Tensor gamma = random_tensor({6}, rng, 0.5, 1.5);
    Tensor beta = random_tensor({6}, rng);
    Tensor target = random_tensor({3, 6}, rng);

    auto forward = [&] {
        Tape t;
        auto y = t.layer_norm(t.constant(x), t.constant(gamma), t.constant(beta), 1e-5);
        return t.value(t.mse_loss(y, target))[0];
    };

    Tape tape;
    auto nx = tape.constant(x);
    auto ng = tape.constant(gamma);
    auto nb = tape.constant(beta);
    auto loss = tape.mse_loss(tape.layer_norm(nx, ng, nb, 1e-5), target);
    tape.backward(loss);

    for (std::size_t i = 0; i < x.numel(); ++i) {
        CHECK(rel_err(tape.grad(nx)[i], numeric_grad(forward, x.data[i])) < 1e-5);
    }
    for (std::size_t i = 0; i < gamma.numel(); ++i) {
        CHECK(rel_err(tape.grad(ng)[i], numeric_grad(forward, gamma.data[i])) < 1e-5);
    }
    for (std::size_t i = 0; i < beta.numel(); ++i) {
        CHECK(rel_err(tape.grad(nb)[i], numeric_grad(forward, beta.data[i])) < 1e-5);
    }
}

TEST_CASE("gelu forward values") {
    Tensor zero = Tensor::scalar(0.0);
    CHECK(ops::gelu(zero)[0] == 0.0);

    Tensor ten = Tensor::scalar(10.0);
    CHECK(ops::gelu(ten)[0] == Catch::Approx(10.0).margin(1e-6));

    // negative tail approaches zero
    Tensor neg = Tensor::scalar(-10.0);
    CHECK(std::abs(ops::gelu(neg)[0]) < 1e-6);
}

TEST_CASE("gelu gradient matches finite differences at 20 random points") {
    Rng rng(23);
    Tensor x = random_tensor({20}, rng, -3.0, 3.0);

    Tape tape;
    auto nx = tape.constant(x);
    auto loss = tape.sum(tape.gelu(nx));
    tape.backward(loss);

    auto forward = [&] {
        Tape t;
        return t.value(t.sum(t.gelu(t.constant(x))))[0];
    };
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(rel_err(tape.grad(nx)[i], numeric_grad(forward, x.data[i])) < 1e-6);
    }
}

TEST_CASE("relu forward and subgradient at zero") {
    Tensor x = Tensor::row_major(1, 3, {-1, 0, 2});
    Tensor y = ops::relu(x);
    CHECK(y.data == std::vector<double>{0, 0, 2});
    CHECK(ops::relu(Tensor::scalar(-3.0))[0] == 0.0);
    CHECK(ops::relu(Tensor::scalar(5.0))[0] == 5.0);

    Tape tape;
    auto nx = tape.constant(x);
    auto loss = tape.sum(tape.relu(nx));
    tape.backward(loss);
    CHECK(tape.grad(nx)[0] == 0.0);
    CHECK(tape.grad(nx)[1] == 0.0); // subgradient 0 at exactly 0
    CHECK(tape.grad(nx)[2] == 1.0);
}

TEST_CASE("embedding_lookup gathers rows and scatter-adds gradients") {
    Tensor table = Tensor::row_major(2, 2, {1, 2, 3, 4});

    SECTION("gather") {
        std::vector<std::size_t> idx = {1, 0, 1};
        Tensor out = ops::embedding_lookup(table, idx);
        CHECK(out.data == std::vector<double>{3, 4, 1, 2, 3, 4});
    }

    SECTION("out of vocabulary index is an error naming the index") {
        std::vector<std::size_t> idx = {2};
        try {
            ops::embedding_lookup(table, idx);
            FAIL("expected VocabError");
        } catch (const VocabError& e) {
            CHECK(std::string(e.what()).find("2") != std::string::npos);
        }
    }

    SECTION("single gather routes the full gradient to one row") {
        Tape tape;
        auto nt = tape.constant(table);
        auto loss = tape.sum(tape.embedding_lookup(nt, {0}));
        tape.backward(loss);
        CHECK(tape.grad(nt).at(0, 0) == 1.0);
        CHECK(tape.grad(nt).at(0, 1) == 1.0);
        CHECK(tape.grad(nt).at(1, 0) == 0.0);
        CHECK(tape.grad(nt).at(1, 1) == 0.0);
    }

    SECTION("repeated index accumulates, matching finite differences") {
        Tensor target = Tensor::row_major(2, 2, {0.3, -0.2, 0.9, 0.4});
        auto forward = [&] {
            Tape t;
            return t.value(t.mse_loss(t.embedding_lookup(t.constant(table), {0, 0}), target))[0];
        };
        Tape tape;
        auto nt = tape.constant(table);
        auto loss = tape.mse_loss(tape.embedding_lookup(nt, {0, 0}), target);
        tape.backward(loss);
        for (std::size_t i = 0; i < table.numel(); ++i) {
            CHECK(rel_err(tape.grad(nt)[i], numeric_grad(forward, table.data[i])) < 1e-6);
        }
    }
}

TEST_CASE("softmax_rows is stable and row-stochastic") {
    Tensor x = Tensor::row_major(1, 2, {0, 0});
    Tensor y = ops::softmax_rows(x);
    CHECK(y[0] == Catch::Approx(0.5).epsilon(1e-14));
    CHECK(y[1] == Catch::Approx(0.5).epsilon(1e-14));

    Tensor big = Tensor::row_major(1, 2, {1000, 0});
    Tensor yb = ops::softmax_rows(big);
    CHECK(yb[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(yb[1] == Catch::Approx(0.0).margin(1e-12));

    Rng rng(31);
    Tensor r = ccs::test::random_tensor({5, 7}, rng, -30.0, 30.0);
    Tensor yr = ops::softmax_rows(r);
    for (std::size_t row = 0; row < 5; ++row) {
        double sum = 0.0;
        for (std::size_t c = 0; c < 7; ++c) {
            const double v = yr.at(row, c);
            CHECK(v > 0.0);
            CHECK(v <= 1.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("softmax_rows gradient matches finite differences") {
    Rng rng(37);
    Tensor x = random_tensor({3, 5}, rng, -2.0, 2.0);
    Tensor target = random_tensor({3, 5}, rng);

    auto forward = [&] {
        Tape t;
        return t.value(t.mse_loss(t.softmax_rows(t.constant(x)), target))[0];
    };
    Tape tape;
    auto nx = tape.constant(x);
    auto loss = tape.mse_loss(tape.softmax_rows(nx), target);
    tape.backward(loss);
    for (std::size_t i = 0; i < x.numel(); ++i) {
        CHECK(rel_err(tape.grad(nx)[i], numeric_grad(forward, x.data[i])) < 1e-6);
    }
}

TEST_CASE("mse_loss values and errors") {
    CHECK(ops::mse(Tensor::scalar(3.0), Tensor::scalar(3.0)) == 0.0);
    CHECK(ops::mse(Tensor::scalar(3.0), Tensor::scalar(1.0)) == 4.0);
    CHECK(ops::mse(Tensor({2}, {1, 2}), Tensor({2}, {0, 0})) == 2.5);
    CHECK_THROWS_AS(ops::mse(Tensor::zeros({0}), Tensor::zeros({0})), InvalidArgument);
}

TEST_CASE("attention building blocks propagate gradients correctly") {
    Rng rng(41);
    const std::size_t block = 3;
    Tensor q = random_tensor({6, 4}, rng);
    Tensor k = random_tensor({6, 4}, rng);
    Tensor v = random_tensor({6, 4}, rng);
    Tensor target = random_tensor({6, 4}, rng);

    auto forward = [&] {
        Tape t;
        auto scores = t.scale(t.block_matmul_nt(t.constant(q), t.constant(k), block), 0.5);
        auto probs = t.softmax_rows(scores);
        auto out = t.block_matmul_nn(probs, t.constant(v), block);
        return t.value(t.mse_loss(out, target))[0];
    };

    Tape tape;
    auto nq = tape.constant(q);
    auto nk = tape.constant(k);
    auto nv = tape.constant(v);
    auto probs = tape.softmax_rows(tape.scale(tape.block_matmul_nt(nq, nk, block), 0.5));
    auto loss = tape.mse_loss(tape.block_matmul_nn(probs, nv, block), target);
    tape.backward(loss);

    for (std::size_t i = 0; i < q.numel(); ++i) {
        CHECK(rel_err(tape.grad(nq)[i], numeric_grad(forward, q.data[i])) < 1e-5);
        CHECK(rel_err(tape.grad(nk)[i], numeric_grad(forward, k.data[i])) < 1e-5);
        CHECK(rel_err(tape.grad(nv)[i], numeric_grad(forward, v.data[i])) < 1e-5);
    }
}

TEST_CASE("concat, reshape and mean-pool gradients match finite differences") {
    Rng rng(43);
    Tensor a = random_tensor({4, 2}, rng);
    Tensor b = random_tensor({4, 3}, rng);
    Tensor target = random_tensor({2, 5}, rng);

    // concat [4x2 | 4x3] -> [4x5]; mean-pool pairs of rows -> [2x5]
    auto scalar_forward = [&] {
        Tape t;
        std::vector<Tape::NodeId> parts = {t.constant(a), t.constant(b)};
        auto pooled = t.mean_pool_rows(t.concat_cols(parts), 2);
        return t.value(t.mse_loss(pooled, target))[0];
    };
    Tape tape;
    auto na = tape.constant(a);
    auto nb = tape.constant(b);
    std::vector<Tape::NodeId> parts = {na, nb};
    auto loss = tape.mse_loss(tape.mean_pool_rows(tape.concat_cols(parts), 2), target);
    tape.backward(loss);
    for (std::size_t i = 0; i < a.numel(); ++i) {
        CHECK(rel_err(tape.grad(na)[i], numeric_grad(scalar_forward, a.data[i])) < 1e-6);
    }
    for (std::size_t i = 0; i < b.numel(); ++i) {
        CHECK(rel_err(tape.grad(nb)[i], numeric_grad(scalar_forward, b.data[i])) < 1e-6);
    }
}

TEST_CASE("backward visits each recorded op exactly once, in reverse order") {
    Rng rng(47);
    Tensor x = random_tensor({2, 3}, rng);
    Tensor w = random_tensor({3, 2}, rng);
    Tensor target = random_tensor({2, 2}, rng);

    Tape tape;
    auto nx = tape.constant(x);
    auto nw = tape.constant(w);
    auto h = tape.matmul(nx, nw); // op 1
    auto g = tape.gelu(h);        // op 2
    auto loss = tape.mse_loss(g, target); // op 3
    tape.backward(loss);
    CHECK(tape.backward_visits() == 3);
    CHECK(tape.size() == 5); // 2 leaves + 3 ops
}

TEST_CASE("parameters accumulate gradients through the tape") {
    Rng rng(53);
    ParamStore store;
    Parameter& w = store.create(random_tensor({3, 2}, rng));
    Tensor x = random_tensor({4, 3}, rng);
    Tensor target = random_tensor({4, 2}, rng);

    Tape tape;
    auto loss = tape.mse_loss(tape.matmul(tape.constant(x), tape.param(w)), target);
    store.zero_grad();
    tape.backward(loss);

    auto forward = [&] {
        Tape t;
        return t.value(t.mse_loss(t.matmul(t.constant(x), t.param(w)), target))[0];
    };
    for (std::size_t i = 0; i < w.value.numel(); ++i) {
        CHECK(rel_err(w.grad[i], numeric_grad(forward, w.value.data[i])) < 1e-6);
    }

    SECTION("zero_grad resets to exact zeros") {
        w.zero_grad();
        for (double v : w.grad.data) CHECK(v == 0.0);
    }
}

TEST_CASE("non-finite results are an error state") {
    Tensor big = Tensor::full({2, 2}, 1e308);
    CHECK_THROWS_AS(ops::matmul(big, big), NumericError);
    CHECK_THROWS_AS(ops::add(big, big), NumericError);
}
