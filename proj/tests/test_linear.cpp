#include <catch2/catch_amalgamated.hpp>

#include "ccs/linear_model.hpp"
#include "test_support.hpp"

using namespace ccs;

namespace {

std::shared_ptr<FeatureSchema> numeric_schema(std::size_t p) {
    auto s = std::make_shared<FeatureSchema>();
    for (std::size_t j = 0; j < p; ++j) {
        s->numerical.push_back({"x" + std::to_string(j), "-", -1e9, 1e9});
    }
    s->target_7d = "t7";
    s->target_28d = "t28";
    return s;
}

EncodedDataset numeric_dataset(const std::vector<std::vector<double>>& rows, const std::vector<double>& y) {
    auto schema = numeric_schema(rows[0].size());
    EncodedDataset ds;
    ds.schema = schema;
    ds.age = Age::d28;
    ds.n = rows.size();
    for (const auto& r : rows) ds.numeric.insert(ds.numeric.end(), r.begin(), r.end());
    ds.target = y;
    return ds;
}

// Test-only oracle: assemble the centered/scaled normal equations by hand and
// solve them with textbook Gaussian elimination with partial pivoting. Kept
// free of Eigen so it shares nothing with the implementation path.
std::pair<std::vector<double>, double> gaussian_elimination_fit(const std::vector<std::vector<double>>& rows,
                                                                const std::vector<double>& y, double ridge) {
    const std::size_t n = rows.size(), p = rows[0].size();
    std::vector<double> mean(p, 0.0), scale(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t r = 0; r < n; ++r) mean[j] += rows[r][j];
        mean[j] /= static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) scale[j] += (rows[r][j] - mean[j]) * (rows[r][j] - mean[j]);
        scale[j] = std::sqrt(scale[j] / static_cast<double>(n));
    }
    double y_mean = 0.0;
    for (double v : y) y_mean += v;
    y_mean /= static_cast<double>(n);

    std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            double acc = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                acc += (rows[r][i] - mean[i]) / scale[i] * (rows[r][j] - mean[j]) / scale[j];
            }
            a[i][j] = acc + (i == j ? ridge * static_cast<double>(n) : 0.0);
        }
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r) acc += (rows[r][i] - mean[i]) / scale[i] * (y[r] - y_mean);
        a[i][p] = acc;
    }

    for (std::size_t col = 0; col < p; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < p; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        std::swap(a[col], a[pivot]);
        for (std::size_t r = col + 1; r < p; ++r) {
            const double factor = a[r][col] / a[col][col];
            for (std::size_t j = col; j <= p; ++j) a[r][j] -= factor * a[col][j];
        }
    }
    std::vector<double> w(p, 0.0);
    for (std::size_t i = p; i-- > 0;) {
        double acc = a[i][p];
        for (std::size_t j = i + 1; j < p; ++j) acc -= a[i][j] * w[j];
        w[i] = acc / a[i][i];
    }

    std::vector<double> beta(p);
    double intercept = y_mean;
    for (std::size_t j = 0; j < p; ++j) {
        beta[j] = w[j] / scale[j];
        intercept -= beta[j] * mean[j];
    }
    return {beta, intercept};
}

} // namespace

TEST_CASE("noiseless y = 2x + 1 is recovered exactly") {
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (int i = 1; i <= 8; ++i) {
        rows.push_back({static_cast<double>(i)});
        y.push_back(2.0 * i + 1.0);
    }
    LinearModel model;
    model.fit(numeric_dataset(rows, y), 0);
    CHECK(model.intercept() == Catch::Approx(1.0).margin(1e-8));
    CHECK(model.coefficients()[0] == Catch::Approx(2.0).margin(1e-8));
}

TEST_CASE("constant target gives zero slopes and the mean as intercept") {
    std::vector<std::vector<double>> rows = {{1, 5}, {2, 3}, {3, 8}, {4, 1}};
    std::vector<double> y = {4200.0, 4200.0, 4200.0, 4200.0};
    LinearModel model;
    model.fit(numeric_dataset(rows, y), 0);
    CHECK(model.coefficients()[0] == 0.0);
    CHECK(model.coefficients()[1] == 0.0);
    CHECK(model.intercept() == 4200.0);
}

TEST_CASE("five-point fit matches the Gaussian elimination oracle within 1e-10") {
    std::vector<std::vector<double>> rows = {
        {1.0, 2.5}, {2.0, 1.0}, {3.5, 4.0}, {5.0, 0.5}, {6.5, 3.0},
    };
    std::vector<double> y = {100.0, 150.0, 260.0, 310.0, 420.0};

    LinearConfig cfg;
    cfg.ridge = 1e-8;
    LinearModel model(cfg);
    model.fit(numeric_dataset(rows, y), 0);

    auto [beta, intercept] = gaussian_elimination_fit(rows, y, 1e-8);
    CHECK(model.coefficients()[0] == Catch::Approx(beta[0]).margin(1e-10));
    CHECK(model.coefficients()[1] == Catch::Approx(beta[1]).margin(1e-10));
    CHECK(model.intercept() == Catch::Approx(intercept).margin(1e-10));
}

TEST_CASE("residuals are orthogonal to the centered design at ridge 0") {
    Rng rng(97);
    const std::size_t n = 60, p = 4;
    std::vector<std::vector<double>> rows(n, std::vector<double>(p));
    std::vector<double> y(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < p; ++j) rows[r][j] = rng.normal(0.0, 1.0);
        y[r] = 500.0 + 10.0 * rows[r][0] - 3.0 * rows[r][2] + rng.normal(0.0, 1.0);
    }
    LinearConfig cfg;
    cfg.ridge = 0.0;
    LinearModel model(cfg);
    EncodedDataset ds = numeric_dataset(rows, y);
    model.fit(ds, 0);

    const auto& res = model.residuals();
    std::vector<double> mean(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t r = 0; r < n; ++r) mean[j] += rows[r][j];
        mean[j] /= static_cast<double>(n);
    }
    for (std::size_t j = 0; j < p; ++j) {
        double dot = 0.0;
        for (std::size_t r = 0; r < n; ++r) dot += (rows[r][j] - mean[j]) * res[r];
        CHECK(std::abs(dot) < 1e-6);
    }
}

TEST_CASE("a row at the column means predicts the centered intercept") {
    Rng rng(111);
    const std::size_t n = 40;
    std::vector<std::vector<double>> rows(n, std::vector<double>(2));
    std::vector<double> y(n);
    for (std::size_t r = 0; r < n; ++r) {
        rows[r][0] = rng.uniform(0.0, 10.0);
        rows[r][1] = rng.uniform(5.0, 9.0);
        y[r] = 100.0 + 3.0 * rows[r][0] + 7.0 * rows[r][1] + rng.normal(0.0, 0.5);
    }
    EncodedDataset train = numeric_dataset(rows, y);
    LinearModel model;
    model.fit(train, 0);

    double y_mean = 0.0;
    for (double v : y) y_mean += v;
    y_mean /= static_cast<double>(n);

    EncodedDataset probe = train;
    probe.n = 1;
    probe.numeric = {0.0, 0.0};
    for (std::size_t r = 0; r < n; ++r) {
        probe.numeric[0] += rows[r][0] / static_cast<double>(n);
        probe.numeric[1] += rows[r][1] / static_cast<double>(n);
    }
    probe.target = {1.0};
    CHECK(model.predict(probe)[0] == Catch::Approx(y_mean).margin(1e-9));
}

TEST_CASE("one-hot collinearity is handled by the tiny ridge") {
    // two categories + intercept is rank-deficient without regularization
    auto schema = std::make_shared<FeatureSchema>();
    schema->numerical = {{"x", "-", -10.0, 10.0}};
    schema->categorical = {{"g", {"a", "b"}}};
    schema->target_7d = "t7";
    schema->target_28d = "t28";
    EncodedDataset ds;
    ds.schema = schema;
    ds.age = Age::d28;
    ds.n = 6;
    Rng rng(5);
    for (std::size_t r = 0; r < ds.n; ++r) {
        ds.numeric.push_back(rng.uniform(0.0, 5.0));
        ds.categorical.push_back(r % 2);
        ds.target.push_back(1000.0 + 50.0 * ds.numeric[r] + (r % 2 ? 200.0 : 0.0));
    }
    LinearModel model;
    model.fit(ds, 0);
    const auto pred = model.predict(ds);
    for (std::size_t r = 0; r < ds.n; ++r) CHECK(pred[r] == Catch::Approx(ds.target[r]).margin(1e-4));
}

TEST_CASE("predicting with a different schema is an error") {
    std::vector<std::vector<double>> rows = {{1}, {2}, {3}, {4}, {5}};
    std::vector<double> y = {10, 20, 30, 40, 50};
    LinearModel model;
    model.fit(numeric_dataset(rows, y), 0);

    EncodedDataset other = numeric_dataset({{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}}, {1, 2, 3, 4, 5});
    CHECK_THROWS_AS(model.predict(other), SchemaError);
}
