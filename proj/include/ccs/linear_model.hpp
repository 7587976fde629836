#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "ccs/jsonutil.hpp"
#include "ccs/model.hpp"

namespace ccs {

struct LinearConfig {
    double ridge = 1e-8; // relative to the unit-variance column scale

    nlohmann::ordered_json to_json() const { return {{"ridge", ridge}}; }

    static LinearConfig from_json(const nlohmann::json& j) {
        require_known_keys(j, {"ridge"}, "linear config");
        LinearConfig c;
        maybe_get(j, "ridge", c.ridge);
        if (c.ridge < 0.0) throw ConfigError("linear config: ridge must be >= 0");
        return c;
    }
};

// Multiple linear regression over the one-hot expansion, solved through the
// normal equations. Columns are centered and scaled internally, which leaves
// the intercept unpenalized and makes the ridge a relative quantity; the
// tiny default resolves the exact collinearity between one-hot groups and
// the intercept. Coefficients are reported in raw column units.
class LinearModel : public Model {
public:
    explicit LinearModel(LinearConfig cfg = {}) : cfg_(cfg) {}

    ModelKind kind() const override { return ModelKind::linear; }

    void fit(const EncodedDataset& train, std::uint64_t /*seed*/) override {
        if (train.n == 0) throw InvalidArgument("fit_linear: empty training set");
        const std::size_t n = train.n;
        const std::size_t p = train.schema->one_hot_width();
        const std::vector<double> x = one_hot(train);

        col_mean_.assign(p, 0.0);
        col_std_.assign(p, 0.0);
        for (std::size_t j = 0; j < p; ++j) {
            double m = 0.0;
            for (std::size_t r = 0; r < n; ++r) m += x[r * p + j];
            m /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                const double d = x[r * p + j] - m;
                var += d * d;
            }
            col_mean_[j] = m;
            col_std_[j] = std::sqrt(var / static_cast<double>(n));
        }

        std::vector<std::size_t> active;
        for (std::size_t j = 0; j < p; ++j) {
            if (col_std_[j] > 0.0) active.push_back(j);
        }

        double y_mean = 0.0;
        for (double t : train.target) y_mean += t;
        y_mean /= static_cast<double>(n);

        Eigen::MatrixXd z(n, active.size());
        Eigen::VectorXd yc(n);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t a = 0; a < active.size(); ++a) {
                const std::size_t j = active[a];
                z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a)) =
                    (x[r * p + j] - col_mean_[j]) / col_std_[j];
            }
            yc(static_cast<Eigen::Index>(r)) = train.target[r] - y_mean;
        }

        Eigen::MatrixXd a = z.transpose() * z;
        a.diagonal().array() += cfg_.ridge * static_cast<double>(n);
        const Eigen::VectorXd b = z.transpose() * yc;
        Eigen::LDLT<Eigen::MatrixXd> solver(a);
        if (solver.info() != Eigen::Success) {
            throw NumericError("fit_linear: normal equations are numerically singular");
        }
        const Eigen::VectorXd w = solver.solve(b);
        if (!w.allFinite()) throw NumericError("fit_linear: solver produced non-finite coefficients");

        coeffs_.assign(p, 0.0);
        for (std::size_t a2 = 0; a2 < active.size(); ++a2) {
            const std::size_t j = active[a2];
            coeffs_[j] = w(static_cast<Eigen::Index>(a2)) / col_std_[j];
        }
        intercept_ = y_mean;
        for (std::size_t j = 0; j < p; ++j) intercept_ -= coeffs_[j] * col_mean_[j];

        schema_hash_ = train.schema->hash();
        layout_ = OneHotLayout(*train.schema);

        residuals_.resize(n);
        const std::vector<double> fitted = predict(train);
        for (std::size_t r = 0; r < n; ++r) residuals_[r] = train.target[r] - fitted[r];
    }

    std::vector<double> predict(const EncodedDataset& rows) const override {
        require_fitted_schema(rows, schema_hash_);
        const std::size_t p = rows.schema->one_hot_width();
        const std::vector<double> x = one_hot(rows);
        std::vector<double> out(rows.n, intercept_);
        for (std::size_t r = 0; r < rows.n; ++r) {
            double acc = 0.0;
            for (std::size_t j = 0; j < p; ++j) acc += coeffs_[j] * x[r * p + j];
            out[r] += acc;
        }
        return out;
    }

    // |coefficient| * std(column), one-hot groups summed per original feature.
    std::optional<std::vector<double>> intrinsic_importance() const override {
        std::vector<double> imp(layout_.offset.size(), 0.0);
        for (std::size_t f = 0; f < layout_.offset.size(); ++f) {
            for (std::size_t j = layout_.offset[f]; j < layout_.offset[f] + layout_.width[f]; ++j) {
                imp[f] += std::abs(coeffs_[j]) * col_std_[j];
            }
        }
        double total = 0.0;
        for (double v : imp) total += v;
        if (total > 0.0) {
            for (double& v : imp) v /= total;
        } else if (!imp.empty()) {
            for (double& v : imp) v = 1.0 / static_cast<double>(imp.size());
        }
        return imp;
    }

    const std::vector<double>& coefficients() const { return coeffs_; }
    double intercept() const { return intercept_; }
    const std::vector<double>& residuals() const { return residuals_; }
    const std::vector<double>& column_stddev() const { return col_std_; }
    const LinearConfig& config() const { return cfg_; }
    std::uint64_t schema_hash() const { return schema_hash_; }

    // Serialization support: restore a fitted state without refitting.
    void restore(std::vector<double> coeffs, double intercept, std::vector<double> col_mean,
                 std::vector<double> col_std, std::uint64_t schema_hash, const FeatureSchema& schema) {
        coeffs_ = std::move(coeffs);
        intercept_ = intercept;
        col_mean_ = std::move(col_mean);
        col_std_ = std::move(col_std);
        schema_hash_ = schema_hash;
        layout_ = OneHotLayout(schema);
    }
    const std::vector<double>& column_mean() const { return col_mean_; }

private:
    LinearConfig cfg_;
    std::vector<double> coeffs_;
    double intercept_ = 0.0;
    std::vector<double> col_mean_;
    std::vector<double> col_std_;
    std::vector<double> residuals_;
    std::uint64_t schema_hash_ = 0;
    OneHotLayout layout_;
};

} // namespace ccs
