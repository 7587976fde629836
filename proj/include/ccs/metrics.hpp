#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "ccs/error.hpp"

namespace ccs {

// Coefficient of determination: 1 - SS_res / SS_tot.
inline double r2(std::span<const double> actual, std::span<const double> pred) {
    if (actual.size() != pred.size()) throw InvalidArgument("r2: length mismatch");
    if (actual.size() < 2) throw InvalidArgument("r2: need at least 2 observations");
    double mean = 0.0;
    for (double a : actual) mean += a;
    mean /= static_cast<double>(actual.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        ss_res += (actual[i] - pred[i]) * (actual[i] - pred[i]);
        ss_tot += (actual[i] - mean) * (actual[i] - mean);
    }
    if (ss_tot == 0.0) throw InvalidArgument("r2: undefined for constant actual values");
    return 1.0 - ss_res / ss_tot;
}

inline double mae(std::span<const double> actual, std::span<const double> pred) {
    if (actual.size() != pred.size()) throw InvalidArgument("mae: length mismatch");
    if (actual.empty()) throw InvalidArgument("mae: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) acc += std::abs(actual[i] - pred[i]);
    return acc / static_cast<double>(actual.size());
}

// Mean absolute percentage error; requires strictly positive actuals.
inline double mape(std::span<const double> actual, std::span<const double> pred) {
    if (actual.size() != pred.size()) throw InvalidArgument("mape: length mismatch");
    if (actual.empty()) throw InvalidArgument("mape: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (!(actual[i] > 0.0)) {
            throw InvalidArgument("mape: actual value at index " + std::to_string(i) + " is not positive");
        }
        acc += std::abs(actual[i] - pred[i]) / actual[i];
    }
    return 100.0 / static_cast<double>(actual.size()) * acc;
}

} // namespace ccs
