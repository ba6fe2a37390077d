#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "adamlab/errors.hpp"

namespace adamlab {

struct RegressionFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t n = 0;

    double predict(double x) const { return slope * x + intercept; }
    friend bool operator==(const RegressionFit&, const RegressionFit&) = default;
};

/// Ordinary least squares y ~ slope*x + intercept, two-pass centered form.
/// r^2 is 1 when y has no variance (the line fits exactly).
inline RegressionFit ordinary_least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InvalidArgument("regression inputs differ in length");
    const std::size_t n = x.size();
    if (n < 2) throw InsufficientData("regression needs at least two points");

    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw DegenerateRegression("regressor has zero variance");

    RegressionFit fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    if (syy > 0.0) {
        double ss_res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - fit.predict(x[i]);
            ss_res += r * r;
        }
        fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    } else {
        fit.r_squared = 1.0;
    }
    return fit;
}

}  // namespace adamlab
