#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "aniheat/errors.hpp"

namespace aniheat {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_residual = 0.0;
    std::size_t count = 0;
};

/// Ordinary least squares y = slope x + intercept; max_residual is the
/// largest absolute deviation of the fit from the data.
inline LineFit fit_line(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2) throw Error("fit_line: need at least two points");
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw Error("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    f.count = xs.size();
    for (std::size_t i = 0; i < xs.size(); ++i)
        f.max_residual = std::max(f.max_residual, std::abs(ys[i] - (f.slope * xs[i] + f.intercept)));
    return f;
}

} // namespace aniheat
