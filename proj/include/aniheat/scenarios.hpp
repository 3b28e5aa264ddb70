#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "aniheat/grid.hpp"
#include "aniheat/rng.hpp"
#include "aniheat/spd.hpp"

namespace aniheat {

/// Random SPD matrix with eigenvalues log-uniform in [lo, hi], conjugated by
/// random Givens rotations.
inline SpdMatrix random_spd(Rng& rng, int dim, double lo, double hi) {
    std::vector<double> m(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int i = 0; i < dim; ++i)
        m[static_cast<std::size_t>(i) * dim + i] = lo * std::pow(hi / lo, rng.uniform());
    auto rotate = [&](int p, int q, double theta) {
        const double c = std::cos(theta), s = std::sin(theta);
        for (int k = 0; k < dim; ++k) {
            const double mp = m[static_cast<std::size_t>(p) * dim + k];
            const double mq = m[static_cast<std::size_t>(q) * dim + k];
            m[static_cast<std::size_t>(p) * dim + k] = c * mp - s * mq;
            m[static_cast<std::size_t>(q) * dim + k] = s * mp + c * mq;
        }
        for (int k = 0; k < dim; ++k) {
            const double mp = m[static_cast<std::size_t>(k) * dim + p];
            const double mq = m[static_cast<std::size_t>(k) * dim + q];
            m[static_cast<std::size_t>(k) * dim + p] = c * mp - s * mq;
            m[static_cast<std::size_t>(k) * dim + q] = s * mp + c * mq;
        }
    };
    for (int p = 0; p < dim; ++p)
        for (int q = p + 1; q < dim; ++q) rotate(p, q, rng.uniform(0.0, 2.0 * M_PI));
    return SpdMatrix(dim, m);
}

/// Real band-limited field built from random plane waves with mode numbers
/// capped at max_mode per axis.
inline GridField random_band_limited(Rng& rng, const Grid& grid, int max_mode) {
    GridField out(grid);
    const int terms = 2 * grid.dim() * max_mode;
    std::vector<double> amp, phase;
    std::vector<std::vector<double>> kvec;
    for (int t = 0; t < terms; ++t) {
        amp.push_back(rng.normal());
        phase.push_back(rng.uniform(0.0, 2.0 * M_PI));
        std::vector<double> k(static_cast<std::size_t>(grid.dim()));
        for (int d = 0; d < grid.dim(); ++d)
            k[static_cast<std::size_t>(d)] =
                2.0 * M_PI * rng.uniform_int(-max_mode, max_mode) / grid.box_length();
        kvec.push_back(k);
    }
    std::vector<double> x(static_cast<std::size_t>(grid.dim()));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid.point(i, x);
        double v = 0.0;
        for (int t = 0; t < terms; ++t) {
            double dot = 0.0;
            for (int d = 0; d < grid.dim(); ++d)
                dot += kvec[static_cast<std::size_t>(t)][static_cast<std::size_t>(d)] *
                       x[static_cast<std::size_t>(d)];
            v += amp[static_cast<std::size_t>(t)] * std::cos(dot + phase[static_cast<std::size_t>(t)]);
        }
        out[i] = v;
    }
    return out;
}

/// Normalized Gaussian density with the given mean and covariance.
inline GridField gaussian_density_field(const Grid& grid, std::span<const double> mean,
                                        const SpdMatrix& covariance) {
    const int n = grid.dim();
    if (covariance.dim() != n || static_cast<int>(mean.size()) != n)
        throw Error("gaussian_density_field: dimension mismatch");
    const SpdMatrix prec = inverse_spd(covariance);
    const double norm = 1.0 / std::sqrt(std::pow(2.0 * M_PI, n) * det_spd(covariance));
    return GridField::sample(grid, [&](std::span<const double> x) {
        std::vector<double> d(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] -
                                                                     mean[static_cast<std::size_t>(i)];
        const double e = -0.5 * prec.quadratic_form(d);
        return e < kUnderflowExponent ? 0.0 : norm * std::exp(e);
    });
}

/// Isotropic convenience overload: covariance sigma2 * I, mean zero.
inline GridField gaussian_density_field(const Grid& grid, double sigma2) {
    std::vector<double> mean(static_cast<std::size_t>(grid.dim()), 0.0);
    return gaussian_density_field(grid, mean, SpdMatrix::identity(grid.dim()) * sigma2);
}

/// Random Young triple on the 1/32 lattice of inverse exponents, so the
/// relation 1/p + 1/q = 1/r + 1 holds exactly.
inline std::pair<double, double> random_qr_lattice(Rng& rng) {
    const int iq = rng.uniform_int(0, 32);
    const int ir = rng.uniform_int(0, iq);
    const double q = iq == 0 ? std::numeric_limits<double>::infinity() : 32.0 / iq;
    const double r = ir == 0 ? std::numeric_limits<double>::infinity() : 32.0 / ir;
    return {q, r};
}

} // namespace aniheat
