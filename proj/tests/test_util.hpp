#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "aniheat/grid.hpp"
#include "aniheat/spd.hpp"

namespace testutil {

/// Deterministic uniform in [a, b) from the raw engine output, so sequences
/// do not depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double a = 0.0, double b = 1.0) {
        const double u = static_cast<double>(engine_() >> 11) * 0x1p-53;
        return a + (b - a) * u;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

    int uniform_int(int lo, int hi) { // inclusive bounds
        return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Random SPD matrix with eigenvalues in [lo, hi], rotated by random Givens
/// rotations.
inline aniheat::SpdMatrix random_spd(Rng& rng, int dim, double lo, double hi) {
    std::vector<double> m(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int i = 0; i < dim; ++i)
        m[static_cast<std::size_t>(i) * dim + i] = lo * std::pow(hi / lo, rng.uniform());
    auto rotate = [&](int p, int q, double theta) {
        const double c = std::cos(theta), s = std::sin(theta);
        for (int k = 0; k < dim; ++k) { // rows
            const double mp = m[static_cast<std::size_t>(p) * dim + k];
            const double mq = m[static_cast<std::size_t>(q) * dim + k];
            m[static_cast<std::size_t>(p) * dim + k] = c * mp - s * mq;
            m[static_cast<std::size_t>(q) * dim + k] = s * mp + c * mq;
        }
        for (int k = 0; k < dim; ++k) { // columns
            const double mp = m[static_cast<std::size_t>(k) * dim + p];
            const double mq = m[static_cast<std::size_t>(k) * dim + q];
            m[static_cast<std::size_t>(k) * dim + p] = c * mp - s * mq;
            m[static_cast<std::size_t>(k) * dim + q] = s * mp + c * mq;
        }
    };
    for (int p = 0; p < dim; ++p)
        for (int q = p + 1; q < dim; ++q) rotate(p, q, rng.uniform(0.0, 2.0 * M_PI));
    return aniheat::SpdMatrix(dim, m);
}

/// Real band-limited field: random coefficients on low modes only.
inline aniheat::GridField random_band_limited(Rng& rng, const aniheat::Grid& grid, int max_mode) {
    using namespace aniheat;
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

/// Normalized Gaussian density with covariance sigma2 * I, mean zero.
inline aniheat::GridField gaussian_field(const aniheat::Grid& grid, double sigma2) {
    const int n = grid.dim();
    const double norm = 1.0 / std::pow(2.0 * M_PI * sigma2, 0.5 * n);
    return aniheat::GridField::sample(grid, [&](std::span<const double> x) {
        double q = 0.0;
        for (double xi : x) q += xi * xi;
        return norm * std::exp(-0.5 * q / sigma2);
    });
}

} // namespace testutil
