#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "aniheat/diffusivity.hpp"
#include "aniheat/errors.hpp"
#include "aniheat/fft.hpp"
#include "aniheat/grid.hpp"
#include "aniheat/kernel.hpp"
#include "aniheat/quadrature.hpp"
#include "aniheat/spd.hpp"

namespace aniheat {

/// Initial datum delta_0; replaces the homogeneous propagation term by a
/// direct sampling of the kernel W(.; 0, t).
struct DeltaDatum {};

/// Time-ordered sequence of fields on one shared grid.
struct Trajectory {
    std::vector<double> times;
    std::vector<GridField> states;

    void push(double t, GridField state) {
        if (!times.empty()) {
            if (!(t > times.back())) throw Error("Trajectory: times must be strictly increasing");
            states.front().require_same_grid(state);
        }
        times.push_back(t);
        states.push_back(std::move(state));
    }

    std::size_t size() const { return times.size(); }
};

/// Weighted sup seminorm index: sup |x^alpha (d/dx)^beta u|.
struct SeminormIndex {
    std::vector<int> alpha;
    std::vector<int> beta;
};

using SourceFn = std::function<GridField(double)>;

namespace detail {

inline std::vector<std::complex<double>> to_spectrum(const GridField& u) {
    std::vector<std::complex<double>> a(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) a[i] = u[i];
    fft_nd(a, u.grid().dim(), static_cast<std::size_t>(u.grid().points_per_axis()));
    return a;
}

inline GridField from_spectrum(std::vector<std::complex<double>> a, const Grid& grid,
                               double reference_norm) {
    fft_nd(a, grid.dim(), static_cast<std::size_t>(grid.points_per_axis()), true);
    double max_imag = 0.0;
    std::vector<double> values(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        max_imag = std::max(max_imag, std::abs(a[i].imag()));
        values[i] = a[i].real();
    }
    if (max_imag > 1e-12 * std::max(reference_norm, 1e-300))
        throw SpectralLeakage("discarded imaginary part " + std::to_string(max_imag) +
                              " exceeds 1e-12 of field norm " + std::to_string(reference_norm));
    return GridField(grid, std::move(values));
}

inline double sup_norm(const GridField& u) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s = std::max(s, std::abs(u[i]));
    return s;
}

} // namespace detail

/// Applies the propagator by multiplying the spectrum with the exact symbol
/// exp(-<B xi, xi>), B = A(t) - A(s), on the grid frequencies. The s = t case
/// is the identity.
inline GridField apply_symbol(const GridField& u, const SpdMatrix& b) {
    const Grid& g = u.grid();
    if (b.dim() != g.dim()) throw Error("apply_symbol: dimension mismatch");
    auto spec = detail::to_spectrum(u);
    std::array<double, kMaxGridDim> xi{};
    std::span<double> xis(xi.data(), static_cast<std::size_t>(g.dim()));
    for (std::size_t i = 0; i < spec.size(); ++i) {
        g.frequency_vector(i, xis);
        const double e = -b.quadratic_form(xis);
        spec[i] *= e < kUnderflowExponent ? 0.0 : std::exp(e);
    }
    return detail::from_spectrum(std::move(spec), g, detail::sup_norm(u));
}

inline GridField apply_propagator(const GridField& u, TimePair pair, const DiffusivityPath& path) {
    if (pair.s == pair.t) return u;
    return apply_symbol(u, increment(path, pair));
}

/// Samples W(.; 0, t) on the grid (the delta-datum homogeneous term).
inline GridField sample_kernel(const Grid& grid, const DiffusivityPath& path, double t) {
    if (!(t > 0.0)) throw Error("sample_kernel: requires t > 0");
    KernelParams kp(path, TimePair(0.0, t));
    return GridField::sample(grid, [&](std::span<const double> x) { return eval_kernel(x, kp); });
}

namespace detail {

/// Source integral int_0^t W_{s,t} f(s) ds by Gauss–Legendre with `nodes`
/// points on each panel between coefficient jump times.
inline GridField duhamel_source_integral(const Grid& grid, const SourceFn& source, double t0, double t,
                                         const DiffusivityPath& path, int nodes) {
    GridField acc(grid);
    if (!(t > t0)) return acc;
    std::vector<double> pts;
    pts.push_back(t0);
    for (double s : path.split_points())
        if (s > t0 && s < t) pts.push_back(s);
    pts.push_back(t);
    const GaussRule& rule = gauss_rule(nodes);
    for (std::size_t pnl = 0; pnl + 1 < pts.size(); ++pnl) {
        const double mid = 0.5 * (pts[pnl] + pts[pnl + 1]);
        const double half = 0.5 * (pts[pnl + 1] - pts[pnl]);
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
            const double s = mid + half * rule.nodes[k];
            GridField fs = source(s);
            fs.require_same_grid(acc);
            acc += apply_propagator(fs, TimePair(s, t), path) * (half * rule.weights[k]);
        }
    }
    return acc;
}

} // namespace detail

/// Duhamel solution u(t) = W_{0,t} u0 + int_0^t W_{s,t} f(s) ds.
inline GridField duhamel_solve(const GridField& u0, const SourceFn& source, double t,
                               const DiffusivityPath& path, int nodes = 8) {
    if (!(t > 0.0)) throw Error("duhamel_solve: requires t > 0");
    if (nodes < 1) throw Error("duhamel_solve: requires nodes >= 1");
    GridField u = apply_propagator(u0, TimePair(0.0, t), path);
    if (source) u += detail::duhamel_source_integral(u0.grid(), source, 0.0, t, path, nodes);
    return u;
}

inline GridField duhamel_solve(DeltaDatum, const Grid& grid, const SourceFn& source, double t,
                               const DiffusivityPath& path, int nodes = 8) {
    if (!(t > 0.0)) throw Error("duhamel_solve: requires t > 0");
    if (nodes < 1) throw Error("duhamel_solve: requires nodes >= 1");
    GridField u = sample_kernel(grid, path, t);
    if (source) u += detail::duhamel_source_integral(grid, source, 0.0, t, path, nodes);
    return u;
}

/// Solves along a time grid by stepping: the homogeneous part advances with
/// the exact symbol (the semigroup law makes stepping identical to the direct
/// formula), the source integral accumulates panel by panel.
inline Trajectory solve_trajectory(const GridField& u0, const SourceFn& source,
                                   std::span<const double> times, const DiffusivityPath& path,
                                   int nodes = 8) {
    if (times.empty()) throw Error("solve_trajectory: empty time grid");
    for (std::size_t k = 0; k + 1 < times.size(); ++k)
        if (!(times[k] < times[k + 1])) throw Error("solve_trajectory: times must be strictly increasing");
    if (!(times.front() >= 0.0)) throw Error("solve_trajectory: times must be >= 0");

    Trajectory traj;
    GridField u = times.front() == 0.0 ? u0
                                       : duhamel_solve(u0, source, times.front(), path, nodes);
    traj.push(times.front(), u);
    for (std::size_t k = 1; k < times.size(); ++k) {
        const TimePair step(times[k - 1], times[k]);
        u = apply_propagator(u, step, path);
        if (source) u += detail::duhamel_source_integral(u.grid(), source, step.s, step.t, path, nodes);
        traj.push(times[k], u);
    }
    return traj;
}

inline Trajectory solve_trajectory(DeltaDatum, const Grid& grid, const SourceFn& source,
                                   std::span<const double> times, const DiffusivityPath& path,
                                   int nodes = 8) {
    if (times.empty()) throw Error("solve_trajectory: empty time grid");
    if (!(times.front() > 0.0))
        throw Error("solve_trajectory: delta datum requires a time grid starting after 0");
    Trajectory traj;
    GridField u = duhamel_solve(DeltaDatum{}, grid, source, times.front(), path, nodes);
    traj.push(times.front(), u);
    for (std::size_t k = 1; k < times.size(); ++k) {
        if (!(times[k] > times[k - 1])) throw Error("solve_trajectory: times must be strictly increasing");
        const TimePair step(times[k - 1], times[k]);
        u = apply_propagator(u, step, path);
        if (source) u += detail::duhamel_source_integral(grid, source, step.s, step.t, path, nodes);
        traj.push(times[k], u);
    }
    return traj;
}

/// Grid L^q norm (h^n sum |u|^q)^(1/q); q = inf gives the max absolute value.
inline double lq_norm(const GridField& u, double q) {
    if (!(q >= 1.0)) throw InvalidExponent("lq_norm: requires q >= 1");
    if (std::isinf(q)) return detail::sup_norm(u);
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += std::pow(std::abs(u[i]), q);
    return std::pow(u.grid().cell_volume() * s, 1.0 / q);
}

inline double positivity_min(const GridField& u) {
    double m = u.size() ? u[0] : 0.0;
    for (std::size_t i = 1; i < u.size(); ++i) m = std::min(m, u[i]);
    return m;
}

/// Spectral mixed partial derivative prod_j (d/dx_j)^{beta_j} u. Orders are
/// capped at 4 per axis; the unpaired Nyquist mode is zeroed for odd orders
/// to keep the result real.
inline GridField spectral_derivative(const GridField& u, std::span<const int> beta) {
    const Grid& g = u.grid();
    if (static_cast<int>(beta.size()) != g.dim()) throw Error("spectral_derivative: order size mismatch");
    int total = 0;
    bool any_odd = false;
    for (int b : beta) {
        if (b < 0) throw Error("spectral_derivative: negative order");
        if (b > 4) throw OrderTooHigh("spectral_derivative: per-axis order capped at 4");
        total += b;
        if (b % 2 == 1) any_odd = true;
    }
    if (total == 0) return u;
    auto spec = detail::to_spectrum(u);
    std::array<int, kMaxGridDim> idx{};
    std::span<int> idxs(idx.data(), static_cast<std::size_t>(g.dim()));
    const int nyquist = g.points_per_axis() / 2;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        g.unravel(i, idxs);
        std::complex<double> factor(1.0, 0.0);
        bool kill = false;
        for (int d = 0; d < g.dim(); ++d) {
            const int b = beta[static_cast<std::size_t>(d)];
            if (b == 0) continue;
            if (any_odd && idx[static_cast<std::size_t>(d)] == nyquist) {
                kill = true;
                break;
            }
            const std::complex<double> ix(0.0, g.frequency(idx[static_cast<std::size_t>(d)]));
            for (int k = 0; k < b; ++k) factor *= ix;
        }
        spec[i] = kill ? 0.0 : spec[i] * factor;
    }
    // derivative amplifies by |xi|^total; scale the leakage reference accordingly
    const double xi_max = std::abs(g.frequency(nyquist));
    const double ref = detail::sup_norm(u) * std::pow(std::max(xi_max, 1.0), total);
    return detail::from_spectrum(std::move(spec), g, ref);
}

/// sup over the grid of |x^alpha (d/dx)^beta u|.
inline double seminorm(const GridField& u, const SeminormIndex& idx) {
    const Grid& g = u.grid();
    if (static_cast<int>(idx.alpha.size()) != g.dim() || static_cast<int>(idx.beta.size()) != g.dim())
        throw Error("seminorm: index size mismatch");
    for (int a : idx.alpha)
        if (a < 0) throw Error("seminorm: negative alpha entry");
    const GridField du = spectral_derivative(u, idx.beta);
    std::array<double, kMaxGridDim> x{};
    std::span<double> xs(x.data(), static_cast<std::size_t>(g.dim()));
    double best = 0.0;
    for (std::size_t i = 0; i < du.size(); ++i) {
        g.point(i, xs);
        double w = 1.0;
        for (int d = 0; d < g.dim(); ++d)
            for (int k = 0; k < idx.alpha[static_cast<std::size_t>(d)]; ++k)
                w *= xs[static_cast<std::size_t>(d)];
        best = std::max(best, std::abs(w * du[i]));
    }
    return best;
}

/// Discrete residual (u(t+dt) - u(t-dt))/(2 dt) - sum a_ij(t) D^2_ij u(t) - f(t)
/// at an interior index of a uniformly spaced trajectory. The spatial operator
/// is applied spectrally in one pass.
inline GridField pde_residual(const Trajectory& traj, std::size_t index, const SourceFn& source,
                              const DiffusivityPath& path) {
    if (traj.size() < 3 || index == 0 || index + 1 >= traj.size())
        throw Error("pde_residual: index must be interior to a trajectory of length >= 3");
    const double dt0 = traj.times[1] - traj.times[0];
    for (std::size_t k = 0; k + 1 < traj.times.size(); ++k) {
        const double dt = traj.times[k + 1] - traj.times[k];
        if (std::abs(dt - dt0) > 1e-12 * std::max(std::abs(dt0), 1.0))
            throw NonUniformTimes("pde_residual: time spacing varies beyond 1e-12");
    }
    const double t = traj.times[index];
    const GridField& u = traj.states[index];
    const Grid& g = u.grid();
    const SpdMatrix a = path.evaluate(t);
    if (a.dim() != g.dim()) throw Error("pde_residual: coefficient dimension mismatch");

    // L_t u = IFFT( -<a xi, xi> . FFT u )
    auto spec = detail::to_spectrum(u);
    std::array<double, kMaxGridDim> xi{};
    std::span<double> xis(xi.data(), static_cast<std::size_t>(g.dim()));
    for (std::size_t i = 0; i < spec.size(); ++i) {
        g.frequency_vector(i, xis);
        spec[i] *= -a.quadratic_form(xis);
    }
    const double xi_max = std::abs(g.frequency(g.points_per_axis() / 2));
    const GridField lu = detail::from_spectrum(std::move(spec), g,
                                               detail::sup_norm(u) * a.max_abs() * xi_max * xi_max *
                                                   g.dim() * g.dim());

    GridField res = (traj.states[index + 1] - traj.states[index - 1]) * (0.5 / dt0);
    res -= lu;
    if (source) {
        GridField f = source(t);
        f.require_same_grid(res);
        res -= f;
    }
    return res;
}

} // namespace aniheat
