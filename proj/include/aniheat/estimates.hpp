#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aniheat/diffusivity.hpp"
#include "aniheat/errors.hpp"
#include "aniheat/kernel.hpp"
#include "aniheat/propagator.hpp"
#include "aniheat/quadrature.hpp"

namespace aniheat {

namespace detail {

inline double inv_exponent(double p) { return std::isinf(p) ? 0.0 : 1.0 / p; }

} // namespace detail

/// Young triple 1/p + 1/q = 1/r + 1 with exponents in [1, inf].
struct ExponentTriple {
    double p, q, r;

    ExponentTriple(double p_, double q_, double r_) : p(p_), q(q_), r(r_) {
        for (double e : {p, q, r})
            if (!(e >= 1.0)) throw InvalidExponent("ExponentTriple: exponents must be >= 1");
        const double lhs = detail::inv_exponent(p) + detail::inv_exponent(q);
        const double rhs = detail::inv_exponent(r) + 1.0;
        if (std::abs(lhs - rhs) > 1e-12)
            throw InvalidExponent("ExponentTriple: 1/p + 1/q must equal 1/r + 1");
    }

    /// Completes the triple from (q, r); requires 1/q >= 1/r.
    static ExponentTriple from_qr(double q, double r) {
        const double ip = 1.0 + detail::inv_exponent(r) - detail::inv_exponent(q);
        if (ip < -1e-12 || ip > 1.0 + 1e-12)
            throw InvalidExponent("ExponentTriple: no admissible p for this (q, r)");
        const double p = ip <= 1e-15 ? std::numeric_limits<double>::infinity() : 1.0 / ip;
        return ExponentTriple(p, q, r);
    }
};

/// Operator norm bound ||W_{s,t}||_{q->r} <= ||W(.; s,t)||_p.
inline double young_bound(const ExponentTriple& tr, TimePair pair, const DiffusivityPath& path) {
    pair.require_strict();
    return kernel_lp_norm(tr.p, KernelParams(path, pair));
}

struct BoundCheck {
    double lhs = 0.0;
    double bound = 0.0;
    double margin = 0.0;
    bool satisfied = false;
};

/// Relative slack absorbing grid quadrature error in bound comparisons.
inline constexpr double kBoundSlack = 1e-8;

inline BoundCheck check_young(const GridField& v, const ExponentTriple& tr, TimePair pair,
                              const DiffusivityPath& path) {
    BoundCheck c;
    c.lhs = lq_norm(apply_propagator(v, pair, path), tr.r);
    c.bound = young_bound(tr, pair, path) * lq_norm(v, tr.q);
    c.margin = c.bound - c.lhs;
    c.satisfied = c.lhs <= c.bound * (1.0 + kBoundSlack) + 1e-300;
    return c;
}

struct EnergyTrace {
    std::vector<double> times;
    std::vector<double> values; // ||u(t_k)||_p^p
    double p = 2.0;
};

inline EnergyTrace energy_trace(const Trajectory& traj, double p) {
    if (!(p > 1.0) || std::isinf(p))
        throw InvalidExponent("energy_trace: requires p in (1, inf)");
    EnergyTrace e;
    e.p = p;
    e.times = traj.times;
    e.values.reserve(traj.size());
    for (const GridField& u : traj.states) e.values.push_back(std::pow(lq_norm(u, p), p));
    return e;
}

inline bool is_nonincreasing(std::span<const double> values, double rel_slack = 1e-10) {
    for (std::size_t k = 0; k + 1 < values.size(); ++k)
        if (values[k + 1] > values[k] * (1.0 + rel_slack) + 1e-300) return false;
    return true;
}

/// Data of the lambda_min decay estimates: F(t) = int_0^t lambda_min(a(tau)) dtau,
/// an optional uniform lower bound gamma, and the Hoelder pair (alpha, beta).
struct DecayData {
    std::optional<double> gamma;
    std::function<double(double)> F;
    double alpha = 2.0;
    double beta = 2.0;
    int dim = 1;

    /// Internal cancellation-free increment F(t) - F(s); falls back to two F
    /// evaluations when absent.
    std::function<double(double, double)> increment_fn;

    static DecayData from_path(const DiffusivityPath& path, double alpha,
                               std::optional<double> gamma = std::nullopt) {
        if (!(alpha > 1.0) || std::isinf(alpha))
            throw InvalidExponent("DecayData: alpha must lie in (1, inf)");
        if (gamma && !(*gamma > 0.0)) throw Error("DecayData: gamma must be positive");
        DecayData d;
        d.alpha = alpha;
        d.beta = alpha / (alpha - 1.0);
        d.gamma = gamma;
        d.dim = path.dim();
        auto lmin = [path](double tau) { return min_eigenvalue(path.evaluate(tau)); };
        auto splits = path.split_points();
        d.increment_fn = [lmin, splits](double s, double t) {
            if (!(t > s)) return 0.0;
            return integrate_adaptive(lmin, s, t, splits, 1e-10);
        };
        d.F = [inc = d.increment_fn](double t) { return inc(0.0, t); };
        return d;
    }

    double increment(double s, double t) const {
        if (increment_fn) return increment_fn(s, t);
        return F(t) - F(s);
    }
};

struct DecayBound {
    double value = 0.0;
    std::optional<double> simplified; // gamma form, homogeneous case only
};

namespace detail {

/// int_0^t (F(t) - F(s))^{-kappa} ds for kappa in [0, 1). The substitution
/// tau = w^{1/(1-kappa)} absorbs the integrable endpoint singularity at
/// s = t into a bounded integrand.
inline double singular_time_integral(const DecayData& dd, double t, double kappa) {
    if (kappa == 0.0) return t;
    const double one_m = 1.0 - kappa;
    const double wmax = std::pow(t, one_m);
    auto g = [&](double w) {
        const double tau = std::pow(w, 1.0 / one_m);
        const double finc = std::max(dd.increment(t - tau, t), 1e-300);
        return std::pow(finc, -kappa) * std::pow(w, kappa / one_m) / one_m;
    };
    return integrate_adaptive(g, 0.0, wmax, {}, 1e-8);
}

} // namespace detail

/// Decay estimate ||u(t)||_r <= C F(t)^{-n(p-1)/2p} ||u0||_q
///   + C ||f||_{L^beta L^q} (int_0^t (F(t)-F(s))^{-n(p-1)alpha/2p} ds)^{1/alpha},
/// C = p^{-n/2p} (4 pi)^{-n(p-1)/2p}, admissible while n(p-1) alpha < 2p.
inline DecayBound decay_bound(double t, const ExponentTriple& tr, const DecayData& dd,
                              double u0_q_norm, double f_beta_norm) {
    if (!(t > 0.0)) throw Error("decay_bound: requires t > 0");
    const double n = static_cast<double>(dd.dim);
    const double p = tr.p;
    // kappa1 = n(p-1)/2p, with the p = inf limit n/2; p^(n/2p) -> 1.
    const double kappa1 = std::isinf(p) ? 0.5 * n : n * (p - 1.0) / (2.0 * p);
    const double p_factor = std::isinf(p) ? 1.0 : std::pow(p, n / (2.0 * p));
    const double kappa = kappa1 * dd.alpha;
    if (!(kappa < 1.0))
        throw InadmissibleExponents("decay_bound: requires n(p-1)alpha < 2p, got kappa = " +
                                    std::to_string(kappa));
    const double c = 1.0 / (p_factor * std::pow(4.0 * M_PI, kappa1));
    const double ft = dd.F(t);
    if (!(ft > 0.0)) throw ZeroAccumulation("decay_bound: F(t) = 0 at t = " + std::to_string(t));

    DecayBound out;
    out.value = c * std::pow(ft, -kappa1) * u0_q_norm;
    if (f_beta_norm != 0.0)
        out.value += c * f_beta_norm *
                     std::pow(detail::singular_time_integral(dd, t, kappa), 1.0 / dd.alpha);
    if (dd.gamma && f_beta_norm == 0.0)
        out.simplified = c * std::pow(*dd.gamma, -kappa1) * std::pow(t, -kappa1) * u0_q_norm;
    return out;
}

struct NormEstimatePoint {
    double t = 0.0;
    double lhs = 0.0;
    double bound = 0.0;
    bool satisfied = false;
};

/// Per-sample check of ||u(t)||_q <= ||u0||_q + int_0^t ||f(s)||_q ds, with the
/// source integral on the same Gauss–Legendre panels the solver uses.
inline std::vector<NormEstimatePoint> check_norm_estimate(const Trajectory& traj, const GridField& u0,
                                                          const SourceFn& source,
                                                          const DiffusivityPath& path, double q,
                                                          int nodes = 8, double rel_slack = 1e-10) {
    const double u0_norm = lq_norm(u0, q);
    std::vector<NormEstimatePoint> out;
    double integral = 0.0;
    double prev = 0.0;
    const auto splits = path.split_points();
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const double t = traj.times[k];
        if (source && t > prev) {
            std::vector<double> pts;
            pts.push_back(prev);
            for (double s : splits)
                if (s > prev && s < t) pts.push_back(s);
            pts.push_back(t);
            const GaussRule& rule = gauss_rule(nodes);
            for (std::size_t pnl = 0; pnl + 1 < pts.size(); ++pnl) {
                const double mid = 0.5 * (pts[pnl] + pts[pnl + 1]);
                const double half = 0.5 * (pts[pnl + 1] - pts[pnl]);
                for (std::size_t i = 0; i < rule.nodes.size(); ++i)
                    integral += half * rule.weights[i] * lq_norm(source(mid + half * rule.nodes[i]), q);
            }
        }
        prev = t;
        NormEstimatePoint pt;
        pt.t = t;
        pt.lhs = lq_norm(traj.states[k], q);
        pt.bound = u0_norm + integral;
        pt.satisfied = pt.lhs <= pt.bound * (1.0 + rel_slack) + 1e-300;
        out.push_back(pt);
    }
    return out;
}

/// Serializes bound reports as CSV rows {t, lhs, bound, margin, satisfied}.
inline void write_bound_csv(std::ostream& out, std::span<const NormEstimatePoint> points) {
    out << "t,lhs,bound,margin,satisfied\n";
    char buf[32];
    for (const NormEstimatePoint& p : points) {
        auto num = [&](double v) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            return std::string(buf);
        };
        out << num(p.t) << "," << num(p.lhs) << "," << num(p.bound) << "," << num(p.bound - p.lhs)
            << "," << (p.satisfied ? 1 : 0) << "\n";
    }
}

} // namespace aniheat
