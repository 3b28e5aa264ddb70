#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aniheat/errors.hpp"
#include "aniheat/quadrature.hpp"
#include "aniheat/spd.hpp"

namespace aniheat {

/// Ordered pair of times 0 <= s <= t. strict() additionally demands s < t.
struct TimePair {
    double s = 0.0;
    double t = 0.0;

    TimePair(double s_, double t_) : s(s_), t(t_) {
        if (!(s >= 0.0) || !(t >= 0.0)) throw Error("TimePair: times must be >= 0");
        if (!(s <= t)) throw Error("TimePair: requires s <= t");
    }

    bool is_strict() const { return s < t; }
    void require_strict() const {
        if (!is_strict()) throw Error("TimePair: requires s < t");
    }
    double length() const { return t - s; }
};

/// A point mass c * delta_{t0} sitting on top of the absolutely continuous
/// part of a coefficient path.
struct CoefficientPointMass {
    double time = 0.0;
    SpdMatrix weight;
};

/// Time-dependent diffusivity t -> a(t). The evaluator covers the absolutely
/// continuous part; declared jump times guide quadrature panel splits; point
/// masses contribute directly to the accumulated coefficient A(t) and are the
/// singular targets of mollification.
class DiffusivityPath {
public:
    enum class Kind { Constant, Smooth, PiecewiseConstant, Mollified };

    using Evaluator = std::function<SpdMatrix(double)>;
    using Antiderivative = std::function<SpdMatrix(double)>;

    static DiffusivityPath constant(SpdMatrix a) {
        DiffusivityPath p;
        p.dim_ = a.dim();
        p.kind_ = Kind::Constant;
        p.eval_ = [a](double) { return a; };
        p.antiderivative_ = [a](double t) { return a * t; };
        p.segments_ = {a};
        return p;
    }

    static DiffusivityPath smooth(int dim, Evaluator eval, Antiderivative antiderivative = nullptr,
                                  std::vector<double> split_hints = {}) {
        DiffusivityPath p;
        p.dim_ = dim;
        p.kind_ = Kind::Smooth;
        p.eval_ = std::move(eval);
        p.antiderivative_ = std::move(antiderivative);
        p.set_jumps(std::move(split_hints));
        return p;
    }

    /// values[k] holds on [jumps[k-1], jumps[k]) with jumps[-1] = 0; the last
    /// value extends to infinity. Integrates exactly through the segment sums.
    static DiffusivityPath piecewise_constant(std::vector<SpdMatrix> values, std::vector<double> jumps) {
        if (values.empty()) throw Error("DiffusivityPath: no segments");
        if (values.size() != jumps.size() + 1)
            throw Error("DiffusivityPath: need one more segment value than jump times");
        DiffusivityPath p;
        p.dim_ = values.front().dim();
        for (const SpdMatrix& v : values)
            if (v.dim() != p.dim_) throw Error("DiffusivityPath: segment dimension mismatch");
        p.kind_ = Kind::PiecewiseConstant;
        p.segments_ = values;
        p.set_jumps(jumps);
        auto segs = std::make_shared<std::vector<SpdMatrix>>(std::move(values));
        auto jmp = std::make_shared<std::vector<double>>(std::move(jumps));
        p.eval_ = [segs, jmp](double t) {
            std::size_t k = 0;
            while (k < jmp->size() && t >= (*jmp)[k]) ++k;
            return (*segs)[k];
        };
        p.antiderivative_ = [segs, jmp, dim = p.dim_](double t) {
            SpdMatrix acc(dim);
            double left = 0.0;
            for (std::size_t k = 0; k < segs->size(); ++k) {
                const double right = k < jmp->size() ? (*jmp)[k] : t;
                const double hi = std::min(t, right);
                if (hi > left) acc += (*segs)[k] * (hi - left);
                if (t <= right) break;
                left = right;
            }
            return acc;
        };
        return p;
    }

    static DiffusivityPath mollified(int dim, Evaluator eval, std::vector<double> split_hints) {
        DiffusivityPath p;
        p.dim_ = dim;
        p.kind_ = Kind::Mollified;
        p.eval_ = std::move(eval);
        p.set_jumps(std::move(split_hints));
        return p;
    }

    DiffusivityPath with_point_masses(std::vector<CoefficientPointMass> masses) const {
        DiffusivityPath p = *this;
        for (const CoefficientPointMass& m : masses) {
            if (!(m.time > 0.0)) throw Error("DiffusivityPath: point-mass time must be > 0");
            if (m.weight.dim() != dim_) throw Error("DiffusivityPath: point-mass dimension mismatch");
            p.masses_.push_back(m);
        }
        std::sort(p.masses_.begin(), p.masses_.end(),
                  [](const auto& a, const auto& b) { return a.time < b.time; });
        return p;
    }

    int dim() const { return dim_; }
    Kind kind() const { return kind_; }
    bool has_antiderivative() const { return static_cast<bool>(antiderivative_); }
    const std::vector<double>& jump_times() const { return jumps_; }
    const std::vector<CoefficientPointMass>& point_masses() const { return masses_; }
    const std::vector<SpdMatrix>& segments() const { return segments_; }

    /// Absolutely continuous part a(t); point masses are not represented here.
    SpdMatrix evaluate(double t) const {
        if (!(t >= 0.0)) throw Error("DiffusivityPath: evaluation time must be >= 0");
        SpdMatrix a = eval_(t);
        if (a.dim() != dim_) throw Error("DiffusivityPath: evaluator dimension mismatch");
        return a;
    }
    SpdMatrix operator()(double t) const { return evaluate(t); }

    /// Positions where the time integrand may lose smoothness: declared jumps
    /// plus point-mass locations.
    std::vector<double> split_points() const {
        std::vector<double> pts = jumps_;
        for (const CoefficientPointMass& m : masses_) pts.push_back(m.time);
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        return pts;
    }

private:
    void set_jumps(std::vector<double> jumps) {
        for (std::size_t k = 0; k < jumps.size(); ++k) {
            if (!(jumps[k] > 0.0)) throw Error("DiffusivityPath: jump times must be > 0");
            if (k > 0 && !(jumps[k] > jumps[k - 1]))
                throw Error("DiffusivityPath: jump times must be strictly increasing");
        }
        jumps_ = std::move(jumps);
    }

    int dim_ = 1;
    Kind kind_ = Kind::Constant;
    Evaluator eval_;
    Antiderivative antiderivative_;
    std::vector<double> jumps_;
    std::vector<SpdMatrix> segments_;
    std::vector<CoefficientPointMass> masses_;

    friend SpdMatrix accumulate(const DiffusivityPath&, double, double);
};

/// Accumulated diffusivity A(t): the entrywise integral of the absolutely
/// continuous part over [0, t] plus every point mass located in (0, t].
/// Closed-form antiderivatives are used when available, otherwise adaptive
/// Gauss–Legendre with panel splits at the declared jump times.
inline SpdMatrix accumulate(const DiffusivityPath& path, double t, double rel_tol = 1e-10) {
    if (!(t >= 0.0)) throw Error("accumulate: time must be >= 0");
    const int n = path.dim();
    SpdMatrix acc(n);
    if (t > 0.0) {
        if (path.antiderivative_) {
            acc = path.antiderivative_(t);
        } else {
            const std::size_t size = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
            VectorFn f = [&](double tau, std::span<double> out) {
                const SpdMatrix a = path.evaluate(tau);
                for (std::size_t k = 0; k < size; ++k) out[k] = a.entries()[k];
            };
            std::vector<double> entries = integrate_adaptive(f, 0.0, t, size, path.split_points(), rel_tol);
            acc = SpdMatrix(n, entries);
        }
    }
    for (const CoefficientPointMass& m : path.point_masses())
        if (m.time <= t) acc += m.weight;
    return acc;
}

/// A(t) - A(s) for s < t, verified symmetric positive definite.
inline SpdMatrix increment(const DiffusivityPath& path, TimePair pair) {
    pair.require_strict();
    if (pair.length() < 1e-14)
        throw DegenerateInterval("increment: interval length " + std::to_string(pair.length()) +
                                 " below 1e-14");
    SpdMatrix b = accumulate(path, pair.t) - accumulate(path, pair.s);
    cholesky(b); // throws NotPositiveDefinite on degenerate or invalid coefficients
    return b;
}

} // namespace aniheat
