#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "aniheat/errors.hpp"

namespace aniheat {

/// Gauss–Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

inline GaussRule compute_gauss_rule(int k) {
    GaussRule r;
    r.nodes.resize(static_cast<std::size_t>(k));
    r.weights.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        // Chebyshev initial guess, refined by Newton on P_k.
        double x = std::cos(M_PI * (i + 0.75) / (k + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= k; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = k * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        r.nodes[static_cast<std::size_t>(k - 1 - i)] = x;
        r.weights[static_cast<std::size_t>(k - 1 - i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

} // namespace detail

inline const GaussRule& gauss_rule(int k) {
    if (k < 1 || k > 256) throw Error("gauss_rule: order out of range");
    static std::map<int, GaussRule> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(k);
    if (it == cache.end()) it = cache.emplace(k, detail::compute_gauss_rule(k)).first;
    return it->second;
}

using VectorFn = std::function<void(double, std::span<double>)>;

namespace detail {

inline void gauss_panel(const VectorFn& f, double a, double b, int order, std::span<double> out,
                        std::span<double> scratch) {
    const GaussRule& rule = gauss_rule(order);
    std::fill(out.begin(), out.end(), 0.0);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        f(mid + half * rule.nodes[i], scratch);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += rule.weights[i] * scratch[k];
    }
    for (double& v : out) v *= half;
}

inline void adaptive_recurse(const VectorFn& f, double a, double b, int order,
                             std::span<const double> whole, double tol_abs, int depth,
                             std::span<double> acc, std::vector<double>& work) {
    if (depth > 48)
        throw QuadratureFailure("adaptive quadrature: subdivision cap reached on [" +
                                std::to_string(a) + ", " + std::to_string(b) + "]");
    const std::size_t m = acc.size();
    std::vector<double> left(m), right(m), scratch(m);
    const double mid = 0.5 * (a + b);
    gauss_panel(f, a, mid, order, left, scratch);
    gauss_panel(f, mid, b, order, right, scratch);
    double err = 0.0;
    for (std::size_t k = 0; k < m; ++k) err = std::max(err, std::abs(left[k] + right[k] - whole[k]));
    if (err <= tol_abs) {
        for (std::size_t k = 0; k < m; ++k) acc[k] += left[k] + right[k];
        return;
    }
    adaptive_recurse(f, a, mid, order, left, 0.5 * tol_abs, depth + 1, acc, work);
    adaptive_recurse(f, mid, b, order, right, 0.5 * tol_abs, depth + 1, acc, work);
}

} // namespace detail

/// Adaptive composite Gauss–Legendre integration of a vector-valued function
/// over [a, b], splitting first at the given interior points (declared jump
/// times), then bisecting until the per-entry error estimate falls below
/// rel_tol times the integral scale.
inline std::vector<double> integrate_adaptive(const VectorFn& f, double a, double b, std::size_t size,
                                              std::span<const double> splits, double rel_tol = 1e-10,
                                              int order = 15) {
    std::vector<double> result(size, 0.0);
    if (!(b > a)) {
        if (b == a) return result;
        throw Error("integrate_adaptive: reversed interval");
    }
    std::vector<double> pts;
    pts.push_back(a);
    for (double s : splits)
        if (s > a && s < b) pts.push_back(s);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    // First pass estimates the overall scale that the relative tolerance refers to.
    std::vector<double> whole(size), scratch(size);
    std::vector<std::vector<double>> panel_estimates;
    double scale = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        detail::gauss_panel(f, pts[i], pts[i + 1], order, whole, scratch);
        panel_estimates.push_back(whole);
        for (double v : whole) scale = std::max(scale, std::abs(v));
    }
    const double tol_abs = rel_tol * std::max(scale, 1e-300);

    std::vector<double> work;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        detail::adaptive_recurse(f, pts[i], pts[i + 1], order, panel_estimates[i],
                                 tol_abs / static_cast<double>(panel_estimates.size()), 0, result, work);
    return result;
}

/// Scalar convenience wrapper.
inline double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                 std::span<const double> splits = {}, double rel_tol = 1e-10,
                                 int order = 15) {
    VectorFn vf = [&](double t, std::span<double> out) { out[0] = f(t); };
    return integrate_adaptive(vf, a, b, 1, splits, rel_tol, order)[0];
}

} // namespace aniheat
