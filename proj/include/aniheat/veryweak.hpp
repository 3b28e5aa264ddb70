#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "aniheat/diffusivity.hpp"
#include "aniheat/errors.hpp"
#include "aniheat/fit.hpp"
#include "aniheat/mollifier.hpp"
#include "aniheat/propagator.hpp"
#include "aniheat/spd.hpp"

namespace aniheat {

// --- asymptotic scales -----------------------------------------------------

/// Finite sample of an asymptotic scale: exponents from the directed set with
/// the usual order and the gauge functions sigma_l(eps), default eps^{-l}.
struct AsymptoticScale {
    std::vector<double> exponents; // strictly increasing
    std::function<double(double, double)> scale_fn; // (l, eps) -> sigma_l(eps)

    static AsymptoticScale power(std::vector<double> exps) {
        AsymptoticScale s;
        s.exponents = std::move(exps);
        for (std::size_t k = 0; k + 1 < s.exponents.size(); ++k)
            if (!(s.exponents[k] < s.exponents[k + 1]))
                throw Error("AsymptoticScale: exponents must be strictly increasing");
        s.scale_fn = [](double l, double eps) { return std::pow(eps, -l); };
        return s;
    }

    static AsymptoticScale default_power() {
        return power({-6.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 6.0});
    }

    double value(double l, double eps) const { return scale_fn(l, eps); }

    /// Order up to which negligibility can be certified: decay faster than
    /// sigma_{l_min}(eps) (for the power scale, faster than eps^{-l_min}).
    double tested_order() const { return -exponents.front(); }
};

/// Default sample grid: 12 points, log-spaced from 1e-1 down to 1e-4.
inline std::vector<double> default_epsilon_grid(int count = 12, double from = 1e-1, double to = 1e-4) {
    if (count < 2 || !(from > to) || !(from < 1.0) || !(to > 0.0))
        throw Error("default_epsilon_grid: need 1 > from > to > 0 and count >= 2");
    std::vector<double> eps(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        eps[static_cast<std::size_t>(i)] =
            std::pow(10.0, std::log10(from) + (std::log10(to) - std::log10(from)) * i / (count - 1));
    return eps;
}

namespace detail {

/// Monotone-decrease acceptance shared by the scale and net checks: the
/// sampled sequence must fall within 5% per-step slack and lose at least half
/// of its initial value over the grid.
inline bool decreases_to_zero(std::span<const double> values, double step_slack = 0.05,
                              double total_factor = 0.5) {
    if (values.size() < 2) return false;
    for (std::size_t k = 0; k + 1 < values.size(); ++k)
        if (values[k + 1] > values[k] * (1.0 + step_slack) + 1e-300) return false;
    return values.back() <= total_factor * values.front() + 1e-300;
}

} // namespace detail

struct ScalePairCheck {
    double l = 0.0;
    double j = 0.0;
    std::optional<double> witness; // sampled exponent witnessing condition (2)
    bool out_of_window = false;    // witness would sit below the sampled range
    bool pass = false;
};

struct ScaleReport {
    bool condition1 = false;
    bool condition2 = false;
    std::vector<ScalePairCheck> condition1_failures;
    std::vector<ScalePairCheck> pairs; // condition (2) detail per pair
    bool pass() const { return condition1 && condition2; }
};

/// Checks the two scale conditions on the sampled exponents and epsilon grid:
/// (1) l < j implies sigma_l / sigma_j decreases to 0, and (2) every product
/// sigma_l sigma_j dominates some sampled sigma_h. A pair whose product
/// already decays faster than the deepest sampled gauge cannot be witnessed
/// inside the finite sample and is recorded as out-of-window rather than
/// failed; condition (2) passes when at least one pair is witnessed and no
/// in-window pair fails.
inline ScaleReport validate_scale(const AsymptoticScale& scale, std::span<const double> eps_grid) {
    if (eps_grid.size() < 8) throw Error("validate_scale: need at least 8 epsilon samples");
    for (std::size_t k = 0; k < eps_grid.size(); ++k) {
        if (!(eps_grid[k] > 0.0 && eps_grid[k] < 1.0))
            throw Error("validate_scale: epsilons must lie in (0, 1)");
        if (k > 0 && !(eps_grid[k] < eps_grid[k - 1]))
            throw Error("validate_scale: epsilon grid must be decreasing");
    }
    ScaleReport report;
    const auto& exps = scale.exponents;
    std::vector<double> ratio(eps_grid.size());

    report.condition1 = true;
    for (std::size_t a = 0; a < exps.size(); ++a) {
        for (std::size_t b = a + 1; b < exps.size(); ++b) {
            for (std::size_t i = 0; i < eps_grid.size(); ++i)
                ratio[i] = scale.value(exps[a], eps_grid[i]) / scale.value(exps[b], eps_grid[i]);
            if (!detail::decreases_to_zero(ratio)) {
                report.condition1 = false;
                report.condition1_failures.push_back({exps[a], exps[b], std::nullopt, false, false});
            }
        }
    }

    bool any_witnessed = false;
    bool any_in_window_failed = false;
    for (std::size_t a = 0; a < exps.size(); ++a) {
        for (std::size_t b = a; b < exps.size(); ++b) {
            ScalePairCheck pc;
            pc.l = exps[a];
            pc.j = exps[b];
            for (double h : exps) {
                for (std::size_t i = 0; i < eps_grid.size(); ++i)
                    ratio[i] = scale.value(h, eps_grid[i]) /
                               (scale.value(exps[a], eps_grid[i]) * scale.value(exps[b], eps_grid[i]));
                if (detail::decreases_to_zero(ratio)) {
                    pc.witness = h;
                    pc.pass = true;
                    break;
                }
            }
            if (!pc.pass) {
                // Probe the deepest sampled gauge: if even it cannot keep up with
                // the product's decay, the witness lies outside the sampled window.
                const double deepest = exps.front();
                bool nondecreasing = true;
                for (std::size_t i = 0; i + 1 < eps_grid.size(); ++i) {
                    const double r0 = scale.value(deepest, eps_grid[i]) /
                                      (scale.value(exps[a], eps_grid[i]) * scale.value(exps[b], eps_grid[i]));
                    const double r1 = scale.value(deepest, eps_grid[i + 1]) /
                                      (scale.value(exps[a], eps_grid[i + 1]) * scale.value(exps[b], eps_grid[i + 1]));
                    if (r1 < r0 * (1.0 - 1e-12)) {
                        nondecreasing = false;
                        break;
                    }
                }
                pc.out_of_window = nondecreasing;
                if (!pc.out_of_window) any_in_window_failed = true;
            } else {
                any_witnessed = true;
            }
            report.pairs.push_back(pc);
        }
    }
    report.condition2 = any_witnessed && !any_in_window_failed;
    return report;
}

// --- nets ------------------------------------------------------------------

/// Epsilon-indexed family of values on a shared decreasing epsilon grid.
template <class T>
struct Net {
    std::vector<double> epsilons;
    std::vector<T> members;

    void validate() const {
        if (epsilons.size() != members.size()) throw Error("Net: size mismatch");
        for (std::size_t k = 0; k < epsilons.size(); ++k) {
            if (!(epsilons[k] > 0.0 && epsilons[k] < 1.0)) throw Error("Net: epsilons must lie in (0, 1)");
            if (k > 0 && !(epsilons[k] < epsilons[k - 1]))
                throw Error("Net: epsilon grid must be decreasing");
        }
    }

    std::size_t size() const { return epsilons.size(); }
};

template <class T, class Fn>
Net<T> make_net(std::span<const double> epsilons, Fn&& generator) {
    Net<T> net;
    net.epsilons.assign(epsilons.begin(), epsilons.end());
    net.members.reserve(epsilons.size());
    for (double eps : epsilons) net.members.push_back(generator(eps));
    net.validate();
    return net;
}

/// Seminorm channel monitored during classification: a grid Lq norm or a
/// weighted sup seminorm; trajectories take the max over their samples.
struct SeminormSpec {
    enum class Kind { Lq, Weighted };
    Kind kind = Kind::Lq;
    double q = 2.0;
    SeminormIndex index;
    std::string name;

    static SeminormSpec lq(double q_) {
        SeminormSpec s;
        s.kind = Kind::Lq;
        s.q = q_;
        s.name = std::isinf(q_) ? "linf" : "l" + format_exponent(q_);
        return s;
    }

    static SeminormSpec weighted(std::vector<int> alpha, std::vector<int> beta) {
        SeminormSpec s;
        s.kind = Kind::Weighted;
        s.index = SeminormIndex{std::move(alpha), std::move(beta)};
        s.name = "sup_x";
        for (int a : s.index.alpha) s.name += std::to_string(a);
        s.name += "_d";
        for (int b : s.index.beta) s.name += std::to_string(b);
        return s;
    }

    double evaluate(const GridField& u) const {
        return kind == Kind::Lq ? lq_norm(u, q) : seminorm(u, index);
    }

    double evaluate(const Trajectory& traj) const {
        double best = 0.0;
        for (const GridField& u : traj.states) best = std::max(best, evaluate(u));
        return best;
    }

private:
    static std::string format_exponent(double q_) {
        if (q_ == static_cast<long long>(q_)) return std::to_string(static_cast<long long>(q_));
        std::string s = std::to_string(q_);
        while (!s.empty() && s.back() == '0') s.pop_back();
        if (!s.empty() && s.back() == '.') s.pop_back();
        return s;
    }
};

/// L-inf, L1, L2 plus every weighted sup seminorm with |alpha| + |beta| <= 2.
inline std::vector<SeminormSpec> default_seminorms(int dim) {
    std::vector<SeminormSpec> specs;
    specs.push_back(SeminormSpec::lq(std::numeric_limits<double>::infinity()));
    specs.push_back(SeminormSpec::lq(1.0));
    specs.push_back(SeminormSpec::lq(2.0));
    std::vector<int> alpha(static_cast<std::size_t>(dim), 0), beta(static_cast<std::size_t>(dim), 0);
    std::function<void(int, int, int)> enumerate = [&](int slot, int remaining, int used) {
        const int slots = 2 * dim;
        if (slot == slots) {
            if (used > 0) specs.push_back(SeminormSpec::weighted(alpha, beta));
            return;
        }
        for (int v = 0; v <= remaining; ++v) {
            if (slot < dim)
                alpha[static_cast<std::size_t>(slot)] = v;
            else
                beta[static_cast<std::size_t>(slot - dim)] = v;
            enumerate(slot + 1, remaining - v, used + v);
        }
    };
    enumerate(0, 2, 0);
    return specs;
}

/// Per-epsilon table of seminorm samples N_sigma(eps).
struct SeminormTable {
    std::vector<double> epsilons;
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows; // rows[eps_index][name_index]
};

template <class T>
SeminormTable seminorm_table(const Net<T>& net, std::span<const SeminormSpec> specs) {
    net.validate();
    SeminormTable table;
    table.epsilons = net.epsilons;
    for (const SeminormSpec& s : specs) table.names.push_back(s.name);
    for (const T& member : net.members) {
        std::vector<double> row;
        row.reserve(specs.size());
        for (const SeminormSpec& s : specs) row.push_back(s.evaluate(member));
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline SeminormTable seminorm_table(const Net<double>& net) {
    net.validate();
    SeminormTable table;
    table.epsilons = net.epsilons;
    table.names = {"abs"};
    for (double v : net.members) table.rows.push_back({std::abs(v)});
    return table;
}

// --- classification ----------------------------------------------------------

enum class Verdict { Negligible, Moderate, Neither };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Negligible: return "negligible";
        case Verdict::Moderate: return "moderate";
        default: return "neither";
    }
}

struct SeminormClassification {
    std::string name;
    double slope = 0.0;        // fitted growth order rho in N(eps) ~ c eps^{-rho}
    double fit_residual = 0.0; // max log-space deviation
    bool degenerate_fit = false;
    std::optional<double> witness; // moderateness witness exponent
    Verdict verdict = Verdict::Neither;
};

struct NetClassification {
    std::vector<SeminormClassification> seminorms;
    Verdict overall = Verdict::Neither;
    double tested_order = 0.0;
};

/// Classifies a net against an asymptotic scale. The two largest epsilons are
/// excluded from the analysis as pre-asymptotic. A channel is moderate when
/// some sampled exponent's gauge drives its samples to zero, negligible when
/// every sampled gauge does (reported as negligible up to the tested order),
/// and neither otherwise; the growth order is the least-squares slope of
/// log N against log(1/eps).
inline NetClassification classify_net(const SeminormTable& table, const AsymptoticScale& scale) {
    if (table.epsilons.size() < 8) throw Error("classify_net: need at least 8 epsilon samples");
    const double decades = std::log10(table.epsilons.front() / table.epsilons.back());
    if (decades < 3.0 - 1e-9) throw Error("classify_net: epsilon grid must span at least 3 decades");
    if (scale.exponents.empty()) throw Error("classify_net: empty scale");

    const std::size_t skip = 2; // pre-asymptotic trim
    const std::size_t m = table.epsilons.size() - skip;
    std::vector<double> eps(m);
    for (std::size_t i = 0; i < m; ++i) eps[i] = table.epsilons[i + skip];

    NetClassification out;
    out.tested_order = scale.tested_order();
    for (std::size_t col = 0; col < table.names.size(); ++col) {
        SeminormClassification sc;
        sc.name = table.names[col];
        std::vector<double> values(m);
        for (std::size_t i = 0; i < m; ++i) values[i] = table.rows[i + skip][col];

        std::vector<double> lx, ly;
        for (std::size_t i = 0; i < m; ++i) {
            if (values[i] > 0.0) {
                lx.push_back(-std::log(eps[i])); // log(1/eps)
                ly.push_back(std::log(values[i]));
            }
        }
        if (lx.size() < 3) {
            // all (or nearly all) samples vanish: the net is zero to working precision
            sc.degenerate_fit = true;
            sc.verdict = Verdict::Negligible;
            out.seminorms.push_back(sc);
            continue;
        }
        const LineFit fit = fit_line(lx, ly);
        sc.slope = fit.slope;
        sc.fit_residual = fit.max_residual;

        std::vector<double> probe(m);
        bool negligible = true;
        for (double l : scale.exponents) {
            for (std::size_t i = 0; i < m; ++i)
                probe[i] = values[i] / scale.value(l, eps[i]);
            if (!detail::decreases_to_zero(probe)) {
                negligible = false;
                break;
            }
        }
        if (negligible) {
            sc.verdict = Verdict::Negligible;
            out.seminorms.push_back(sc);
            continue;
        }
        for (double l : scale.exponents) {
            for (std::size_t i = 0; i < m; ++i)
                probe[i] = scale.value(l, eps[i]) * values[i];
            if (detail::decreases_to_zero(probe)) {
                sc.witness = l;
                sc.verdict = Verdict::Moderate;
                break;
            }
        }
        out.seminorms.push_back(sc);
    }

    bool all_negligible = true, all_moderate = true;
    for (const auto& sc : out.seminorms) {
        all_negligible = all_negligible && sc.verdict == Verdict::Negligible;
        all_moderate = all_moderate && sc.verdict != Verdict::Neither;
    }
    out.overall = all_negligible ? Verdict::Negligible
                                 : (all_moderate ? Verdict::Moderate : Verdict::Neither);
    return out;
}

template <class T>
NetClassification classify_net(const Net<T>& net, const AsymptoticScale& scale,
                               std::span<const SeminormSpec> specs) {
    return classify_net(seminorm_table(net, specs), scale);
}

inline NetClassification classify_net(const Net<double>& net, const AsymptoticScale& scale) {
    return classify_net(seminorm_table(net), scale);
}

// --- coefficient mollification ----------------------------------------------

/// a_eps(t) = (a * psi_eps)(t) + sum_k c_k psi_eps(t - t_k). Piecewise-constant
/// paths convolve in closed form through the profile cumulative; smooth paths
/// by quadrature in the profile variable. The path is extended by its t = 0
/// value to negative times. Sampled values falling below the 1e-10 eigenvalue
/// margin are shifted back onto the SPD cone and logged.
inline DiffusivityPath mollify_coefficient(const DiffusivityPath& path, const MollifierSpec& m,
                                           double eps,
                                           std::shared_ptr<MollifierRepairLog> repair_log = nullptr) {
    if (!(eps > 0.0 && eps < 1.0)) throw Error("mollify_coefficient: eps must lie in (0, 1)");
    const int dim = path.dim();
    const auto source = std::make_shared<DiffusivityPath>(path);
    const double radius = m.support_radius();

    std::function<SpdMatrix(double)> smooth_part;
    if (path.kind() == DiffusivityPath::Kind::Constant ||
        path.kind() == DiffusivityPath::Kind::PiecewiseConstant) {
        smooth_part = [source, m, eps, dim](double t) {
            const auto& jumps = source->jump_times();
            const auto& segments = source->segments();
            SpdMatrix acc(dim);
            for (std::size_t k = 0; k < segments.size(); ++k) {
                const double lo = k == 0 ? 1.0 : m.cumulative_scaled(t - jumps[k - 1], eps);
                const double hi = k == jumps.size() ? 0.0 : m.cumulative_scaled(t - jumps[k], eps);
                acc += segments[k] * (lo - hi);
            }
            return acc;
        };
    } else {
        smooth_part = [source, m, eps, dim, radius](double t) {
            const std::size_t size = static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim);
            VectorFn f = [&](double tau, std::span<double> out) {
                const double arg = std::max(t - eps * tau, 0.0);
                const SpdMatrix a = source->evaluate(arg);
                const double w = m.density(tau);
                for (std::size_t i = 0; i < size; ++i) out[i] = w * a.entries()[i];
            };
            std::vector<double> splits;
            for (double jt : source->jump_times()) {
                const double tau = (t - jt) / eps;
                if (tau > -radius && tau < radius) splits.push_back(tau);
            }
            // the clamped extension bends the integrand where t - eps tau = 0
            const double clamp_tau = t / eps;
            if (clamp_tau < radius) splits.push_back(clamp_tau);
            std::vector<double> entries = integrate_adaptive(f, -radius, radius, size, splits, 1e-12);
            return SpdMatrix(dim, entries);
        };
    }

    auto masses = path.point_masses();
    auto log = repair_log;
    auto mollifier = m;
    auto evaluator = [smooth_part, masses, mollifier, eps, dim, log](double t) {
        SpdMatrix a = smooth_part(t);
        for (const CoefficientPointMass& pm : masses)
            a += pm.weight * mollifier.density_scaled(t - pm.time, eps);
        const double margin = 1e-10;
        const double lmin = min_eigenvalue(a);
        if (lmin < margin) {
            const double shift = margin - lmin;
            a += SpdMatrix::identity(dim) * shift;
            if (log) log->record(t, shift);
        }
        return a;
    };
    return DiffusivityPath::mollified(dim, evaluator, path.split_points());
}

// --- net solving and consistency ---------------------------------------------

/// Solves the Cauchy problem member by member: for each eps a full trajectory
/// with a_eps, u0_eps, f_eps. Members are independent; `threads` > 1 runs them
/// concurrently with the aggregation order fixed by the eps grid.
inline Net<Trajectory> solve_net(const Net<DiffusivityPath>& coeff, const Net<GridField>& u0,
                                 const Net<SourceFn>& source, std::span<const double> times,
                                 int nodes = 8, int threads = 1) {
    coeff.validate();
    u0.validate();
    if (!source.epsilons.empty()) source.validate();
    if (coeff.epsilons != u0.epsilons ||
        (!source.epsilons.empty() && source.epsilons != coeff.epsilons))
        throw Error("solve_net: all nets must share one epsilon grid");

    Net<Trajectory> out;
    out.epsilons = coeff.epsilons;
    out.members.resize(coeff.size());
    std::vector<std::string> failures(coeff.size());
    auto run = [&](std::size_t i) {
        try {
            const SourceFn f = source.epsilons.empty() ? SourceFn{} : source.members[i];
            out.members[i] = solve_trajectory(u0.members[i], f, times, coeff.members[i], nodes);
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    };
    if (threads <= 1) {
        for (std::size_t i = 0; i < coeff.size(); ++i) run(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&]() {
                for (std::size_t i = next.fetch_add(1); i < coeff.size(); i = next.fetch_add(1)) run(i);
            });
        for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < coeff.size(); ++i)
        if (!failures[i].empty())
            throw Error("solve_net: member at eps = " + std::to_string(coeff.epsilons[i]) +
                        " failed: " + failures[i]);
    return out;
}

inline Net<Trajectory> solve_net(const Net<DiffusivityPath>& coeff, const Net<GridField>& u0,
                                 std::span<const double> times, int nodes = 8, int threads = 1) {
    return solve_net(coeff, u0, Net<SourceFn>{}, times, nodes, threads);
}

struct ConsistencyReport {
    std::vector<double> epsilons;
    std::vector<double> distances; // sup over times of the sup-norm distance
    double slope = 0.0;            // decay order: distance ~ c eps^slope
    bool monotone = false;
    double final_distance = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

/// Measures per-eps sup distances between the solution net and a classical
/// reference trajectory, fits the convergence order in eps, and passes when
/// the distances decrease monotonically (5% slack) to below the threshold.
inline ConsistencyReport consistency_check(const Net<Trajectory>& sol, const Trajectory& reference,
                                           double threshold) {
    sol.validate();
    ConsistencyReport rep;
    rep.epsilons = sol.epsilons;
    rep.threshold = threshold;
    for (const Trajectory& traj : sol.members) {
        if (traj.size() != reference.size()) throw GridMismatch("consistency_check: time grids differ");
        double dist = 0.0;
        for (std::size_t k = 0; k < traj.size(); ++k) {
            if (traj.times[k] != reference.times[k])
                throw GridMismatch("consistency_check: time grids differ");
            reference.states[k].require_same_grid(traj.states[k]);
            for (std::size_t i = 0; i < traj.states[k].size(); ++i)
                dist = std::max(dist, std::abs(traj.states[k][i] - reference.states[k][i]));
        }
        rep.distances.push_back(dist);
    }
    rep.final_distance = rep.distances.back();
    rep.monotone = true;
    for (std::size_t k = 0; k + 1 < rep.distances.size(); ++k)
        if (rep.distances[k + 1] > rep.distances[k] * 1.05 + 1e-300) rep.monotone = false;
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < rep.distances.size(); ++k) {
        if (rep.distances[k] > 0.0) {
            lx.push_back(std::log(rep.epsilons[k]));
            ly.push_back(std::log(rep.distances[k]));
        }
    }
    rep.slope = lx.size() >= 2 ? fit_line(lx, ly).slope : 0.0;
    rep.pass = rep.monotone && rep.final_distance <= threshold;
    return rep;
}

/// Zero data must produce the identically null solution net: solves and
/// classifies, expecting a negligible verdict.
inline NetClassification uniqueness_probe(const Net<GridField>& u0, const Net<SourceFn>& source,
                                          const Net<DiffusivityPath>& coeff,
                                          std::span<const double> times, const AsymptoticScale& scale,
                                          int nodes = 8) {
    u0.validate();
    for (const GridField& f : u0.members)
        for (std::size_t i = 0; i < f.size(); ++i)
            if (f[i] != 0.0) throw Error("uniqueness_probe: initial-datum net is not identically zero");
    if (!source.epsilons.empty()) {
        for (std::size_t k = 0; k < source.members.size(); ++k) {
            if (!source.members[k]) continue;
            for (double t : times) {
                if (t <= 0.0) continue;
                const GridField f = source.members[k](t);
                for (std::size_t i = 0; i < f.size(); ++i)
                    if (f[i] != 0.0) throw Error("uniqueness_probe: source net is not identically zero");
            }
        }
    }
    const Net<Trajectory> sol = solve_net(coeff, u0, source, times, nodes);
    const auto specs = std::vector<SeminormSpec>{
        SeminormSpec::lq(std::numeric_limits<double>::infinity()), SeminormSpec::lq(1.0),
        SeminormSpec::lq(2.0)};
    return classify_net(sol, scale, specs);
}

} // namespace aniheat
