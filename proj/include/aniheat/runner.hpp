#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "aniheat/estimates.hpp"
#include "aniheat/experiment.hpp"
#include "aniheat/manifest.hpp"
#include "aniheat/rng.hpp"
#include "aniheat/scenarios.hpp"
#include "aniheat/veryweak.hpp"

namespace aniheat {

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

inline std::string state_name(std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "state_%04zu.field", k);
    return buf;
}

inline std::string member_dir(std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "eps_%03zu", k);
    return buf;
}

inline std::string q_label(double q) {
    if (std::isinf(q)) return "linf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "l%g", q);
    return buf;
}

inline Trajectory solve_configured(const ExperimentConfig& cfg, const Grid& grid,
                                   const DiffusivityPath& path, const SourceFn& source) {
    if (cfg.initial.is_delta())
        return solve_trajectory(DeltaDatum{}, grid, source, cfg.times, path, cfg.quadrature_nodes);
    return solve_trajectory(cfg.initial.build_field(grid), source, cfg.times, path,
                            cfg.quadrature_nodes);
}

inline std::vector<std::string> write_trajectory(const Trajectory& traj,
                                                 const std::filesystem::path& root,
                                                 const std::string& subdir) {
    std::filesystem::create_directories(root / subdir);
    std::vector<std::string> rel_paths;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const std::string rel = subdir.empty() ? state_name(k) : subdir + "/" + state_name(k);
        write_field(traj.states[k], (root / rel).string());
        rel_paths.push_back(rel);
    }
    return rel_paths;
}

inline nlohmann::json classification_json(const NetClassification& c) {
    nlohmann::json j;
    j["overall"] = verdict_name(c.overall);
    j["tested_order"] = c.tested_order;
    j["seminorms"] = nlohmann::json::array();
    for (const auto& sc : c.seminorms) {
        nlohmann::json s;
        s["name"] = sc.name;
        s["slope"] = sc.slope;
        s["fit_residual"] = sc.fit_residual;
        s["verdict"] = verdict_name(sc.verdict);
        s["degenerate_fit"] = sc.degenerate_fit;
        if (sc.witness) s["witness_exponent"] = *sc.witness;
        j["seminorms"].push_back(s);
    }
    return j;
}

} // namespace detail

/// solve: classical Duhamel run. Writes the trajectory in the binary field
/// format, norm and energy CSV series, the norm-estimate bound check CSV,
/// and a checksummed manifest.
inline int run_solve(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, int /*threads*/,
                     bool verbose, std::ostream& log) {
    if (cfg.coefficient.is_eps_family())
        throw ConfigError("solve: the coefficient is an eps-family; use the net subcommand");
    std::filesystem::create_directories(out_dir);
    RunManifest manifest(cfg.config_hash(), cfg.seed);

    const Grid grid = cfg.grid.build();
    const DiffusivityPath path = cfg.coefficient.build_classical();
    const SourceFn source = cfg.source.build(grid);

    if (const auto tail = estimate_tail_ratio(cfg, path); tail && *tail > 1e-12)
        manifest.add_warning("estimated boundary tail " + detail::short_num(*tail) +
                             " exceeds 1e-12 of peak; enlarge the box");

    const Trajectory traj = detail::solve_configured(cfg, grid, path, source);
    if (verbose)
        log << "solved " << traj.size() << " states on a " << grid.dim() << "d grid, N = "
            << grid.points_per_axis() << "\n";

    for (const std::string& rel : detail::write_trajectory(traj, out_dir, "fields"))
        manifest.add_output(out_dir, rel);

    {
        std::ofstream csv(out_dir / "norms.csv");
        csv << "t";
        for (double q : cfg.norm_qs) csv << "," << detail::q_label(q);
        csv << "\n";
        for (std::size_t k = 0; k < traj.size(); ++k) {
            csv << detail::num(traj.times[k]);
            for (double q : cfg.norm_qs) csv << "," << detail::num(lq_norm(traj.states[k], q));
            csv << "\n";
        }
    }
    manifest.add_output(out_dir, "norms.csv");

    {
        std::ofstream csv(out_dir / "energy.csv");
        csv << "t";
        for (double p : cfg.energy_ps) csv << ",E_p" << p;
        csv << "\n";
        std::vector<EnergyTrace> traces;
        for (double p : cfg.energy_ps) traces.push_back(energy_trace(traj, p));
        for (std::size_t k = 0; k < traj.size(); ++k) {
            csv << detail::num(traj.times[k]);
            for (const EnergyTrace& e : traces) csv << "," << detail::num(e.values[k]);
            csv << "\n";
        }
    }
    manifest.add_output(out_dir, "energy.csv");

    {
        // The delta datum has no Lq norm; the estimate then anchors at the
        // first stored state.
        const GridField datum = cfg.initial.is_delta() ? traj.states.front()
                                                       : cfg.initial.build_field(grid);
        const double q = cfg.norm_qs.front();
        const auto points = check_norm_estimate(traj, datum, source, path, q, cfg.quadrature_nodes);
        std::ofstream csv(out_dir / "bounds.csv");
        write_bound_csv(csv, points);
    }
    manifest.add_output(out_dir, "bounds.csv");

    manifest.write(out_dir);
    for (const std::string& w : manifest.warnings()) log << "warning: " << w << "\n";
    return 0;
}

/// net: very weak run. Builds the coefficient net (mollification or explicit
/// eps-family), solves per member, classifies against the asymptotic scale,
/// optionally measures consistency against the classical solve, and writes
/// the net manifest with per-member artifacts.
inline int run_net(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, int threads,
                   bool verbose, std::ostream& log) {
    if (!cfg.coefficient.is_eps_family())
        throw ConfigError("net: the coefficient is not an eps-family; add a mollify block or an "
                          "eps-expression, or use the solve subcommand");
    if (cfg.initial.is_delta())
        throw ConfigError("net: delta initial data are only supported by the solve subcommand");
    std::filesystem::create_directories(out_dir);
    RunManifest manifest(cfg.config_hash(), cfg.seed);

    const Grid grid = cfg.grid.build();
    auto repair_log = std::make_shared<MollifierRepairLog>();
    CoefficientSpec coeff_spec = cfg.coefficient;
    coeff_spec.set_repair_log(repair_log);

    const auto coeff = make_net<DiffusivityPath>(cfg.epsilons,
                                                 [&](double eps) { return coeff_spec.build(eps); });
    const GridField u0 = cfg.initial.build_field(grid);
    const auto u0_net = make_net<GridField>(cfg.epsilons, [&](double) { return u0; });
    Net<SourceFn> f_net;
    if (cfg.source.kind != SourceSpec::Kind::Zero) {
        const SourceFn f = cfg.source.build(grid);
        f_net = make_net<SourceFn>(cfg.epsilons, [&](double) { return f; });
    }

    if (const auto tail = estimate_tail_ratio(cfg, cfg.coefficient.build_classical());
        tail && *tail > 1e-12)
        manifest.add_warning("estimated boundary tail " + detail::short_num(*tail) +
                             " exceeds 1e-12 of peak; enlarge the box");

    const ScaleReport scale_report = validate_scale(cfg.scale, cfg.epsilons);
    const Net<Trajectory> sol = solve_net(coeff, u0_net, f_net, cfg.times, cfg.quadrature_nodes,
                                          threads);
    if (verbose) log << "solved " << sol.size() << " members\n";

    nlohmann::json net_manifest;
    net_manifest["epsilons"] = cfg.epsilons;
    net_manifest["scale"] = {{"condition1", scale_report.condition1},
                             {"condition2", scale_report.condition2},
                             {"exponents", cfg.scale.exponents}};
    net_manifest["members"] = nlohmann::json::array();
    for (std::size_t k = 0; k < sol.size(); ++k) {
        nlohmann::json member;
        member["epsilon"] = cfg.epsilons[k];
        const auto rel_paths = detail::write_trajectory(sol.members[k], out_dir, detail::member_dir(k));
        member["fields"] = rel_paths;
        for (const std::string& rel : rel_paths) manifest.add_output(out_dir, rel);
        net_manifest["members"].push_back(member);
    }

    const SeminormTable table = seminorm_table(sol, cfg.seminorms);
    {
        std::ofstream csv(out_dir / "seminorms.csv");
        csv << "eps";
        for (const std::string& name : table.names) csv << "," << name;
        csv << "\n";
        for (std::size_t k = 0; k < table.epsilons.size(); ++k) {
            csv << detail::num(table.epsilons[k]);
            for (double v : table.rows[k]) csv << "," << detail::num(v);
            csv << "\n";
        }
    }
    manifest.add_output(out_dir, "seminorms.csv");
    net_manifest["seminorms_csv"] = "seminorms.csv";

    const NetClassification classification = classify_net(table, cfg.scale);
    net_manifest["classification"] = detail::classification_json(classification);
    log << "classification: " << verdict_name(classification.overall) << " (tested order "
        << classification.tested_order << ")\n";
    if (verbose)
        for (const auto& sc : classification.seminorms)
            log << "  " << sc.name << ": slope " << detail::short_num(sc.slope) << ", "
                << verdict_name(sc.verdict) << "\n";

    if (cfg.consistency_threshold) {
        const DiffusivityPath classical = cfg.coefficient.build_classical();
        const Trajectory reference = detail::solve_configured(cfg, grid, classical,
                                                              cfg.source.build(grid));
        const ConsistencyReport rep = consistency_check(sol, reference, *cfg.consistency_threshold);
        {
            std::ofstream csv(out_dir / "consistency.csv");
            csv << "eps,distance\n";
            for (std::size_t k = 0; k < rep.epsilons.size(); ++k)
                csv << detail::num(rep.epsilons[k]) << "," << detail::num(rep.distances[k]) << "\n";
        }
        manifest.add_output(out_dir, "consistency.csv");
        net_manifest["consistency"] = {{"slope", rep.slope},
                                       {"monotone", rep.monotone},
                                       {"final_distance", rep.final_distance},
                                       {"threshold", rep.threshold},
                                       {"pass", rep.pass}};
        log << "consistency: " << (rep.pass ? "pass" : "FAIL") << ", slope "
            << detail::short_num(rep.slope) << ", final distance "
            << detail::short_num(rep.final_distance) << "\n";
    }

    if (const std::size_t repairs = repair_log->count(); repairs > 0)
        manifest.add_warning(std::to_string(repairs) + " SPD repairs applied to the mollified "
                                                       "coefficient");

    {
        std::ofstream out(out_dir / "net_manifest.json");
        out << net_manifest.dump(2) << "\n";
    }
    manifest.add_output(out_dir, "net_manifest.json");
    manifest.write(out_dir);
    for (const std::string& w : manifest.warnings()) log << "warning: " << w << "\n";
    return 0;
}

struct CheckRow {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// verify: the invariant battery (kernel mass, norm identity, semigroup,
/// residual slope, delta limits, Young bounds, energy monotonicity, the norm
/// estimate, the decay bound, positivity, tail resolution, scale conditions,
/// classifier soundness, and manifest integrity when an output directory is
/// given). Exit 0 iff every check passes.
inline int run_verify(const ExperimentConfig& cfg, std::optional<std::filesystem::path> out_dir,
                      int /*threads*/, bool /*verbose*/, std::ostream& log) {
    std::vector<CheckRow> rows;
    const Grid grid = cfg.grid.build();
    const DiffusivityPath path = cfg.coefficient.build_classical();
    Rng rng(cfg.seed);
    const double t_final = cfg.times.back();
    const double t_mid = 0.5 * (cfg.times.front() + t_final) > 0.0
                             ? 0.5 * (cfg.times.front() + t_final)
                             : 0.5 * t_final;

    auto add = [&](const std::string& name, bool pass, const std::string& detail) {
        rows.push_back({name, pass, detail});
    };

    { // kernel mass
        const KernelParams kp(path, TimePair(0.0, t_mid));
        double sum = 0.0;
        std::vector<double> x(static_cast<std::size_t>(grid.dim()));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            grid.point(i, x);
            sum += eval_kernel(x, kp);
        }
        sum *= grid.cell_volume();
        add("kernel_mass", std::abs(sum - 1.0) <= 1e-8,
            "|sum - 1| = " + detail::short_num(std::abs(sum - 1.0)));
    }

    { // norm identity
        const KernelParams kp(path, TimePair(0.0, t_mid));
        double worst = 0.0;
        for (double p : {1.0, 1.5, 2.0, 3.0}) {
            double sum = 0.0;
            std::vector<double> x(static_cast<std::size_t>(grid.dim()));
            for (std::size_t i = 0; i < grid.size(); ++i) {
                grid.point(i, x);
                sum += std::pow(eval_kernel(x, kp), p);
            }
            const double measured = std::pow(grid.cell_volume() * sum, 1.0 / p);
            const double closed = kernel_lp_norm(p, kp);
            worst = std::max(worst, std::abs(measured - closed) / closed);
        }
        std::vector<double> origin(static_cast<std::size_t>(grid.dim()), 0.0);
        const double peak = eval_kernel(origin, kp);
        const double closed_inf = kernel_lp_norm(std::numeric_limits<double>::infinity(), kp);
        worst = std::max(worst, std::abs(peak - closed_inf) / closed_inf);
        add("norm_identity", worst <= 1e-6, "max rel err = " + detail::short_num(worst));
    }

    { // semigroup
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const GridField u = random_band_limited(rng, grid, std::min(grid.points_per_axis() / 8, 8));
            const double r = rng.uniform(0.0, 0.4 * t_final);
            const double s = r + rng.uniform(0.05, 0.3) * t_final;
            const double t = s + rng.uniform(0.05, 0.3) * t_final;
            const GridField composed =
                apply_propagator(apply_propagator(u, TimePair(r, s), path), TimePair(s, t), path);
            const GridField direct = apply_propagator(u, TimePair(r, t), path);
            double diff = 0.0, scale = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i) {
                diff = std::max(diff, std::abs(composed[i] - direct[i]));
                scale = std::max(scale, std::abs(u[i]));
            }
            worst = std::max(worst, diff / scale);
        }
        add("semigroup", worst <= 1e-12, "max rel sup err = " + detail::short_num(worst));
    }

    { // pde residual slope, probed inside the largest jump-free interval
        const GridField u0 = cfg.initial.kind == InitialSpec::Kind::Gaussian
                                 ? cfg.initial.build_field(grid)
                                 : gaussian_density_field(grid, std::pow(grid.box_length() / 30.0, 2));
        std::vector<double> knots = {0.0, t_final};
        for (double s : path.split_points())
            if (s > 0.0 && s < t_final) knots.push_back(s);
        std::sort(knots.begin(), knots.end());
        double lo = knots[0], hi = knots[1];
        for (std::size_t k = 1; k + 1 < knots.size(); ++k)
            if (knots[k + 1] - knots[k] > hi - lo) {
                lo = knots[k];
                hi = knots[k + 1];
            }
        const double t_probe = 0.5 * (lo + hi);
        std::vector<double> lx, ly;
        double dt = std::min(t_final / 20.0, 0.4 * (hi - lo));
        for (int h = 0; h <= 4; ++h, dt *= 0.5) {
            Trajectory traj;
            for (int k = -1; k <= 1; ++k)
                traj.push(t_probe + k * dt, apply_propagator(u0, TimePair(0.0, t_probe + k * dt), path));
            const GridField res = pde_residual(traj, 1, nullptr, path);
            lx.push_back(std::log(dt));
            ly.push_back(std::log(lq_norm(res, std::numeric_limits<double>::infinity())));
        }
        const double slope = fit_line(lx, ly).slope;
        add("pde_residual_slope", std::abs(slope - 2.0) <= 0.1, "slope = " + detail::short_num(slope));
    }

    { // delta limits
        const GridField phi = gaussian_density_field(grid, std::pow(grid.box_length() / 16.0, 2));
        std::vector<double> origin(static_cast<std::size_t>(grid.dim()), 0.0);
        double phi0 = 0.0;
        {
            std::vector<double> x(static_cast<std::size_t>(grid.dim()));
            for (std::size_t i = 0; i < grid.size(); ++i) {
                grid.point(i, x);
                bool at_origin = true;
                for (double xi : x) at_origin = at_origin && xi == 0.0;
                if (at_origin) phi0 = phi[i];
            }
        }
        // a gap is only probed while the grid resolves the kernel width
        const double lmin0 = min_eigenvalue(path.evaluate(0.0));
        const double h = grid.spacing();
        std::vector<double> gaps;
        for (double gap : {1e-1, 1e-2, 1e-3, 1e-4})
            if (std::sqrt(2.0 * lmin0 * gap) >= 2.0 * h) gaps.push_back(gap);
        if (gaps.size() < 3) {
            add("delta_limits", false,
                "grid too coarse to probe the delta limit (spacing " + detail::short_num(h) + ")");
        } else {
            std::vector<double> lx, ly;
            bool bounded = true;
            for (double gap : gaps) {
                const KernelParams kp(path, TimePair(0.0, gap));
                double pairing = 0.0;
                std::vector<double> x(static_cast<std::size_t>(grid.dim()));
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    grid.point(i, x);
                    pairing += eval_kernel(x, kp) * phi[i];
                }
                pairing *= grid.cell_volume();
                const double err = std::abs(pairing - phi0);
                if (err > 0.0) {
                    lx.push_back(std::log(gap));
                    ly.push_back(std::log(err));
                }
                bounded = bounded && err < 1.0;
            }
            const double slope = lx.size() >= 2 ? fit_line(lx, ly).slope : 0.0;
            add("delta_limits", bounded && slope >= 0.9, "slope = " + detail::short_num(slope));
        }
    }

    { // young bounds
        int violations = 0;
        double worst_excess = 0.0;
        for (int trial = 0; trial < cfg.young_count; ++trial) {
            const auto [q, r] = random_qr_lattice(rng);
            const auto tr = ExponentTriple::from_qr(q, r);
            const GridField v = random_band_limited(rng, grid, std::min(grid.points_per_axis() / 8, 8));
            const double s = rng.uniform(0.0, 0.5) * t_final;
            const double t = s + rng.uniform(0.05, 0.5) * t_final;
            const BoundCheck c = check_young(v, tr, TimePair(s, t), path);
            if (!c.satisfied) {
                ++violations;
                worst_excess = std::max(worst_excess, (c.lhs - c.bound) / c.bound);
            }
        }
        add("young_bounds", violations == 0,
            violations == 0 ? std::to_string(cfg.young_count) + " triples ok"
                            : std::to_string(violations) + " violations, worst excess " +
                                  detail::short_num(worst_excess));
    }

    const SourceFn source = cfg.source.build(grid);
    std::optional<Trajectory> solved;
    if (!cfg.initial.is_delta() || cfg.times.front() > 0.0)
        solved = detail::solve_configured(cfg, grid, path, source);

    { // energy monotonicity (homogeneous companion solve)
        const GridField u0 = cfg.initial.is_delta()
                                 ? sample_kernel(grid, path, std::max(cfg.times.front(), 1e-3))
                                 : cfg.initial.build_field(grid);
        const Trajectory homog = solve_trajectory(
            u0, nullptr,
            cfg.times.front() == 0.0 ? cfg.times
                                     : [&] {
                                           std::vector<double> ts = {0.0};
                                           ts.insert(ts.end(), cfg.times.begin(), cfg.times.end());
                                           return ts;
                                       }(),
            path, cfg.quadrature_nodes);
        bool ok = true;
        for (double p : {1.5, 2.0, 3.0, 4.0}) ok = ok && is_nonincreasing(energy_trace(homog, p).values);
        add("energy_monotonic", ok, "p in {1.5, 2, 3, 4}");
    }

    if (solved && !cfg.initial.is_delta()) { // norm estimate on the configured solve
        bool ok = true;
        double worst = 0.0;
        const GridField u0 = cfg.initial.build_field(grid);
        for (double q : cfg.norm_qs) {
            for (const auto& pt :
                 check_norm_estimate(*solved, u0, source, path, q, cfg.quadrature_nodes)) {
                ok = ok && pt.satisfied;
                if (pt.bound > 0.0) worst = std::max(worst, pt.lhs / pt.bound);
            }
        }
        add("norm_estimate", ok, "max lhs/bound = " + detail::short_num(worst));
    }

    { // decay bound, homogeneous gaussian solve
        const GridField u0 = cfg.initial.kind == InitialSpec::Kind::Gaussian
                                 ? cfg.initial.build_field(grid)
                                 : gaussian_density_field(grid, std::pow(grid.box_length() / 30.0, 2));
        const DecayData dd = DecayData::from_path(path, 1.01);
        const auto tr = ExponentTriple::from_qr(1.0, 2.0);
        const double u0_l1 = lq_norm(u0, 1.0);
        bool ok = true;
        double worst = 0.0;
        for (double t : cfg.times) {
            if (!(t > 0.0)) continue;
            const GridField u = apply_propagator(u0, TimePair(0.0, t), path);
            const double bound = decay_bound(t, tr, dd, u0_l1, 0.0).value;
            const double lhs = lq_norm(u, 2.0);
            ok = ok && lhs <= bound * (1.0 + 1e-8);
            worst = std::max(worst, lhs / bound);
        }
        add("decay_bound", ok, "max lhs/bound = " + detail::short_num(worst));
    }

    if (solved && cfg.source.nonnegative_on(cfg.times) &&
        cfg.initial.kind != InitialSpec::Kind::File) { // positivity
        bool ok = true;
        double worst = 0.0;
        for (const GridField& u : solved->states) {
            const double mn = positivity_min(u);
            const double mx = lq_norm(u, std::numeric_limits<double>::infinity());
            ok = ok && mn >= -1e-12 * mx;
            if (mx > 0.0) worst = std::min(worst, mn / mx);
        }
        add("positivity", ok, "min/max = " + detail::short_num(worst));
    }

    { // tail resolution
        const auto tail = estimate_tail_ratio(cfg, path);
        if (tail)
            add("tail_bound", *tail <= 1e-12, "boundary/peak = " + detail::short_num(*tail));
        else
            add("tail_bound", true, "no gaussian description; skipped");
    }

    { // scale conditions
        const ScaleReport rep = validate_scale(cfg.scale, cfg.epsilons);
        add("scale_conditions", rep.pass(),
            std::string("condition1 ") + (rep.condition1 ? "ok" : "FAIL") + ", condition2 " +
                (rep.condition2 ? "ok" : "FAIL"));
    }

    { // classifier soundness on synthetic nets
        bool ok = true;
        double worst = 0.0;
        for (double rho : {0.0, 1.0}) {
            const Net<double> net = make_net<double>(
                cfg.epsilons, [&](double eps) { return 2.0 * std::pow(eps, -rho); });
            const NetClassification c = classify_net(net, cfg.scale);
            ok = ok && c.overall == Verdict::Moderate;
            worst = std::max(worst, std::abs(c.seminorms[0].slope - rho));
        }
        add("classifier_soundness", ok && worst <= 0.05,
            "max slope err = " + detail::short_num(worst));
    }

    if (out_dir && std::filesystem::exists(*out_dir / "manifest.json")) { // manifest integrity
        const auto problems = verify_manifest(*out_dir);
        std::string detail = problems.empty() ? "all checksums match" : problems.front();
        if (problems.size() > 1) detail += " (+" + std::to_string(problems.size() - 1) + " more)";
        add("manifest_integrity", problems.empty(), detail);
    }

    std::size_t width = 0;
    for (const CheckRow& r : rows) width = std::max(width, r.name.size());
    bool all_pass = true;
    for (const CheckRow& r : rows) {
        all_pass = all_pass && r.pass;
        log << std::left << std::setw(static_cast<int>(width) + 2) << r.name
            << (r.pass ? "PASS  " : "FAIL  ") << r.detail << "\n";
    }
    log << (all_pass ? "all checks passed" : "some checks FAILED") << "\n";
    return all_pass ? 0 : 1;
}

} // namespace aniheat
