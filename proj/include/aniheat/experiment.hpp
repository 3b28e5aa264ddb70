#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aniheat/diffusivity.hpp"
#include "aniheat/errors.hpp"
#include "aniheat/grid.hpp"
#include "aniheat/manifest.hpp"
#include "aniheat/mollifier.hpp"
#include "aniheat/propagator.hpp"
#include "aniheat/scenarios.hpp"
#include "aniheat/spd.hpp"
#include "aniheat/veryweak.hpp"

namespace aniheat {

// --- scalar expression grammar ------------------------------------------------
//
// Arithmetic over {t, eps} with + - * / ^, parentheses, and the functions
// exp, sin, mollified_step(t0), mollified_delta(t0). Evaluation with eps = 0
// is the classical limit: mollified_step becomes the sharp step and
// mollified_delta is rejected.

class Expression {
public:
    static Expression parse(const std::string& text) {
        Parser p(text);
        Expression e;
        e.root_ = p.parse_expr(e.nodes_);
        p.expect_end();
        e.text_ = text;
        return e;
    }

    double operator()(double t, double eps) const { return eval(root_, t, eps); }

    bool uses_eps() const {
        for (const Node& n : nodes_)
            if (n.op == Op::VarEps) return true;
        return false;
    }

    bool has_mollified_delta() const {
        for (const Node& n : nodes_)
            if (n.op == Op::MollDelta) return true;
        return false;
    }

    /// Centers of mollified steps and deltas: quadrature split hints, and the
    /// genuine jump locations of the classical limit.
    std::vector<double> feature_times() const {
        std::vector<double> ts;
        for (const Node& n : nodes_)
            if (n.op == Op::MollStep || n.op == Op::MollDelta) ts.push_back(n.value);
        std::sort(ts.begin(), ts.end());
        ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
        return ts;
    }

    const std::string& text() const { return text_; }

private:
    enum class Op {
        Number, VarT, VarEps, Add, Sub, Mul, Div, Pow, Neg, Exp, Sin, MollStep, MollDelta
    };
    struct Node {
        Op op;
        double value = 0.0;
        int lhs = -1;
        int rhs = -1;
    };

    std::vector<Node> nodes_;
    int root_ = -1;
    std::string text_;

    double eval(int idx, double t, double eps) const {
        const Node& n = nodes_[static_cast<std::size_t>(idx)];
        switch (n.op) {
            case Op::Number: return n.value;
            case Op::VarT: return t;
            case Op::VarEps: return eps;
            case Op::Add: return eval(n.lhs, t, eps) + eval(n.rhs, t, eps);
            case Op::Sub: return eval(n.lhs, t, eps) - eval(n.rhs, t, eps);
            case Op::Mul: return eval(n.lhs, t, eps) * eval(n.rhs, t, eps);
            case Op::Div: return eval(n.lhs, t, eps) / eval(n.rhs, t, eps);
            case Op::Pow: return std::pow(eval(n.lhs, t, eps), eval(n.rhs, t, eps));
            case Op::Neg: return -eval(n.lhs, t, eps);
            case Op::Exp: return std::exp(eval(n.lhs, t, eps));
            case Op::Sin: return std::sin(eval(n.lhs, t, eps));
            case Op::MollStep:
                if (eps > 0.0) return 0.5 * std::erfc(-(t - n.value) / (eps * std::sqrt(2.0)));
                return t >= n.value ? 1.0 : 0.0;
            case Op::MollDelta:
                if (eps > 0.0) {
                    const double u = (t - n.value) / eps;
                    return std::exp(-0.5 * u * u) / (eps * std::sqrt(2.0 * M_PI));
                }
                throw Error("expression: mollified_delta has no classical (eps = 0) limit");
        }
        throw Error("expression: corrupt node");
    }

    class Parser {
    public:
        explicit Parser(const std::string& text) : s_(text) {}

        int parse_expr(std::vector<Node>& nodes) {
            int lhs = parse_term(nodes);
            while (true) {
                skip_ws();
                if (peek() == '+' || peek() == '-') {
                    const char op = get();
                    const int rhs = parse_term(nodes);
                    lhs = push(nodes, {op == '+' ? Op::Add : Op::Sub, 0.0, lhs, rhs});
                } else {
                    return lhs;
                }
            }
        }

        void expect_end() {
            skip_ws();
            if (pos_ != s_.size())
                throw ConfigError("expression: unexpected trailing input at '" + s_.substr(pos_) + "'");
        }

    private:
        int parse_term(std::vector<Node>& nodes) {
            int lhs = parse_factor(nodes);
            while (true) {
                skip_ws();
                if (peek() == '*' || peek() == '/') {
                    const char op = get();
                    const int rhs = parse_factor(nodes);
                    lhs = push(nodes, {op == '*' ? Op::Mul : Op::Div, 0.0, lhs, rhs});
                } else {
                    return lhs;
                }
            }
        }

        int parse_factor(std::vector<Node>& nodes) {
            skip_ws();
            if (peek() == '-') { // unary minus binds looser than ^
                get();
                return push(nodes, {Op::Neg, 0.0, parse_factor(nodes), -1});
            }
            const int base = parse_base(nodes);
            skip_ws();
            if (peek() == '^') {
                get();
                const int exp = parse_factor(nodes); // right associative
                return push(nodes, {Op::Pow, 0.0, base, exp});
            }
            return base;
        }

        int parse_base(std::vector<Node>& nodes) {
            skip_ws();
            const char c = peek();
            if (c == '(') {
                get();
                const int inner = parse_expr(nodes);
                expect(')');
                return inner;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                return push(nodes, {Op::Number, parse_number(), -1, -1});
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                const std::string ident = parse_ident();
                if (ident == "t") return push(nodes, {Op::VarT, 0.0, -1, -1});
                if (ident == "eps") return push(nodes, {Op::VarEps, 0.0, -1, -1});
                if (ident == "exp" || ident == "sin") {
                    expect('(');
                    const int arg = parse_expr(nodes);
                    expect(')');
                    return push(nodes, {ident == "exp" ? Op::Exp : Op::Sin, 0.0, arg, -1});
                }
                if (ident == "mollified_step" || ident == "mollified_delta") {
                    expect('(');
                    skip_ws();
                    const bool negative = peek() == '-';
                    if (negative) get();
                    double t0 = parse_number();
                    if (negative) t0 = -t0;
                    expect(')');
                    return push(nodes,
                                {ident == "mollified_step" ? Op::MollStep : Op::MollDelta, t0, -1, -1});
                }
                throw ConfigError("expression: unknown identifier '" + ident + "'");
            }
            throw ConfigError("expression: unexpected character '" + std::string(1, c) + "'");
        }

        double parse_number() {
            skip_ws();
            const char* start = s_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(start, &end);
            if (end == start) throw ConfigError("expression: expected a number");
            pos_ += static_cast<std::size_t>(end - start);
            return v;
        }

        std::string parse_ident() {
            std::string out;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
                out.push_back(s_[pos_++]);
            return out;
        }

        static int push(std::vector<Node>& nodes, Node n) {
            nodes.push_back(n);
            return static_cast<int>(nodes.size()) - 1;
        }

        void skip_ws() {
            while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        }
        char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
        char get() { return s_[pos_++]; }
        void expect(char c) {
            skip_ws();
            if (peek() != c) throw ConfigError(std::string("expression: expected '") + c + "'");
            get();
        }

        const std::string& s_;
        std::size_t pos_ = 0;
    };
};

// --- config parsing -------------------------------------------------------------

namespace detail {

inline void check_keys(const nlohmann::json& obj, const std::string& context,
                       std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(context + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw ConfigError(context + ": unknown key '" + it.key() + "'");
    }
}

inline double parse_exponent(const nlohmann::json& v, const std::string& context) {
    if (v.is_string()) {
        if (v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        throw ConfigError(context + ": expected a number or \"inf\"");
    }
    if (!v.is_number()) throw ConfigError(context + ": expected a number or \"inf\"");
    return v.get<double>();
}

inline SpdMatrix parse_matrix(const nlohmann::json& v, int dim, const std::string& context) {
    if (!v.is_array() || static_cast<int>(v.size()) != dim)
        throw ConfigError(context + ": expected a " + std::to_string(dim) + "x" +
                          std::to_string(dim) + " matrix");
    std::vector<double> entries;
    for (const auto& row : v) {
        if (!row.is_array() || static_cast<int>(row.size()) != dim)
            throw ConfigError(context + ": ragged matrix row");
        for (const auto& e : row) {
            if (!e.is_number()) throw ConfigError(context + ": non-numeric matrix entry");
            entries.push_back(e.get<double>());
        }
    }
    double scale = 0.0;
    for (double e : entries) scale = std::max(scale, std::abs(e));
    for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j)
            if (std::abs(entries[static_cast<std::size_t>(i) * dim + j] -
                         entries[static_cast<std::size_t>(j) * dim + i]) > 1e-9 * std::max(scale, 1.0))
                throw ConfigError(context + ": matrix is not symmetric");
    return SpdMatrix(dim, entries);
}

inline std::vector<double> parse_number_list(const nlohmann::json& v, const std::string& context) {
    if (!v.is_array()) throw ConfigError(context + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(context + ": non-numeric entry");
        out.push_back(e.get<double>());
    }
    return out;
}

} // namespace detail

struct GridSpec {
    int dim = 1;
    int points = 256;
    double box_length = 20.0;

    Grid build() const { return Grid(dim, points, box_length); }

    static GridSpec parse(const nlohmann::json& j) {
        detail::check_keys(j, "grid", {"dim", "points", "box_length"});
        GridSpec g;
        g.dim = j.at("dim").get<int>();
        g.points = j.at("points").get<int>();
        g.box_length = j.at("box_length").get<double>();
        try {
            g.build();
        } catch (const Error& e) {
            throw ConfigError(std::string("grid: ") + e.what());
        }
        return g;
    }
};

/// Coefficient specification. `build(eps)` yields one member of the epsilon
/// family; `build_classical()` the sharp, unmollified coefficient.
class CoefficientSpec {
public:
    enum class Kind { Constant, Anisotropic, Piecewise, ExpressionTerms };

    static CoefficientSpec parse(const nlohmann::json& j, int dim) {
        detail::check_keys(j, "coefficient",
                           {"kind", "matrix", "eigenvalues", "rotations", "values", "jumps", "terms",
                            "masses", "mollify"});
        CoefficientSpec c;
        c.dim_ = dim;
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "constant") {
            c.kind_ = Kind::Constant;
            c.constant_ = detail::parse_matrix(j.at("matrix"), dim, "coefficient.matrix");
        } else if (kind == "anisotropic") {
            c.kind_ = Kind::Anisotropic;
            c.eigenvalues_ = detail::parse_number_list(j.at("eigenvalues"), "coefficient.eigenvalues");
            if (static_cast<int>(c.eigenvalues_.size()) != dim)
                throw ConfigError("coefficient.eigenvalues: expected one eigenvalue per axis");
            for (double ev : c.eigenvalues_)
                if (!(ev > 0.0)) throw ConfigError("coefficient.eigenvalues: must be positive");
            if (j.contains("rotations")) {
                for (const auto& r : j.at("rotations")) {
                    detail::check_keys(r, "coefficient.rotations", {"axes", "angle"});
                    const auto axes = r.at("axes");
                    if (!axes.is_array() || axes.size() != 2)
                        throw ConfigError("coefficient.rotations.axes: expected two axis indices");
                    const int a = axes[0].get<int>(), b = axes[1].get<int>();
                    if (a < 0 || b < 0 || a >= dim || b >= dim || a == b)
                        throw ConfigError("coefficient.rotations.axes: invalid axis pair");
                    c.rotations_.push_back({a, b, r.at("angle").get<double>()});
                }
            }
            c.constant_ = c.rotated_diagonal();
        } else if (kind == "piecewise") {
            c.kind_ = Kind::Piecewise;
            if (!j.contains("values") || !j.at("values").is_array() || j.at("values").empty())
                throw ConfigError("coefficient.values: expected at least one matrix");
            for (const auto& v : j.at("values"))
                c.values_.push_back(detail::parse_matrix(v, dim, "coefficient.values"));
            c.jumps_ = j.contains("jumps")
                           ? detail::parse_number_list(j.at("jumps"), "coefficient.jumps")
                           : std::vector<double>{};
            if (c.values_.size() != c.jumps_.size() + 1)
                throw ConfigError("coefficient: need one more value than jump times");
        } else if (kind == "expression") {
            c.kind_ = Kind::ExpressionTerms;
            if (!j.contains("terms") || !j.at("terms").is_array() || j.at("terms").empty())
                throw ConfigError("coefficient.terms: expected at least one term");
            for (const auto& term : j.at("terms")) {
                detail::check_keys(term, "coefficient.terms", {"expr", "matrix"});
                c.terms_.emplace_back(Expression::parse(term.at("expr").get<std::string>()),
                                      detail::parse_matrix(term.at("matrix"), dim,
                                                           "coefficient.terms.matrix"));
            }
        } else {
            throw ConfigError("coefficient.kind: unknown kind '" + kind + "'");
        }
        if (j.contains("masses")) {
            for (const auto& m : j.at("masses")) {
                detail::check_keys(m, "coefficient.masses", {"time", "matrix"});
                const double t0 = m.at("time").get<double>();
                if (!(t0 > 0.0)) throw ConfigError("coefficient.masses.time: must be > 0");
                c.masses_.push_back(
                    {t0, detail::parse_matrix(m.at("matrix"), dim, "coefficient.masses.matrix")});
            }
        }
        if (j.contains("mollify")) {
            const auto& m = j.at("mollify");
            detail::check_keys(m, "coefficient.mollify", {"profile"});
            const std::string profile = m.at("profile").get<std::string>();
            if (profile == "gaussian")
                c.mollify_ = MollifierSpec::gaussian();
            else if (profile == "bump")
                c.mollify_ = MollifierSpec::bump();
            else
                throw ConfigError("coefficient.mollify.profile: expected gaussian or bump");
            if (c.uses_eps_expression())
                throw ConfigError("coefficient: mollify cannot be combined with eps-expressions");
        }
        return c;
    }

    bool uses_eps_expression() const {
        for (const auto& [expr, matrix] : terms_)
            if (expr.uses_eps()) return true;
        return false;
    }

    bool is_eps_family() const { return mollify_.has_value() || uses_eps_expression(); }
    bool has_masses() const { return !masses_.empty(); }
    const std::optional<MollifierSpec>& mollify_profile() const { return mollify_; }

    /// Sharp coefficient: the classical limit of the family.
    DiffusivityPath build_classical() const {
        for (const auto& [expr, matrix] : terms_)
            if (expr.has_mollified_delta())
                throw ConfigError("coefficient: mollified_delta terms have no classical limit; "
                                  "model point masses with coefficient.masses instead");
        return attach_masses(base_path(0.0));
    }

    /// One member of the epsilon family.
    DiffusivityPath build(double eps) const {
        if (!(eps > 0.0 && eps < 1.0)) throw Error("CoefficientSpec: eps must lie in (0, 1)");
        if (mollify_) return mollify_coefficient(build_classical(), *mollify_, eps, repair_log_);
        return attach_masses(base_path(eps));
    }

    void set_repair_log(std::shared_ptr<MollifierRepairLog> log) { repair_log_ = std::move(log); }

private:
    DiffusivityPath base_path(double eps) const {
        switch (kind_) {
            case Kind::Constant:
            case Kind::Anisotropic:
                return DiffusivityPath::constant(*constant_);
            case Kind::Piecewise:
                return DiffusivityPath::piecewise_constant(values_, jumps_);
            case Kind::ExpressionTerms: {
                auto terms = std::make_shared<std::vector<std::pair<Expression, SpdMatrix>>>(terms_);
                const int dim = dim_;
                auto eval = [terms, eps, dim](double t) {
                    SpdMatrix acc(dim);
                    for (const auto& [expr, matrix] : *terms) acc += matrix * expr(t, eps);
                    return acc;
                };
                std::vector<double> hints;
                for (const auto& [expr, matrix] : terms_)
                    for (double ft : expr.feature_times())
                        if (ft > 0.0) hints.push_back(ft);
                std::sort(hints.begin(), hints.end());
                hints.erase(std::unique(hints.begin(), hints.end()), hints.end());
                return DiffusivityPath::smooth(dim_, eval, nullptr, hints);
            }
        }
        throw Error("CoefficientSpec: corrupt kind");
    }

    DiffusivityPath attach_masses(DiffusivityPath p) const {
        return masses_.empty() ? p : p.with_point_masses(masses_);
    }

    SpdMatrix rotated_diagonal() const {
        const int n = dim_;
        std::vector<double> m(static_cast<std::size_t>(n) * n, 0.0);
        for (int i = 0; i < n; ++i)
            m[static_cast<std::size_t>(i) * n + i] = eigenvalues_[static_cast<std::size_t>(i)];
        for (const auto& [p, q, theta] : rotations_) {
            const double c = std::cos(theta), s = std::sin(theta);
            for (int k = 0; k < n; ++k) {
                const double mp = m[static_cast<std::size_t>(p) * n + k];
                const double mq = m[static_cast<std::size_t>(q) * n + k];
                m[static_cast<std::size_t>(p) * n + k] = c * mp - s * mq;
                m[static_cast<std::size_t>(q) * n + k] = s * mp + c * mq;
            }
            for (int k = 0; k < n; ++k) {
                const double mp = m[static_cast<std::size_t>(k) * n + p];
                const double mq = m[static_cast<std::size_t>(k) * n + q];
                m[static_cast<std::size_t>(k) * n + p] = c * mp - s * mq;
                m[static_cast<std::size_t>(k) * n + q] = s * mp + c * mq;
            }
        }
        return SpdMatrix(n, m);
    }

    Kind kind_ = Kind::Constant;
    int dim_ = 1;
    std::optional<SpdMatrix> constant_;
    std::vector<double> eigenvalues_;
    std::vector<std::tuple<int, int, double>> rotations_;
    std::vector<SpdMatrix> values_;
    std::vector<double> jumps_;
    std::vector<std::pair<Expression, SpdMatrix>> terms_;
    std::vector<CoefficientPointMass> masses_;
    std::optional<MollifierSpec> mollify_;
    std::shared_ptr<MollifierRepairLog> repair_log_;
};

struct InitialSpec {
    enum class Kind { Gaussian, Delta, File, Zero };
    Kind kind = Kind::Gaussian;
    std::vector<double> mean;
    std::optional<SpdMatrix> covariance;
    std::string path;

    static InitialSpec parse(const nlohmann::json& j, int dim,
                             const std::filesystem::path& config_dir) {
        detail::check_keys(j, "initial", {"kind", "mean", "covariance", "path"});
        InitialSpec s;
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "gaussian") {
            s.kind = Kind::Gaussian;
            s.mean = j.contains("mean")
                         ? detail::parse_number_list(j.at("mean"), "initial.mean")
                         : std::vector<double>(static_cast<std::size_t>(dim), 0.0);
            if (static_cast<int>(s.mean.size()) != dim)
                throw ConfigError("initial.mean: expected one entry per axis");
            s.covariance = detail::parse_matrix(j.at("covariance"), dim, "initial.covariance");
            if (!is_positive_definite(*s.covariance))
                throw ConfigError("initial.covariance: matrix is not positive definite");
        } else if (kind == "delta") {
            s.kind = Kind::Delta;
        } else if (kind == "zero") {
            s.kind = Kind::Zero;
        } else if (kind == "file") {
            s.kind = Kind::File;
            s.path = (config_dir / j.at("path").get<std::string>()).string();
            if (!std::filesystem::exists(s.path))
                throw ConfigError("initial.path: file does not exist: " + s.path);
        } else {
            throw ConfigError("initial.kind: unknown kind '" + kind + "'");
        }
        return s;
    }

    bool is_delta() const { return kind == Kind::Delta; }

    GridField build_field(const Grid& grid) const {
        switch (kind) {
            case Kind::Gaussian: return gaussian_density_field(grid, mean, *covariance);
            case Kind::Zero: return GridField(grid);
            case Kind::File: {
                GridField f = read_field(path);
                if (f.grid() != grid)
                    throw ConfigError("initial.path: field grid does not match the configured grid");
                return f;
            }
            case Kind::Delta: break;
        }
        throw Error("InitialSpec: delta datum has no field representation");
    }
};

struct SourceSpec {
    enum class Kind { Zero, Separable };
    Kind kind = Kind::Zero;
    std::optional<Expression> time_factor;
    std::optional<InitialSpec> space_factor;

    static SourceSpec parse(const nlohmann::json& j, int dim,
                            const std::filesystem::path& config_dir) {
        detail::check_keys(j, "source", {"kind", "time_expr", "space"});
        SourceSpec s;
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "zero") {
            s.kind = Kind::Zero;
        } else if (kind == "separable") {
            s.kind = Kind::Separable;
            s.time_factor = Expression::parse(j.at("time_expr").get<std::string>());
            if (s.time_factor->uses_eps())
                throw ConfigError("source.time_expr: eps is not allowed in source expressions");
            s.space_factor = InitialSpec::parse(j.at("space"), dim, config_dir);
            if (s.space_factor->is_delta())
                throw ConfigError("source.space: delta data are not supported as sources");
        } else {
            throw ConfigError("source.kind: unknown kind '" + kind + "'");
        }
        return s;
    }

    SourceFn build(const Grid& grid) const {
        if (kind == Kind::Zero) return nullptr;
        auto space = std::make_shared<GridField>(space_factor->build_field(grid));
        const Expression g = *time_factor;
        return [space, g](double t) { return *space * g(t, 0.0); };
    }

    /// True when the time factor stays nonnegative on the sampled times and
    /// the spatial factor is a density; used to decide whether the positivity
    /// check applies.
    bool nonnegative_on(std::span<const double> times) const {
        if (kind == Kind::Zero) return true;
        if (space_factor->kind == InitialSpec::Kind::File) return false;
        for (double t : times)
            if ((*time_factor)(t, 0.0) < 0.0) return false;
        return true;
    }
};

struct ExperimentConfig {
    GridSpec grid;
    CoefficientSpec coefficient;
    InitialSpec initial;
    SourceSpec source;
    std::vector<double> times;
    int quadrature_nodes = 8;
    std::vector<double> epsilons = default_epsilon_grid();
    AsymptoticScale scale = AsymptoticScale::default_power();
    std::vector<SeminormSpec> seminorms;
    std::optional<double> consistency_threshold;
    std::vector<double> norm_qs = {1.0, 2.0, std::numeric_limits<double>::infinity()};
    std::vector<double> energy_ps = {2.0};
    int young_count = 20;
    std::uint64_t seed = 12345;
    std::string output_dir;
    std::string canonical_text;

    std::string config_hash() const { return hash_hex(fnv1a64(canonical_text)); }

    static ExperimentConfig load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file " + path.string());
        std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(raw);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        return parse(j, std::move(raw), path.parent_path());
    }

    static ExperimentConfig parse(const nlohmann::json& j, std::string raw,
                                  const std::filesystem::path& config_dir) {
        try {
            return parse_impl(j, std::move(raw), config_dir);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }

private:
    static ExperimentConfig parse_impl(const nlohmann::json& j, std::string raw,
                                       const std::filesystem::path& config_dir) {
        detail::check_keys(j, "config",
                           {"version", "grid", "coefficient", "initial", "source", "times",
                            "quadrature_nodes", "epsilons", "scale", "seminorms", "consistency",
                            "norms", "young", "seed", "output"});
        if (!j.contains("version") || !j.at("version").is_number_integer() ||
            j.at("version").get<int>() != 1)
            throw ConfigError("config: requires \"version\": 1");

        ExperimentConfig cfg;
        cfg.grid = GridSpec::parse(j.at("grid"));
        cfg.coefficient = CoefficientSpec::parse(j.at("coefficient"), cfg.grid.dim);
        cfg.initial = InitialSpec::parse(j.at("initial"), cfg.grid.dim, config_dir);
        cfg.canonical_text = std::move(raw);
        const int dim = cfg.grid.dim;
        if (j.contains("source")) cfg.source = SourceSpec::parse(j.at("source"), dim, config_dir);

        const auto& jt = j.at("times");
        detail::check_keys(jt, "times", {"values", "start", "stop", "count"});
        if (jt.contains("values")) {
            cfg.times = detail::parse_number_list(jt.at("values"), "times.values");
        } else {
            const double start = jt.contains("start") ? jt.at("start").get<double>() : 0.0;
            const double stop = jt.at("stop").get<double>();
            const int count = jt.at("count").get<int>();
            if (count < 1) throw ConfigError("times.count: must be >= 1");
            if (!(stop > start)) throw ConfigError("times: requires stop > start");
            for (int k = 0; k < count; ++k)
                cfg.times.push_back(count == 1 ? stop
                                               : start + (stop - start) * k / (count - 1));
        }
        if (cfg.times.empty()) throw ConfigError("times: the time grid is empty");
        for (std::size_t k = 0; k < cfg.times.size(); ++k) {
            if (!(cfg.times[k] >= 0.0)) throw ConfigError("times: entries must be >= 0");
            if (k > 0 && !(cfg.times[k] > cfg.times[k - 1]))
                throw ConfigError("times: entries must be strictly increasing");
        }
        if (cfg.initial.is_delta() && cfg.times.front() == 0.0)
            throw ConfigError("times: a delta initial datum requires times to start after 0");

        if (j.contains("quadrature_nodes")) {
            cfg.quadrature_nodes = j.at("quadrature_nodes").get<int>();
            if (cfg.quadrature_nodes < 1 || cfg.quadrature_nodes > 128)
                throw ConfigError("quadrature_nodes: expected 1..128");
        }
        if (j.contains("epsilons")) {
            const auto& je = j.at("epsilons");
            detail::check_keys(je, "epsilons", {"values", "from", "to", "count"});
            if (je.contains("values"))
                cfg.epsilons = detail::parse_number_list(je.at("values"), "epsilons.values");
            else
                cfg.epsilons = default_epsilon_grid(je.at("count").get<int>(),
                                                    je.at("from").get<double>(),
                                                    je.at("to").get<double>());
        }
        if (j.contains("scale")) {
            const auto& js = j.at("scale");
            detail::check_keys(js, "scale", {"exponents"});
            cfg.scale = AsymptoticScale::power(
                detail::parse_number_list(js.at("exponents"), "scale.exponents"));
        }
        if (j.contains("seminorms")) {
            for (const auto& s : j.at("seminorms")) {
                if (s.is_string()) {
                    const std::string name = s.get<std::string>();
                    if (name == "linf")
                        cfg.seminorms.push_back(SeminormSpec::lq(std::numeric_limits<double>::infinity()));
                    else if (name == "l1")
                        cfg.seminorms.push_back(SeminormSpec::lq(1.0));
                    else if (name == "l2")
                        cfg.seminorms.push_back(SeminormSpec::lq(2.0));
                    else
                        throw ConfigError("seminorms: unknown name '" + name + "'");
                } else {
                    detail::check_keys(s, "seminorms", {"q", "alpha", "beta"});
                    if (s.contains("q")) {
                        cfg.seminorms.push_back(
                            SeminormSpec::lq(detail::parse_exponent(s.at("q"), "seminorms.q")));
                    } else {
                        auto to_int = [&](const nlohmann::json& v, const char* what) {
                            std::vector<int> out;
                            for (const auto& e : v) out.push_back(e.get<int>());
                            if (static_cast<int>(out.size()) != dim)
                                throw ConfigError(std::string("seminorms.") + what +
                                                  ": expected one entry per axis");
                            return out;
                        };
                        cfg.seminorms.push_back(SeminormSpec::weighted(
                            to_int(s.at("alpha"), "alpha"), to_int(s.at("beta"), "beta")));
                    }
                }
            }
        } else {
            cfg.seminorms = {SeminormSpec::lq(std::numeric_limits<double>::infinity()),
                             SeminormSpec::lq(1.0), SeminormSpec::lq(2.0)};
        }
        if (j.contains("consistency")) {
            const auto& jc = j.at("consistency");
            detail::check_keys(jc, "consistency", {"threshold"});
            cfg.consistency_threshold = jc.at("threshold").get<double>();
        }
        if (j.contains("norms")) {
            const auto& jn = j.at("norms");
            detail::check_keys(jn, "norms", {"q", "energy_p"});
            if (jn.contains("q")) {
                cfg.norm_qs.clear();
                for (const auto& v : jn.at("q"))
                    cfg.norm_qs.push_back(detail::parse_exponent(v, "norms.q"));
                if (cfg.norm_qs.empty()) throw ConfigError("norms.q: must not be empty");
            }
            if (jn.contains("energy_p")) {
                cfg.energy_ps.clear();
                for (const auto& v : jn.at("energy_p"))
                    cfg.energy_ps.push_back(v.get<double>());
            }
        }
        if (j.contains("young")) {
            detail::check_keys(j.at("young"), "young", {"count"});
            cfg.young_count = j.at("young").at("count").get<int>();
            if (cfg.young_count < 1) throw ConfigError("young.count: must be >= 1");
        }
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("output")) cfg.output_dir = j.at("output").get<std::string>();
        return cfg;
    }
};

/// Ratio of the estimated solution magnitude at the box boundary to its peak:
/// a Gaussian-tail bound using the initial covariance plus twice the
/// accumulated diffusivity. Data without a Gaussian description return
/// nothing.
inline std::optional<double> estimate_tail_ratio(const ExperimentConfig& cfg,
                                                 const DiffusivityPath& path) {
    double sigma0 = 0.0; // largest eigenvalue of the initial covariance
    if (cfg.initial.kind == InitialSpec::Kind::Gaussian)
        sigma0 = max_eigenvalue(*cfg.initial.covariance);
    else if (cfg.initial.kind != InitialSpec::Kind::Delta &&
             cfg.initial.kind != InitialSpec::Kind::Zero)
        return std::nullopt;
    const double total = sigma0 + 2.0 * max_eigenvalue(accumulate(path, cfg.times.back()));
    const double half_box = 0.5 * cfg.grid.box_length;
    const double e = -0.5 * half_box * half_box / total;
    return e < kUnderflowExponent ? 0.0 : std::exp(e);
}

} // namespace aniheat
