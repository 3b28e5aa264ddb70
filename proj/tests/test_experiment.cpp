#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "aniheat/aniheat.hpp"

using namespace aniheat;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse_config(const std::string& text) {
    return ExperimentConfig::parse(nlohmann::json::parse(text), text, fs::temp_directory_path());
}

const char* kSolveConfig = R"({
  "version": 1,
  "grid": {"dim": 1, "points": 128, "box_length": 24.0},
  "coefficient": {"kind": "constant", "matrix": [[1.0]]},
  "initial": {"kind": "gaussian", "covariance": [[0.5]]},
  "source": {"kind": "zero"},
  "times": {"stop": 1.0, "count": 5},
  "seed": 42
})";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("expression grammar evaluates with precedence") {
    const Expression e = Expression::parse("1 + 2 * t ^ 2 - eps / 2");
    CHECK(e(3.0, 0.5) == doctest::Approx(1.0 + 18.0 - 0.25));
    CHECK(e.uses_eps());
    const Expression f = Expression::parse("exp(-t) * sin(t)");
    CHECK(f(0.7, 0.0) == doctest::Approx(std::exp(-0.7) * std::sin(0.7)));
    CHECK_FALSE(f.uses_eps());
    const Expression g = Expression::parse("-t^2");
    CHECK(g(2.0, 0.0) == doctest::Approx(-4.0));
    const Expression h = Expression::parse("2^3^2"); // right associative
    CHECK(h(0.0, 0.0) == doctest::Approx(512.0));
}

TEST_CASE("mollified primitives and their classical limits") {
    const Expression step = Expression::parse("1 + mollified_step(1)");
    CHECK(step(0.0, 0.0) == 1.0);
    CHECK(step(1.5, 0.0) == 2.0);
    CHECK(step(1.0, 0.01) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(step.feature_times() == std::vector<double>{1.0});

    const Expression delta = Expression::parse("mollified_delta(2)");
    CHECK(delta(2.0, 0.1) == doctest::Approx(1.0 / (0.1 * std::sqrt(2.0 * M_PI))).epsilon(1e-12));
    CHECK_THROWS_AS(delta(2.0, 0.0), Error);
}

TEST_CASE("expression parse errors") {
    CHECK_THROWS_AS(Expression::parse("2 +"), ConfigError);
    CHECK_THROWS_AS(Expression::parse("bogus(t)"), ConfigError);
    CHECK_THROWS_AS(Expression::parse("1 2"), ConfigError);
    CHECK_THROWS_AS(Expression::parse("sin t"), ConfigError);
}

TEST_CASE("config parsing accepts the reference solve config") {
    const ExperimentConfig cfg = parse_config(kSolveConfig);
    CHECK(cfg.grid.dim == 1);
    CHECK(cfg.times.size() == 5);
    CHECK(cfg.times.front() == 0.0);
    CHECK(cfg.times.back() == 1.0);
    CHECK(cfg.seed == 42);
    CHECK_FALSE(cfg.coefficient.is_eps_family());
}

TEST_CASE("unknown keys are rejected everywhere") {
    std::string bad = kSolveConfig;
    bad.insert(bad.rfind('}'), ", \"typo\": 1");
    CHECK_THROWS_AS(parse_config(bad), ConfigError);

    CHECK_THROWS_AS(parse_config(R"({
      "version": 1,
      "grid": {"dim": 1, "points": 128, "box_length": 24.0, "oops": 3},
      "coefficient": {"kind": "constant", "matrix": [[1.0]]},
      "initial": {"kind": "gaussian", "covariance": [[0.5]]},
      "times": {"stop": 1.0, "count": 5}
    })"),
                    ConfigError);
}

TEST_CASE("config validation catches the usual mistakes") {
    // wrong version
    CHECK_THROWS_AS(parse_config(R"({"version": 2, "grid": {"dim":1,"points":16,"box_length":1.0},
      "coefficient": {"kind":"constant","matrix":[[1.0]]},
      "initial": {"kind":"zero"}, "times": {"stop":1.0,"count":2}})"),
                    ConfigError);
    // empty time grid
    CHECK_THROWS_AS(parse_config(R"({"version": 1, "grid": {"dim":1,"points":16,"box_length":1.0},
      "coefficient": {"kind":"constant","matrix":[[1.0]]},
      "initial": {"kind":"zero"}, "times": {"values":[]}})"),
                    ConfigError);
    // decreasing times
    CHECK_THROWS_AS(parse_config(R"({"version": 1, "grid": {"dim":1,"points":16,"box_length":1.0},
      "coefficient": {"kind":"constant","matrix":[[1.0]]},
      "initial": {"kind":"zero"}, "times": {"values":[0.5, 0.25]}})"),
                    ConfigError);
    // indefinite covariance
    CHECK_THROWS_AS(parse_config(R"({"version": 1, "grid": {"dim":2,"points":16,"box_length":1.0},
      "coefficient": {"kind":"constant","matrix":[[1.0,0.0],[0.0,1.0]]},
      "initial": {"kind":"gaussian","covariance":[[1.0,2.0],[2.0,1.0]]},
      "times": {"stop":1.0,"count":2}})"),
                    ConfigError);
    // missing initial file
    CHECK_THROWS_AS(parse_config(R"({"version": 1, "grid": {"dim":1,"points":16,"box_length":1.0},
      "coefficient": {"kind":"constant","matrix":[[1.0]]},
      "initial": {"kind":"file","path":"does_not_exist.field"},
      "times": {"stop":1.0,"count":2}})"),
                    ConfigError);
    // delta datum with t = 0 in the grid
    CHECK_THROWS_AS(parse_config(R"({"version": 1, "grid": {"dim":1,"points":16,"box_length":1.0},
      "coefficient": {"kind":"constant","matrix":[[1.0]]},
      "initial": {"kind":"delta"}, "times": {"stop":1.0,"count":2}})"),
                    ConfigError);
    // asymmetric coefficient matrix
    CHECK_THROWS_AS(parse_config(R"({"version": 1, "grid": {"dim":2,"points":16,"box_length":1.0},
      "coefficient": {"kind":"constant","matrix":[[1.0,0.5],[0.1,1.0]]},
      "initial": {"kind":"zero"}, "times": {"stop":1.0,"count":2}})"),
                    ConfigError);
}

TEST_CASE("anisotropic coefficients build rotated SPD matrices") {
    const ExperimentConfig cfg = parse_config(R"({
      "version": 1,
      "grid": {"dim": 2, "points": 16, "box_length": 8.0},
      "coefficient": {"kind": "anisotropic", "eigenvalues": [1.0, 3.0],
                      "rotations": [{"axes": [0, 1], "angle": 0.7}]},
      "initial": {"kind": "zero"},
      "times": {"stop": 1.0, "count": 2}
    })");
    const DiffusivityPath path = cfg.coefficient.build_classical();
    const SpdMatrix a = path.evaluate(0.0);
    const auto ev = jacobi_eigenvalues(a);
    CHECK(ev.front() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ev.back() == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(a(0, 1) != 0.0); // genuinely rotated
}

TEST_CASE("expression coefficients declare their feature times as split hints") {
    const ExperimentConfig cfg = parse_config(R"({
      "version": 1,
      "grid": {"dim": 1, "points": 16, "box_length": 8.0},
      "coefficient": {"kind": "expression",
                      "terms": [{"expr": "1 + mollified_step(0.5) * eps", "matrix": [[1.0]]}]},
      "initial": {"kind": "zero"},
      "times": {"stop": 1.0, "count": 2}
    })");
    CHECK(cfg.coefficient.is_eps_family());
    const DiffusivityPath member = cfg.coefficient.build(0.01);
    CHECK(member.jump_times() == std::vector<double>{0.5});
    const DiffusivityPath classical = cfg.coefficient.build_classical();
    CHECK(classical.evaluate(0.0)(0, 0) == doctest::Approx(1.0));
    CHECK(classical.evaluate(1.0)(0, 0) == doctest::Approx(1.0)); // eps = 0 kills the step term
}

TEST_CASE("solve runs are deterministic byte for byte") {
    const ExperimentConfig cfg = parse_config(kSolveConfig);
    const fs::path d1 = fresh_dir("aniheat_det1");
    const fs::path d2 = fresh_dir("aniheat_det2");
    std::ostringstream sink;
    CHECK(run_solve(cfg, d1, 1, false, sink) == 0);
    CHECK(run_solve(cfg, d2, 1, false, sink) == 0);
    for (const char* rel : {"norms.csv", "energy.csv", "bounds.csv", "fields/state_0000.field",
                            "fields/state_0004.field"}) {
        const std::string a = slurp(d1 / rel), b = slurp(d2 / rel);
        CHECK(!a.empty());
        CHECK(a == b);
    }
}

TEST_CASE("solve outputs satisfy their own CSV claims") {
    const ExperimentConfig cfg = parse_config(kSolveConfig);
    const fs::path dir = fresh_dir("aniheat_solve_csv");
    std::ostringstream sink;
    REQUIRE(run_solve(cfg, dir, 1, false, sink) == 0);
    // energy column is strictly nonincreasing for the homogeneous gaussian solve
    std::ifstream energy(dir / "energy.csv");
    std::string line;
    std::getline(energy, line); // header
    double prev = std::numeric_limits<double>::infinity();
    int rows = 0;
    while (std::getline(energy, line)) {
        const auto comma = line.find(',');
        const double value = std::stod(line.substr(comma + 1));
        CHECK(value <= prev * (1.0 + 1e-10));
        prev = value;
        ++rows;
    }
    CHECK(rows == 5);
    // bounds rows are all satisfied
    std::ifstream bounds(dir / "bounds.csv");
    std::getline(bounds, line);
    CHECK(line == "t,lhs,bound,margin,satisfied");
    while (std::getline(bounds, line)) CHECK(line.back() == '1');
}

TEST_CASE("manifest round trip and corruption detection") {
    const ExperimentConfig cfg = parse_config(kSolveConfig);
    const fs::path dir = fresh_dir("aniheat_manifest");
    std::ostringstream sink;
    REQUIRE(run_solve(cfg, dir, 1, false, sink) == 0);
    CHECK(verify_manifest(dir).empty());
    // corrupt one field file
    {
        std::fstream f(dir / "fields/state_0002.field",
                       std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(40);
        const char zero[8] = {};
        f.write(zero, sizeof(zero));
    }
    const auto problems = verify_manifest(dir);
    REQUIRE(!problems.empty());
    CHECK(problems.front().find("state_0002") != std::string::npos);
}

TEST_CASE("delta initial data store the sampled kernel first") {
    const ExperimentConfig cfg = parse_config(R"({
      "version": 1,
      "grid": {"dim": 1, "points": 256, "box_length": 24.0},
      "coefficient": {"kind": "constant", "matrix": [[1.0]]},
      "initial": {"kind": "delta"},
      "times": {"start": 0.25, "stop": 1.0, "count": 4}
    })");
    const fs::path dir = fresh_dir("aniheat_delta");
    std::ostringstream sink;
    REQUIRE(run_solve(cfg, dir, 1, false, sink) == 0);
    const GridField first = read_field((dir / "fields/state_0000.field").string());
    const Grid grid = cfg.grid.build();
    const GridField expected = sample_kernel(grid, cfg.coefficient.build_classical(), 0.25);
    for (std::size_t i = 0; i < first.size(); ++i)
        CHECK(first[i] == doctest::Approx(expected[i]).epsilon(1e-14));
}

TEST_CASE("net runs classify, measure consistency, and checksum their outputs") {
    const std::string net_config = R"({
      "version": 1,
      "grid": {"dim": 1, "points": 128, "box_length": 20.0},
      "coefficient": {"kind": "piecewise", "values": [[[1.0]], [[2.0]]], "jumps": [0.5],
                      "mollify": {"profile": "gaussian"}},
      "initial": {"kind": "gaussian", "covariance": [[0.7]]},
      "source": {"kind": "zero"},
      "times": {"stop": 1.0, "count": 5},
      "consistency": {"threshold": 1e-3},
      "seed": 7
    })";
    const ExperimentConfig cfg = parse_config(net_config);
    const fs::path dir = fresh_dir("aniheat_net");
    std::ostringstream log;
    REQUIRE(run_net(cfg, dir, 2, false, log) == 0);
    CHECK(log.str().find("classification: moderate") != std::string::npos);
    CHECK(log.str().find("consistency: pass") != std::string::npos);
    CHECK(verify_manifest(dir).empty());

    nlohmann::json net_manifest;
    std::ifstream(dir / "net_manifest.json") >> net_manifest;
    CHECK(net_manifest["epsilons"].size() == 12);
    CHECK(net_manifest["classification"]["overall"] == "moderate");
    CHECK(net_manifest["consistency"]["pass"] == true);
    CHECK(net_manifest["scale"]["condition1"] == true);
    CHECK(net_manifest["scale"]["condition2"] == true);
    CHECK(fs::exists(dir / net_manifest["members"][0]["fields"][0].get<std::string>()));
    CHECK(fs::exists(dir / "seminorms.csv"));
}

TEST_CASE("solve rejects eps families and net rejects classical coefficients") {
    std::ostringstream sink;
    const ExperimentConfig classical = parse_config(kSolveConfig);
    CHECK_THROWS_AS(run_net(classical, fresh_dir("aniheat_badnet"), 1, false, sink), ConfigError);
    const ExperimentConfig family = parse_config(R"({
      "version": 1,
      "grid": {"dim": 1, "points": 16, "box_length": 8.0},
      "coefficient": {"kind": "constant", "matrix": [[1.0]], "mollify": {"profile": "gaussian"}},
      "initial": {"kind": "zero"},
      "times": {"stop": 1.0, "count": 2}
    })");
    CHECK_THROWS_AS(run_solve(family, fresh_dir("aniheat_badsolve"), 1, false, sink), ConfigError);
}

TEST_CASE("zero-data net runs report the negligible uniqueness verdict") {
    const ExperimentConfig cfg = parse_config(R"({
      "version": 1,
      "grid": {"dim": 1, "points": 64, "box_length": 16.0},
      "coefficient": {"kind": "piecewise", "values": [[[1.0]], [[2.0]]], "jumps": [0.5],
                      "mollify": {"profile": "gaussian"}},
      "initial": {"kind": "zero"},
      "source": {"kind": "zero"},
      "times": {"stop": 1.0, "count": 3},
      "seed": 3
    })");
    const fs::path dir = fresh_dir("aniheat_zero_net");
    std::ostringstream log;
    REQUIRE(run_net(cfg, dir, 1, false, log) == 0);
    CHECK(log.str().find("classification: negligible") != std::string::npos);
}

TEST_CASE("tail warnings appear when the box is too small") {
    const ExperimentConfig cfg = parse_config(R"({
      "version": 1,
      "grid": {"dim": 1, "points": 32, "box_length": 6.0},
      "coefficient": {"kind": "constant", "matrix": [[1.0]]},
      "initial": {"kind": "gaussian", "covariance": [[0.5]]},
      "times": {"stop": 1.0, "count": 3}
    })");
    const fs::path dir = fresh_dir("aniheat_tail");
    std::ostringstream log;
    REQUIRE(run_solve(cfg, dir, 1, false, log) == 0);
    CHECK(log.str().find("warning") != std::string::npos);
    nlohmann::json manifest;
    std::ifstream(dir / "manifest.json") >> manifest;
    REQUIRE(manifest["warnings"].size() > 0);
}

TEST_CASE("net outputs are independent of the thread count") {
    const std::string net_config = R"({
      "version": 1,
      "grid": {"dim": 1, "points": 64, "box_length": 18.0},
      "coefficient": {"kind": "piecewise", "values": [[[1.0]], [[2.0]]], "jumps": [0.5],
                      "mollify": {"profile": "gaussian"}},
      "initial": {"kind": "gaussian", "covariance": [[0.7]]},
      "times": {"stop": 1.0, "count": 3},
      "seed": 5
    })";
    const ExperimentConfig cfg = parse_config(net_config);
    const fs::path d1 = fresh_dir("aniheat_threads1");
    const fs::path d2 = fresh_dir("aniheat_threads3");
    std::ostringstream sink;
    REQUIRE(run_net(cfg, d1, 1, false, sink) == 0);
    REQUIRE(run_net(cfg, d2, 3, false, sink) == 0);
    for (const char* rel : {"seminorms.csv", "eps_000/state_0002.field", "eps_011/state_0001.field"})
        CHECK(slurp(d1 / rel) == slurp(d2 / rel));
}

TEST_CASE("a failing net member is attributed to its epsilon") {
    const ExperimentConfig cfg = parse_config(R"({
      "version": 1,
      "grid": {"dim": 1, "points": 16, "box_length": 8.0},
      "coefficient": {"kind": "expression",
                      "terms": [{"expr": "eps - 0.001", "matrix": [[1.0]]}]},
      "initial": {"kind": "zero"},
      "times": {"stop": 1.0, "count": 2},
      "seed": 1
    })");
    std::ostringstream sink;
    try {
        run_net(cfg, fresh_dir("aniheat_failing_net"), 1, false, sink);
        FAIL("expected the small-eps members to be rejected");
    } catch (const Error& e) {
        const std::string what = e.what();
        CHECK(what.find("eps") != std::string::npos);
        CHECK(what.find("positive definite") != std::string::npos);
    }
}

TEST_CASE("weighted seminorms parse from config objects") {
    const ExperimentConfig cfg = parse_config(R"({
      "version": 1,
      "grid": {"dim": 2, "points": 16, "box_length": 8.0},
      "coefficient": {"kind": "constant", "matrix": [[1.0, 0.0], [0.0, 1.0]]},
      "initial": {"kind": "zero"},
      "times": {"stop": 1.0, "count": 2},
      "seminorms": ["linf", {"alpha": [1, 0], "beta": [0, 1]}, {"q": 3.0}]
    })");
    REQUIRE(cfg.seminorms.size() == 3);
    CHECK(cfg.seminorms[0].name == "linf");
    CHECK(cfg.seminorms[1].kind == SeminormSpec::Kind::Weighted);
    CHECK(cfg.seminorms[2].q == 3.0);
}

TEST_CASE("verify fails honestly on an under-resolved grid") {
    const ExperimentConfig cfg = parse_config(R"({
      "version": 1,
      "grid": {"dim": 1, "points": 32, "box_length": 6.0},
      "coefficient": {"kind": "constant", "matrix": [[1.0]]},
      "initial": {"kind": "gaussian", "covariance": [[0.5]]},
      "times": {"stop": 1.0, "count": 3}
    })");
    std::ostringstream log;
    CHECK(run_verify(cfg, std::nullopt, 1, false, log) == 1);
    CHECK(log.str().find("tail_bound") != std::string::npos);
    CHECK(log.str().find("FAIL") != std::string::npos);
}

TEST_CASE("verify passes on the adequate reference config") {
    const ExperimentConfig cfg = parse_config(R"json({
      "version": 1,
      "grid": {"dim": 1, "points": 2048, "box_length": 26.0},
      "coefficient": {"kind": "expression",
                      "terms": [{"expr": "1 + 0.25*sin(t)", "matrix": [[1.0]]}]},
      "initial": {"kind": "gaussian", "covariance": [[0.25]]},
      "times": {"stop": 1.0, "count": 5},
      "seed": 777
    })json");
    std::ostringstream log;
    CHECK(run_verify(cfg, std::nullopt, 1, false, log) == 0);
    CHECK(log.str().find("all checks passed") != std::string::npos);
}

TEST_CASE("point-mass coefficients flow through config into accumulation") {
    const ExperimentConfig cfg = parse_config(R"({
      "version": 1,
      "grid": {"dim": 1, "points": 16, "box_length": 8.0},
      "coefficient": {"kind": "constant", "matrix": [[1.0]],
                      "masses": [{"time": 0.5, "matrix": [[0.25]]}]},
      "initial": {"kind": "zero"},
      "times": {"stop": 1.0, "count": 2}
    })");
    const DiffusivityPath path = cfg.coefficient.build_classical();
    CHECK(accumulate(path, 1.0)(0, 0) == doctest::Approx(1.25).epsilon(1e-14));
    CHECK(accumulate(path, 0.25)(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
}
