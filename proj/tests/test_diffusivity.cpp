#include "doctest.h"

#include <cmath>

#include "aniheat/diffusivity.hpp"
#include "aniheat/quadrature.hpp"
#include "test_util.hpp"

using namespace aniheat;

TEST_CASE("gauss rules integrate polynomials exactly") {
    for (int k : {2, 5, 8, 15}) {
        const GaussRule& rule = gauss_rule(k);
        // exact up to degree 2k-1
        for (int deg = 0; deg <= 2 * k - 1; ++deg) {
            double s = 0.0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i)
                s += rule.weights[i] * std::pow(rule.nodes[i], deg);
            const double exact = deg % 2 == 1 ? 0.0 : 2.0 / (deg + 1);
            CHECK(std::abs(s - exact) < 1e-13);
        }
    }
}

TEST_CASE("adaptive quadrature handles smooth and kinked integrands") {
    const double s = integrate_adaptive([](double t) { return std::sin(t); }, 0.0, M_PI);
    CHECK(s == doctest::Approx(2.0).epsilon(1e-12));
    // |t - 1| over [0, 2] with the kink declared
    const double splits[] = {1.0};
    const double a = integrate_adaptive([](double t) { return std::abs(t - 1.0); }, 0.0, 2.0, splits);
    CHECK(a == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("accumulate of a constant path scales linearly") {
    const auto path = DiffusivityPath::constant(SpdMatrix::identity(2));
    const SpdMatrix a2 = accumulate(path, 2.0);
    CHECK(a2(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(a2(1, 1) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(a2(0, 1) == 0.0);
}

TEST_CASE("accumulate with closed-form antiderivative and by quadrature agree") {
    auto eval = [](double t) { return SpdMatrix::diagonal({1.0 + t, 1.0}); };
    auto anti = [](double t) { return SpdMatrix::diagonal({t + 0.5 * t * t, t}); };
    const auto closed = DiffusivityPath::smooth(2, eval, anti);
    const auto numeric = DiffusivityPath::smooth(2, eval);
    const SpdMatrix ac = accumulate(closed, 1.0);
    const SpdMatrix an = accumulate(numeric, 1.0);
    CHECK(ac(0, 0) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(ac(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(an(0, 0) == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(an(1, 1) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("accumulate at t = 0 is the zero matrix") {
    const auto path = DiffusivityPath::constant(SpdMatrix::diagonal({3.0, 0.5}));
    const SpdMatrix a0 = accumulate(path, 0.0);
    for (double v : a0.entries()) CHECK(v == 0.0);
}

TEST_CASE("increment of the identity path") {
    const auto path = DiffusivityPath::constant(SpdMatrix::identity(3));
    const SpdMatrix b = increment(path, TimePair(1.0, 3.0));
    for (int i = 0; i < 3; ++i) CHECK(b(i, i) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("piecewise-constant coefficients integrate exactly across the jump") {
    const auto path = DiffusivityPath::piecewise_constant(
        {SpdMatrix::identity(2), SpdMatrix::identity(2) * 2.0}, {1.0});
    const SpdMatrix b = increment(path, TimePair(0.0, 2.0));
    CHECK(b(0, 0) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(b(1, 1) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(path.evaluate(0.5)(0, 0) == 1.0);
    CHECK(path.evaluate(1.5)(0, 0) == 2.0);
}

TEST_CASE("degenerate interval is rejected") {
    const auto path = DiffusivityPath::constant(SpdMatrix::identity(1));
    const double tau = 0.7;
    CHECK_THROWS_AS(increment(path, TimePair(tau, tau + 1e-16)), DegenerateInterval);
}

TEST_CASE("increment rejects non-SPD coefficients") {
    const auto bad = DiffusivityPath::constant(SpdMatrix(2, {1.0, 2.0, 2.0, 1.0}));
    CHECK_THROWS_AS(increment(bad, TimePair(0.0, 1.0)), NotPositiveDefinite);
}

TEST_CASE("increments add over nested intervals") {
    auto eval = [](double t) {
        return SpdMatrix(2, {2.0 + std::sin(t), 0.3 * std::cos(t), 0.3 * std::cos(t), 1.5 + 0.5 * t});
    };
    const auto path = DiffusivityPath::smooth(2, eval);
    testutil::Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const double s = rng.uniform(0.0, 1.0);
        const double t = s + rng.uniform(0.5, 2.0);
        const double tau = s + (t - s) * rng.uniform(0.1, 0.9);
        const SpdMatrix whole = increment(path, TimePair(s, t));
        const SpdMatrix sum = increment(path, TimePair(s, tau)) + increment(path, TimePair(tau, t));
        for (std::size_t k = 0; k < whole.entries().size(); ++k)
            CHECK(std::abs(whole.entries()[k] - sum.entries()[k]) < 1e-10 * whole.max_abs());
        CHECK(is_positive_definite(whole));
    }
}

TEST_CASE("point masses accumulate into A(t)") {
    auto path = DiffusivityPath::constant(SpdMatrix::identity(1))
                    .with_point_masses({{1.0, SpdMatrix::diagonal({0.5})}});
    CHECK(accumulate(path, 0.5)(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(accumulate(path, 1.0)(0, 0) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(accumulate(path, 2.0)(0, 0) == doctest::Approx(2.5).epsilon(1e-14));
    // the mass sits in (s, t] for s < 1 <= t
    CHECK(increment(path, TimePair(0.5, 1.5))(0, 0) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(increment(path, TimePair(1.0, 1.5))(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("jump times must be increasing and positive") {
    CHECK_THROWS_AS(DiffusivityPath::piecewise_constant(
                        {SpdMatrix::identity(1), SpdMatrix::identity(1), SpdMatrix::identity(1)},
                        {2.0, 1.0}),
                    Error);
    CHECK_THROWS_AS(DiffusivityPath::piecewise_constant(
                        {SpdMatrix::identity(1), SpdMatrix::identity(1)}, {-1.0}),
                    Error);
}
