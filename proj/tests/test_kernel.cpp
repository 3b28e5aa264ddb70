#include "doctest.h"

#include <array>
#include <cmath>

#include "aniheat/kernel.hpp"
#include "aniheat/quadrature.hpp"
#include "test_util.hpp"

using namespace aniheat;

namespace {

KernelParams unit_kernel_1d() {
    return KernelParams(SpdMatrix::identity(1), TimePair(0.0, 1.0));
}

} // namespace

TEST_CASE("kernel peak value in one dimension") {
    const auto kp = unit_kernel_1d();
    const double x0[] = {0.0};
    // 1/sqrt(4 pi) evaluated with high-precision arithmetic
    CHECK(eval_kernel(x0, kp) == doctest::Approx(0.28209479177387814).epsilon(1e-12));
}

TEST_CASE("kernel is even in x") {
    testutil::Rng rng(3);
    const KernelParams kp(testutil::random_spd(rng, 3, 0.2, 3.0), TimePair(0.0, 1.0));
    for (int trial = 0; trial < 10; ++trial) {
        std::array<double, 3> x{rng.normal(), rng.normal(), rng.normal()};
        std::array<double, 3> nx{-x[0], -x[1], -x[2]};
        CHECK(eval_kernel(x, kp) == eval_kernel(nx, kp));
    }
}

TEST_CASE("kernel closed form by hand substitution") {
    const KernelParams kp(SpdMatrix::diagonal({1.0, 4.0}), TimePair(0.0, 1.0));
    const double x[] = {2.0, 0.0};
    // (1/(4 pi sqrt(det))) e^{-x^2/(4 B_11)} = (1/(8 pi)) e^{-1}
    const double expected = std::exp(-1.0) / (8.0 * M_PI);
    CHECK(eval_kernel(x, kp) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("fourier symbol basics") {
    const auto kp = unit_kernel_1d();
    const double zero[] = {0.0};
    const double one[] = {1.0};
    CHECK(fourier_symbol(zero, kp) == 1.0);
    CHECK(fourier_symbol(one, kp) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
}

TEST_CASE("symbol composes along nested times") {
    auto eval = [](double t) { return SpdMatrix::diagonal({1.0 + t, 2.0}); };
    auto anti = [](double t) { return SpdMatrix::diagonal({t + 0.5 * t * t, 2.0 * t}); };
    const auto path = DiffusivityPath::smooth(2, eval, anti);
    const double s = 0.2, tau = 0.9, t = 1.7;
    const KernelParams k_st(path, TimePair(s, tau));
    const KernelParams k_tt(path, TimePair(tau, t));
    const KernelParams k_full(path, TimePair(s, t));
    testutil::Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        std::array<double, 2> xi{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
        const double composed = fourier_symbol(xi, k_st) * fourier_symbol(xi, k_tt);
        const double direct = fourier_symbol(xi, k_full);
        CHECK(std::abs(composed - direct) < 1e-14);
    }
}

TEST_CASE("L1 norm of the kernel is 1") {
    testutil::Rng rng(23);
    for (int trial = 0; trial < 5; ++trial) {
        const KernelParams kp(testutil::random_spd(rng, rng.uniform_int(1, 3), 0.3, 4.0),
                              TimePair(0.0, 1.0));
        CHECK(kernel_lp_norm(1.0, kp) == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("L2 norm identity against direct quadrature") {
    const auto kp = unit_kernel_1d();
    const double closed = kernel_lp_norm(2.0, kp);
    CHECK(closed == doctest::Approx(1.0 / (std::pow(2.0, 0.25) * std::pow(4.0 * M_PI, 0.25)))
                        .epsilon(1e-14));
    // independent oracle: adaptive quadrature of W^2 over a wide interval
    const double quad = integrate_adaptive(
        [&](double x) {
            const double xv[] = {x};
            const double w = eval_kernel(xv, kp);
            return w * w;
        },
        -30.0, 30.0, {}, 1e-13);
    CHECK(closed == doctest::Approx(std::sqrt(quad)).epsilon(1e-10));
}

TEST_CASE("norm identity holds for several exponents by quadrature") {
    testutil::Rng rng(41);
    const KernelParams kp(testutil::random_spd(rng, 1, 0.4, 2.5), TimePair(0.0, 1.0));
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
        const double quad = integrate_adaptive(
            [&](double x) {
                const double xv[] = {x};
                return std::pow(eval_kernel(xv, kp), p);
            },
            -40.0, 40.0, {}, 1e-13);
        CHECK(kernel_lp_norm(p, kp) ==
              doctest::Approx(std::pow(quad, 1.0 / p)).epsilon(1e-6));
    }
}

TEST_CASE("p = infinity equals the kernel peak") {
    const auto kp = unit_kernel_1d();
    const double x0[] = {0.0};
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(kernel_lp_norm(inf, kp) == doctest::Approx(eval_kernel(x0, kp)).epsilon(1e-15));
    CHECK(kernel_lp_norm(inf, kp) == doctest::Approx(1.0 / std::sqrt(4.0 * M_PI)).epsilon(1e-15));
}

TEST_CASE("exponents below 1 are rejected") {
    CHECK_THROWS_AS(kernel_lp_norm(0.5, unit_kernel_1d()), InvalidExponent);
}

TEST_CASE("underflow policy returns exact zero") {
    const auto kp = unit_kernel_1d();
    const double far[] = {80.0}; // exponent -1600 < -745
    CHECK(eval_kernel(far, kp) == 0.0);
    CHECK(fourier_symbol(far, kp) == 0.0);
}

TEST_CASE("delta pairing converges at first order in the time gap") {
    const auto path = DiffusivityPath::constant(SpdMatrix::identity(1));
    auto phi = [](double x) { return std::exp(-x * x); };
    std::vector<double> gaps = {1e-1, 1e-2, 1e-3};
    std::vector<double> errors;
    for (double gap : gaps) {
        const KernelParams kp(path, TimePair(0.3, 0.3 + gap));
        const double pairing = integrate_adaptive(
            [&](double x) {
                const double xv[] = {x};
                return eval_kernel(xv, kp) * phi(x);
            },
            -20.0, 20.0, {}, 1e-13);
        errors.push_back(std::abs(pairing - phi(0.0)));
    }
    for (std::size_t k = 0; k + 1 < gaps.size(); ++k) {
        const double slope = std::log(errors[k] / errors[k + 1]) / std::log(gaps[k] / gaps[k + 1]);
        CHECK(slope > 0.9);
    }
}
