#pragma once

#include <cmath>
#include <span>
#include <string>

#include "aniheat/diffusivity.hpp"
#include "aniheat/errors.hpp"
#include "aniheat/spd.hpp"

namespace aniheat {

/// Exponent arguments below this value make the Gaussian factor return
/// exactly 0 instead of a subnormal, for deterministic cross-platform output.
inline constexpr double kUnderflowExponent = -745.0;

/// Precomputed data of the heat kernel W(.; s, t): the accumulated increment
/// B = A(t) - A(s), its inverse and determinant. One instance serves many
/// point and frequency evaluations for the same time pair.
class KernelParams {
public:
    KernelParams(const DiffusivityPath& path, TimePair pair)
        : KernelParams(increment(path, pair), pair) {}

    /// Direct construction from the increment matrix.
    KernelParams(SpdMatrix b, TimePair pair)
        : pair_(pair), b_(std::move(b)), binv_(inverse_spd(b_)), det_b_(det_spd(b_)) {
        pair_.require_strict();
        verify_inverse();
    }

    int dim() const { return b_.dim(); }
    const TimePair& pair() const { return pair_; }
    const SpdMatrix& b() const { return b_; }
    const SpdMatrix& b_inverse() const { return binv_; }
    double det_b() const { return det_b_; }

    /// 1 / sqrt((4 pi)^n det B)
    double normalization() const {
        return 1.0 / std::sqrt(std::pow(4.0 * M_PI, dim()) * det_b_);
    }

private:
    void verify_inverse() const {
        const int n = b_.dim();
        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int k = 0; k < n; ++k) s += binv_(i, k) * b_(k, j);
                err = std::max(err, std::abs(s - (i == j ? 1.0 : 0.0)));
            }
        }
        if (err > 1e-10)
            throw NotPositiveDefinite("KernelParams: B_inv * B deviates from identity by " +
                                      std::to_string(err));
    }

    TimePair pair_;
    SpdMatrix b_;
    SpdMatrix binv_;
    double det_b_;
};

/// W(x; s, t) = exp(-<x, B^{-1} x>/4) / sqrt((4 pi)^n det B).
inline double eval_kernel(std::span<const double> x, const KernelParams& kp) {
    if (static_cast<int>(x.size()) != kp.dim()) throw Error("eval_kernel: point dimension mismatch");
    const double e = -0.25 * kp.b_inverse().quadratic_form(x);
    if (e < kUnderflowExponent) return 0.0;
    return kp.normalization() * std::exp(e);
}

/// Fourier symbol exp(-<B xi, xi>): the forward transform of W at frequency xi.
inline double fourier_symbol(std::span<const double> xi, const KernelParams& kp) {
    if (static_cast<int>(xi.size()) != kp.dim()) throw Error("fourier_symbol: frequency dimension mismatch");
    const double e = -kp.b().quadratic_form(xi);
    if (e < kUnderflowExponent) return 0.0;
    return std::exp(e);
}

/// ||W(.; s, t)||_p = p^{-n/2p} ((4 pi)^n det B)^{-(p-1)/2p}, with the p = inf
/// limit equal to the kernel peak 1 / sqrt((4 pi)^n det B).
inline double kernel_lp_norm(double p, const KernelParams& kp) {
    if (!(p >= 1.0)) throw InvalidExponent("kernel_lp_norm: requires p >= 1");
    const double n = static_cast<double>(kp.dim());
    const double base = std::pow(4.0 * M_PI, n) * kp.det_b();
    if (std::isinf(p)) return 1.0 / std::sqrt(base);
    return 1.0 / (std::pow(p, n / (2.0 * p)) * std::pow(base, (p - 1.0) / (2.0 * p)));
}

} // namespace aniheat
