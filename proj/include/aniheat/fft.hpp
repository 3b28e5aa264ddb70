#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "aniheat/errors.hpp"

namespace aniheat {

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Twiddle table exp(-2 pi i j / n), j < n/2, each entry from one direct
/// trig evaluation so roundoff stays at the ulp level.
inline std::vector<std::complex<double>> twiddles(std::size_t n) {
    std::vector<std::complex<double>> w(n / 2);
    for (std::size_t j = 0; j < n / 2; ++j) {
        const double ang = -2.0 * M_PI * static_cast<double>(j) / static_cast<double>(n);
        w[j] = {std::cos(ang), std::sin(ang)};
    }
    return w;
}

inline void fft_inplace(std::complex<double>* a, std::size_t n,
                        const std::vector<std::complex<double>>& w, bool inverse) {
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> tw = w[k * stride];
                if (inverse) tw = std::conj(tw);
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * tw;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) a[i] *= inv;
    }
}

} // namespace detail

/// In-place FFT of a power-of-two-sized complex vector. The inverse carries
/// the 1/n factor so forward followed by inverse is the identity.
inline void fft(std::vector<std::complex<double>>& a, bool inverse = false) {
    if (!detail::is_pow2(a.size())) throw Error("fft: size must be a power of two");
    const auto w = detail::twiddles(a.size());
    detail::fft_inplace(a.data(), a.size(), w, inverse);
}

/// FFT along every axis of a row-major dim-dimensional array with n points
/// per axis (total size n^dim).
inline void fft_nd(std::vector<std::complex<double>>& a, int dim, std::size_t n, bool inverse = false) {
    if (!detail::is_pow2(n)) throw Error("fft_nd: points per axis must be a power of two");
    std::size_t total = 1;
    for (int d = 0; d < dim; ++d) total *= n;
    if (a.size() != total) throw Error("fft_nd: size mismatch");
    const auto w = detail::twiddles(n);
    std::vector<std::complex<double>> line(n);
    // Axis d has stride n^(dim-1-d) in row-major order.
    std::size_t stride = total / n;
    for (int d = 0; d < dim; ++d) {
        const std::size_t block = stride * n;
        for (std::size_t base = 0; base < total; base += block) {
            for (std::size_t off = 0; off < stride; ++off) {
                std::complex<double>* p = a.data() + base + off;
                if (stride == 1) {
                    detail::fft_inplace(p, n, w, inverse);
                } else {
                    for (std::size_t k = 0; k < n; ++k) line[k] = p[k * stride];
                    detail::fft_inplace(line.data(), n, w, inverse);
                    for (std::size_t k = 0; k < n; ++k) p[k * stride] = line[k];
                }
            }
        }
        stride /= n;
    }
}

} // namespace aniheat
