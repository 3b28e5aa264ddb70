#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "aniheat/errors.hpp"

namespace aniheat {

inline constexpr int kMaxSpdDim = 8;

/// Small dense symmetric matrix, intended positive definite. Construction
/// symmetrizes ((M + M^T)/2); definiteness is verified by the operations
/// that require it (cholesky, det_spd, inverse_spd).
class SpdMatrix {
public:
    explicit SpdMatrix(int dim) : dim_(check_dim(dim)), m_(static_cast<std::size_t>(dim) * dim, 0.0) {}

    SpdMatrix(int dim, std::span<const double> entries) : SpdMatrix(dim) {
        if (entries.size() != m_.size())
            throw Error("SpdMatrix: expected " + std::to_string(m_.size()) + " entries, got " +
                        std::to_string(entries.size()));
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j)
                m_[idx(i, j)] = 0.5 * (entries[idx(i, j)] + entries[idx(j, i)]);
        for (double v : m_)
            if (!std::isfinite(v)) throw Error("SpdMatrix: non-finite entry");
    }

    SpdMatrix(int dim, std::initializer_list<double> entries)
        : SpdMatrix(dim, std::span<const double>(entries.begin(), entries.size())) {}

    static SpdMatrix identity(int dim) {
        SpdMatrix m(dim);
        for (int i = 0; i < dim; ++i) m.m_[m.idx(i, i)] = 1.0;
        return m;
    }

    static SpdMatrix diagonal(std::span<const double> d) {
        SpdMatrix m(static_cast<int>(d.size()));
        for (int i = 0; i < m.dim_; ++i) m.m_[m.idx(i, i)] = d[static_cast<std::size_t>(i)];
        return m;
    }

    static SpdMatrix diagonal(std::initializer_list<double> d) {
        return diagonal(std::span<const double>(d.begin(), d.size()));
    }

    int dim() const { return dim_; }
    double operator()(int i, int j) const { return m_[idx(i, j)]; }
    const std::vector<double>& entries() const { return m_; }

    void set(int i, int j, double v) { m_[idx(i, j)] = v; m_[idx(j, i)] = v; }

    SpdMatrix& operator+=(const SpdMatrix& o) {
        require_same_dim(o);
        for (std::size_t k = 0; k < m_.size(); ++k) m_[k] += o.m_[k];
        return *this;
    }
    SpdMatrix& operator-=(const SpdMatrix& o) {
        require_same_dim(o);
        for (std::size_t k = 0; k < m_.size(); ++k) m_[k] -= o.m_[k];
        return *this;
    }
    SpdMatrix& operator*=(double c) {
        for (double& v : m_) v *= c;
        return *this;
    }

    friend SpdMatrix operator+(SpdMatrix a, const SpdMatrix& b) { return a += b; }
    friend SpdMatrix operator-(SpdMatrix a, const SpdMatrix& b) { return a -= b; }
    friend SpdMatrix operator*(SpdMatrix a, double c) { return a *= c; }
    friend SpdMatrix operator*(double c, SpdMatrix a) { return a *= c; }

    /// y = M x
    void apply(std::span<const double> x, std::span<double> y) const {
        for (int i = 0; i < dim_; ++i) {
            double s = 0.0;
            for (int j = 0; j < dim_; ++j) s += m_[idx(i, j)] * x[static_cast<std::size_t>(j)];
            y[static_cast<std::size_t>(i)] = s;
        }
    }

    /// <x, M x>
    double quadratic_form(std::span<const double> x) const {
        double s = 0.0;
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j)
                s += x[static_cast<std::size_t>(i)] * m_[idx(i, j)] * x[static_cast<std::size_t>(j)];
        return s;
    }

    double max_diagonal() const {
        double d = m_[0];
        for (int i = 1; i < dim_; ++i) d = std::max(d, m_[idx(i, i)]);
        return d;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : m_) s += v * v;
        return std::sqrt(s);
    }

    double max_abs() const {
        double s = 0.0;
        for (double v : m_) s = std::max(s, std::abs(v));
        return s;
    }

private:
    static int check_dim(int dim) {
        if (dim < 1 || dim > kMaxSpdDim)
            throw Error("SpdMatrix: dim must be in [1, " + std::to_string(kMaxSpdDim) + "]");
        return dim;
    }
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(j);
    }
    void require_same_dim(const SpdMatrix& o) const {
        if (o.dim_ != dim_) throw Error("SpdMatrix: dimension mismatch");
    }

    int dim_;
    std::vector<double> m_;
};

/// Lower-triangular Cholesky factor, row-major with zeros above the diagonal.
struct LowerTriangular {
    int dim = 0;
    std::vector<double> entries;

    double operator()(int i, int j) const {
        return entries[static_cast<std::size_t>(i) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(j)];
    }

    /// Solves L y = b in place.
    void forward_solve(std::span<double> b) const {
        for (int i = 0; i < dim; ++i) {
            double s = b[static_cast<std::size_t>(i)];
            for (int k = 0; k < i; ++k) s -= (*this)(i, k) * b[static_cast<std::size_t>(k)];
            b[static_cast<std::size_t>(i)] = s / (*this)(i, i);
        }
    }

    /// Solves L^T y = b in place.
    void backward_solve(std::span<double> b) const {
        for (int i = dim - 1; i >= 0; --i) {
            double s = b[static_cast<std::size_t>(i)];
            for (int k = i + 1; k < dim; ++k) s -= (*this)(k, i) * b[static_cast<std::size_t>(k)];
            b[static_cast<std::size_t>(i)] = s / (*this)(i, i);
        }
    }
};

/// Pivot threshold separating genuine degeneracy from roundoff: a pivot is
/// accepted while it exceeds 1e-13 times the largest diagonal entry.
inline double spd_pivot_tolerance(const SpdMatrix& m) {
    return 1e-13 * std::max(m.max_diagonal(), 0.0);
}

inline LowerTriangular cholesky(const SpdMatrix& m) {
    const int n = m.dim();
    const double tol = spd_pivot_tolerance(m);
    LowerTriangular l;
    l.dim = n;
    l.entries.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    auto at = [&](int i, int j) -> double& {
        return l.entries[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
    };
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = m(i, j);
            for (int k = 0; k < j; ++k) s -= at(i, k) * at(j, k);
            if (i == j) {
                if (!(s > tol))
                    throw NotPositiveDefinite("cholesky: matrix is not positive definite (pivot " +
                                              std::to_string(s) + " at row " + std::to_string(i) +
                                              " below tolerance)");
                at(i, i) = std::sqrt(s);
            } else {
                at(i, j) = s / at(j, j);
            }
        }
    }
    return l;
}

inline bool is_positive_definite(const SpdMatrix& m) {
    try {
        cholesky(m);
        return true;
    } catch (const NotPositiveDefinite&) {
        return false;
    }
}

/// Determinant as the product of squared Cholesky pivots; strictly positive.
inline double det_spd(const SpdMatrix& m) {
    const LowerTriangular l = cholesky(m);
    double d = 1.0;
    for (int i = 0; i < m.dim(); ++i) d *= l(i, i) * l(i, i);
    return d;
}

inline SpdMatrix inverse_spd(const SpdMatrix& m) {
    const int n = m.dim();
    const LowerTriangular l = cholesky(m);
    std::vector<double> inv(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    std::vector<double> col(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        std::fill(col.begin(), col.end(), 0.0);
        col[static_cast<std::size_t>(j)] = 1.0;
        l.forward_solve(col);
        l.backward_solve(col);
        for (int i = 0; i < n; ++i)
            inv[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] =
                col[static_cast<std::size_t>(i)];
    }
    return SpdMatrix(n, inv); // constructor symmetrizes the roundoff skew
}

/// All eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, ascending.
/// Convergence: off-diagonal Frobenius norm below 1e-12 relative to the
/// matrix scale.
inline std::vector<double> jacobi_eigenvalues(const SpdMatrix& m, int max_sweeps = 64) {
    const int n = m.dim();
    std::vector<double> a = m.entries();
    auto at = [&](int i, int j) -> double& {
        return a[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
    };
    const double scale = std::max(m.frobenius_norm(), 1e-300);
    auto off_norm = [&]() {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) s += at(i, j) * at(i, j);
        return std::sqrt(s);
    };
    int sweep = 0;
    while (off_norm() > 1e-12 * scale) {
        if (++sweep > max_sweeps)
            throw NoConvergence("jacobi_eigenvalues: no convergence after " + std::to_string(max_sweeps) +
                                " sweeps");
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(at(p, q)) <= 1e-300) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = at(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

inline double min_eigenvalue(const SpdMatrix& m) { return jacobi_eigenvalues(m).front(); }

inline double max_eigenvalue(const SpdMatrix& m) { return jacobi_eigenvalues(m).back(); }

} // namespace aniheat
