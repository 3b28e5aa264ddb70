#pragma once

#include <cmath>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "aniheat/errors.hpp"
#include "aniheat/quadrature.hpp"

namespace aniheat {

namespace detail {

/// Normalization and cumulative table of the compact bump profile
/// psi(t) = c exp(-1/(1-t^2)) on (-1, 1). The cumulative is tabulated once
/// with node derivatives, then evaluated by cubic Hermite interpolation.
struct BumpTables {
    double norm = 0.0;
    std::vector<double> cumulative;
    std::vector<double> density;
    static constexpr int kNodes = 8193;

    BumpTables() {
        auto raw = [](double t) {
            const double s = 1.0 - t * t;
            return s > 0.0 ? std::exp(-1.0 / s) : 0.0;
        };
        const double mass = integrate_adaptive(raw, -1.0, 1.0, {}, 1e-14, 31);
        norm = 1.0 / mass;
        cumulative.resize(kNodes);
        density.resize(kNodes);
        const double h = 2.0 / (kNodes - 1);
        cumulative[0] = 0.0;
        density[0] = 0.0;
        const GaussRule& rule = gauss_rule(15);
        for (int i = 1; i < kNodes; ++i) {
            const double a = -1.0 + (i - 1) * h, b = -1.0 + i * h;
            double panel = 0.0;
            for (std::size_t k = 0; k < rule.nodes.size(); ++k)
                panel += rule.weights[k] * raw(0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[k]);
            cumulative[i] = cumulative[i - 1] + 0.5 * (b - a) * panel * norm;
            density[i] = raw(-1.0 + i * h) * norm;
        }
    }

    double cdf(double x) const {
        if (x <= -1.0) return 0.0;
        if (x >= 1.0) return 1.0;
        const double h = 2.0 / (kNodes - 1);
        const double u = (x + 1.0) / h;
        const int i = std::min(static_cast<int>(u), kNodes - 2);
        const double s = u - i;
        const double y0 = cumulative[i], y1 = cumulative[i + 1];
        const double d0 = density[i] * h, d1 = density[i + 1] * h;
        const double s2 = s * s, s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * d0 +
               (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * d1;
    }
};

inline const BumpTables& bump_tables() {
    static const BumpTables tables;
    return tables;
}

} // namespace detail

/// Unit-mass mollifier profile psi with the scaling psi_eps(t) = psi(t/eps)/eps.
class MollifierSpec {
public:
    enum class Profile { Gaussian, Bump };

    static MollifierSpec gaussian() { return MollifierSpec(Profile::Gaussian, 1.0); }
    static MollifierSpec bump() { return MollifierSpec(Profile::Bump, 1.0); }

    /// The amplitude rescales the profile; anything but unit mass is rejected.
    MollifierSpec(Profile profile, double amplitude) : profile_(profile) {
        const double mass = amplitude; // profiles are normalized, so mass = amplitude
        if (std::abs(mass - 1.0) > 1e-12)
            throw NotNormalizable("MollifierSpec: profile mass " + std::to_string(mass) +
                                  " deviates from 1");
    }

    Profile profile() const { return profile_; }

    double density(double t) const {
        if (profile_ == Profile::Gaussian)
            return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI);
        const double s = 1.0 - t * t;
        return s > 0.0 ? detail::bump_tables().norm * std::exp(-1.0 / s) : 0.0;
    }

    double cumulative(double t) const {
        if (profile_ == Profile::Gaussian) return 0.5 * std::erfc(-t / std::sqrt(2.0));
        return detail::bump_tables().cdf(t);
    }

    double peak() const { return density(0.0); }

    /// Radius beyond which the profile is negligible at the 1e-16 level.
    double support_radius() const { return profile_ == Profile::Gaussian ? 10.0 : 1.0; }

    double density_scaled(double t, double eps) const { return density(t / eps) / eps; }
    double cumulative_scaled(double t, double eps) const { return cumulative(t / eps); }

private:
    Profile profile_;
};

/// Record of SPD repairs applied to a mollified coefficient (diagonal shifts
/// restoring the 1e-10 eigenvalue margin lost to quadrature roundoff near
/// delta components).
struct MollifierRepairLog {
    std::mutex mutex;
    std::vector<std::pair<double, double>> shifts; // (time, shift)

    void record(double t, double shift) {
        std::lock_guard<std::mutex> lock(mutex);
        shifts.emplace_back(t, shift);
    }
    std::size_t count() {
        std::lock_guard<std::mutex> lock(mutex);
        return shifts.size();
    }
};

} // namespace aniheat
