#pragma once

// Separated Robin eigenfunctions on the cylinder (unit disk) × (0, 5π/2),
// the angular family Φ(x, θ), its maximum locus, and discrete Robin spectra.

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "robinwave/error.hpp"
#include "robinwave/grid.hpp"
#include "robinwave/linalg.hpp"
#include "robinwave/models.hpp"
#include "robinwave/specfun.hpp"

namespace robinwave::eigen {

inline constexpr double kAxialLength = 2.5 * std::numbers::pi;

/// paper: H = cos x₃ - sin x₃; corrected: H = cos x₃ + sin x₃.
enum class AxialVariant { paper, corrected };

inline AxialVariant parse_axial_variant(std::string_view name) {
    if (name == "paper") return AxialVariant::paper;
    if (name == "corrected") return AxialVariant::corrected;
    throw ConfigError("unknown axial variant '" + std::string(name) + "'");
}

inline std::string_view axial_variant_name(AxialVariant v) { return v == AxialVariant::paper ? "paper" : "corrected"; }

inline double axial_h(AxialVariant v, double x) {
    return v == AxialVariant::paper ? std::cos(x) - std::sin(x) : std::cos(x) + std::sin(x);
}

inline double axial_dh(AxialVariant v, double x) {
    return v == AxialVariant::paper ? -std::sin(x) - std::cos(x) : -std::sin(x) + std::cos(x);
}

inline double axial_d2h(AxialVariant v, double x) { return -axial_h(v, x); }

struct SeparatedEigenpair {
    AxialVariant variant = AxialVariant::paper;
    double y1 = 0.0;        // first positive root of J₀
    double j1_max = 0.0;    // first maximum of J₁ (j′₁,₁)
    double mu2 = 0.0;       // radial eigenvalue y₁²
    double upsilon1 = 1.0;  // axial eigenvalue of H
    double a0 = 0.0;        // μ₂ + υ₁
    double c = 1.0;         // normalises ∫ψ² over the cylinder

    [[nodiscard]] double radial(double r) const { return specfun::bessel_j1(y1 * r); }
    [[nodiscard]] double axial(double x3) const { return axial_h(variant, x3); }
};

/// ∫₀¹ J₁(y r)² r dr by adaptive Simpson.
inline double radial_mass(double y) {
    auto f = [y](double r) {
        const double j = specfun::bessel_j1(y * r);
        return j * j * r;
    };
    return integrate_simpson(f, 0.0, 1.0, 1e-14);
}

inline double axial_mass(AxialVariant v) {
    auto f = [v](double x) {
        const double h = axial_h(v, x);
        return h * h;
    };
    return integrate_simpson(f, 0.0, kAxialLength, 1e-13);
}

inline SeparatedEigenpair make_separated_pair(AxialVariant variant) {
    SeparatedEigenpair p;
    p.variant = variant;
    p.y1 = specfun::find_root([](double y) { return specfun::bessel_j0(y); }, 2.0, 3.0, 1e-15);
    p.j1_max = specfun::find_root([](double y) { return specfun::bessel_j1_prime(y); }, 1.0, 3.0, 1e-15);
    p.mu2 = p.y1 * p.y1;
    p.upsilon1 = 1.0;
    p.a0 = p.mu2 + p.upsilon1;
    // ∫ψ₁² = c² · ∫J² r dr · ∫cos²ϑ dϑ · ∫H² dx₃.
    p.c = 1.0 / std::sqrt(radial_mass(p.y1) * std::numbers::pi * axial_mass(variant));
    return p;
}

/// Residual r²J'' + rJ' + (y²r² - 1)J of the radial profile J(r) = J₁(y r).
inline double radial_ode_residual(const SeparatedEigenpair& p, double r) {
    const double z = p.y1 * r;
    const double j1 = specfun::bessel_j1(z);
    const double j0 = specfun::bessel_j0(z);
    // J₁' = J₀ - J₁/z; J₁'' = -J₁ - J₁'/z + J₁/z².
    const double d1 = j0 - j1 / z;
    const double d2 = -j1 - d1 / z + j1 / (z * z);
    return r * r * p.y1 * p.y1 * d2 + r * p.y1 * d1 + (p.y1 * p.y1 * r * r - 1.0) * j1;
}

/// ∂_rJ + J at r = 1; reduces to y₁J₀(y₁).
inline double radial_robin_residual(const SeparatedEigenpair& p) {
    return p.y1 * specfun::bessel_j1_prime(p.y1) + specfun::bessel_j1(p.y1);
}

struct CriticalPoint {
    double x = 0.0;
    double second_derivative = 0.0;
    bool is_max = false;
};

struct AxialReport {
    AxialVariant variant = AxialVariant::paper;
    double ode_residual = 0.0;  // max |-H'' - H| on the sample grid
    double bc_left = 0.0;       // -H'(0) + H(0)
    double bc_right = 0.0;      // H'(L) + H(L)
    std::vector<CriticalPoint> critical_points;
    int interior_maxima = 0;
    double principal_axial_eigenvalue = 0.0;  // smallest Robin eigenvalue on (0, L)
};

/// Smallest eigenvalue of -H'' = υH, -H'(0) + H(0) = 0, H'(L) + H(L) = 0:
/// υ = μ² with μ the first positive root of (1 - μ²) sin(μL) + 2μ cos(μL).
inline double principal_interval_robin_eigenvalue(double length) {
    const auto f = [length](double mu) {
        return (1.0 - mu * mu) * std::sin(mu * length) + 2.0 * mu * std::cos(mu * length);
    };
    const double step = 1e-3 / length;
    double lo = step;
    double f_lo = f(lo);
    for (int k = 0; k < 1000000; ++k) {
        const double hi = lo + step;
        const double f_hi = f(hi);
        if (f_lo * f_hi < 0.0) {
            const double mu = specfun::find_root(f, specfun::RootBracket{lo, hi, f_lo, f_hi}, 1e-15);
            return mu * mu;
        }
        lo = hi;
        f_lo = f_hi;
    }
    throw NumericalError("principal_interval_robin_eigenvalue: no root found");
}

inline AxialReport axial_profile_check(AxialVariant v) {
    AxialReport rep;
    rep.variant = v;
    constexpr int samples = 10000;
    for (int k = 0; k <= samples; ++k) {
        const double x = kAxialLength * k / samples;
        rep.ode_residual = std::max(rep.ode_residual, std::fabs(-axial_d2h(v, x) - axial_h(v, x)));
    }
    rep.bc_left = -axial_dh(v, 0.0) + axial_h(v, 0.0);
    rep.bc_right = axial_dh(v, kAxialLength) + axial_h(v, kAxialLength);

    const auto dh = [v](double x) { return axial_dh(v, x); };
    double lo = 0.0;
    double f_lo = dh(lo);
    for (int k = 1; k <= samples; ++k) {
        const double hi = kAxialLength * k / samples;
        const double f_hi = dh(hi);
        if (f_lo * f_hi < 0.0) {
            CriticalPoint cp;
            cp.x = specfun::find_root(dh, specfun::RootBracket{lo, hi, f_lo, f_hi}, 1e-15);
            cp.second_derivative = axial_d2h(v, cp.x);
            cp.is_max = cp.second_derivative < 0.0;
            if (cp.is_max) ++rep.interior_maxima;
            rep.critical_points.push_back(cp);
        }
        lo = hi;
        f_lo = f_hi;
    }
    rep.principal_axial_eigenvalue = principal_interval_robin_eigenvalue(kAxialLength);
    return rep;
}

/// Φ(x, θ) = c J(r) cos(ϑ - θ) H(x₃).
inline double phi_field(double r, double vartheta, double x3, double theta, const SeparatedEigenpair& p) {
    if (!(r >= 0.0 && r <= 1.0) || !(x3 >= 0.0 && x3 <= kAxialLength) || !std::isfinite(vartheta) ||
        !std::isfinite(theta)) {
        std::ostringstream msg;
        msg << "phi_field: point (r=" << r << ", x3=" << x3 << ") outside the cylinder";
        throw DomainError(msg.str());
    }
    return p.c * p.radial(r) * std::cos(vartheta - theta) * p.axial(x3);
}

struct MaxLocus {
    double r_star = 0.0;
    double x3_star = 0.0;
    double m_value = 0.0;  // M(θ), constant for this construction

    [[nodiscard]] double M(double /*theta*/) const { return m_value; }
    [[nodiscard]] std::array<double, 3> point(double theta) const {
        return {r_star * std::cos(theta), r_star * std::sin(theta), x3_star};
    }
};

/// Radial maximum at y₁r* = j′₁,₁; axial maximum at the first interior
/// maximum of H.
inline MaxLocus max_locus(const SeparatedEigenpair& p) {
    const auto rep = axial_profile_check(p.variant);
    MaxLocus loc;
    loc.r_star = p.j1_max / p.y1;
    bool found = false;
    for (const auto& cp : rep.critical_points) {
        if (cp.is_max) {
            loc.x3_star = cp.x;
            found = true;
            break;
        }
    }
    if (!found) throw ConsistencyError("max_locus: axial profile has no interior maximum");
    loc.m_value = phi_field(loc.r_star, 0.0, loc.x3_star, 0.0, p);
    return loc;
}

struct HessianReport {
    std::array<std::array<double, 3>, 3> hessian{};
    std::array<double, 3> eigenvalues{};
    double gradient_norm = 0.0;
    bool negative_definite = false;
};

/// Central finite-difference Hessian of Φ(·, θ) at x(θ) in Cartesian
/// coordinates (x₁, x₂, x₃).
inline HessianReport hessian_at_max(double theta, const SeparatedEigenpair& p, const MaxLocus& loc) {
    const auto phi = [&](const std::array<double, 3>& x) {
        return phi_field(std::hypot(x[0], x[1]), std::atan2(x[1], x[0]), x[2], theta, p);
    };
    const auto x0 = loc.point(theta);
    HessianReport rep;

    constexpr double hg = 1e-5;
    double g2 = 0.0;
    for (int i = 0; i < 3; ++i) {
        auto xp = x0;
        auto xm = x0;
        xp[i] += hg;
        xm[i] -= hg;
        const double gi = (phi(xp) - phi(xm)) / (2.0 * hg);
        g2 += gi * gi;
    }
    rep.gradient_norm = std::sqrt(g2);
    if (rep.gradient_norm > 1e-6) {
        std::ostringstream msg;
        msg << "hessian_at_max: gradient norm " << rep.gradient_norm << " at the locus";
        throw ConsistencyError(msg.str());
    }

    constexpr double h = 1e-4;
    const double f0 = phi(x0);
    for (int i = 0; i < 3; ++i) {
        for (int j = i; j < 3; ++j) {
            double val = 0.0;
            if (i == j) {
                auto xp = x0;
                auto xm = x0;
                xp[i] += h;
                xm[i] -= h;
                val = (phi(xp) - 2.0 * f0 + phi(xm)) / (h * h);
            } else {
                auto pp = x0, pm = x0, mp = x0, mm = x0;
                pp[i] += h, pp[j] += h;
                pm[i] += h, pm[j] -= h;
                mp[i] -= h, mp[j] += h;
                mm[i] -= h, mm[j] -= h;
                val = (phi(pp) - phi(pm) - phi(mp) + phi(mm)) / (4.0 * h * h);
            }
            rep.hessian[i][j] = val;
            rep.hessian[j][i] = val;
        }
    }
    rep.eigenvalues = linalg::symmetric_eigenvalues<3>(rep.hessian);
    rep.negative_definite = rep.eigenvalues[2] < -1e-8;
    return rep;
}

struct SpectrumCluster {
    double eigenvalue = 0.0;  // cluster mean
    int multiplicity = 0;
    double residual = 0.0;  // worst member residual
};

struct SpectrumReport {
    std::vector<double> eigenvalues;
    std::vector<double> residuals;
    std::vector<SpectrumCluster> clusters;
};

/// Groups sorted eigenvalues whose relative gap is below `rel_gap`.
inline std::vector<SpectrumCluster> cluster_eigenvalues(const std::vector<double>& values,
                                                        const std::vector<double>& residuals, double rel_gap = 1e-4) {
    std::vector<SpectrumCluster> out;
    std::size_t i = 0;
    while (i < values.size()) {
        std::size_t j = i + 1;
        while (j < values.size() &&
               std::fabs(values[j] - values[j - 1]) <= rel_gap * std::max(std::fabs(values[j]), 1e-300)) {
            ++j;
        }
        SpectrumCluster c;
        c.multiplicity = static_cast<int>(j - i);
        for (std::size_t k = i; k < j; ++k) {
            c.eigenvalue += values[k];
            c.residual = std::max(c.residual, residuals[k]);
        }
        c.eigenvalue /= c.multiplicity;
        out.push_back(c);
        i = j;
    }
    return out;
}

/// Smallest k eigenvalues of the discrete Robin Laplacian on `g`.
inline SpectrumReport robin_spectrum(const Grid& g, int k, const linalg::InverseIterationOptions& opt = {}) {
    if (k < 1 || k > 10) throw ConfigError("robin_spectrum: k must lie in [1, 10]");
    const auto pairs = linalg::smallest_eigenpairs(linalg::robin_form_matrix(g), g.cell_weights, k, opt);
    SpectrumReport rep;
    for (const auto& p : pairs) {
        rep.eigenvalues.push_back(p.value);
        rep.residuals.push_back(p.residual);
    }
    rep.clusters = cluster_eigenvalues(rep.eigenvalues, rep.residuals);
    return rep;
}

inline nlohmann::json spectrum_to_json(const SpectrumReport& rep) {
    auto arr = nlohmann::json::array();
    for (const auto& c : rep.clusters) {
        arr.push_back({{"eigenvalue", c.eigenvalue}, {"multiplicity", c.multiplicity}, {"residual", c.residual}});
    }
    return arr;
}

inline nlohmann::json axial_report_to_json(const AxialReport& rep) {
    auto crit = nlohmann::json::array();
    for (const auto& cp : rep.critical_points) {
        crit.push_back({{"x3", cp.x}, {"second_derivative", cp.second_derivative}, {"is_max", cp.is_max}});
    }
    return {{"variant", axial_variant_name(rep.variant)},
            {"ode_residual", rep.ode_residual},
            {"bc_residual_left", rep.bc_left},
            {"bc_residual_right", rep.bc_right},
            {"critical_points", crit},
            {"interior_maxima", rep.interior_maxima},
            {"principal_axial_eigenvalue", rep.principal_axial_eigenvalue},
            {"axial_eigenvalue_used", 1.0}};
}

}  // namespace robinwave::eigen
